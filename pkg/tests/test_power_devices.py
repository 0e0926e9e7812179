"""Behavioral HEMT and diode laws: regions, continuity, gate charge."""

import numpy as np
import pytest

from sawsim.errors import ConfigError
from sawsim.power_devices import (
    DiodeSpec,
    GateChargeState,
    HemtSpec,
    diode_current,
    diode_current_and_deriv,
    hemt_channel_current,
    hemt_channel_current_and_derivs,
    hemt_gate_charge,
    hemt_gate_charge_step,
)


class TestChannelCurrent:
    def test_off_state_exact_zero(self):
        spec = HemtSpec()
        assert hemt_channel_current(spec, 0.0, 10.0) == 0.0
        assert hemt_channel_current(spec, spec.v_th, 10.0) == 0.0
        assert hemt_channel_current(spec, spec.v_th - 1e-12, 400.0) == 0.0

    def test_ohmic_region(self):
        spec = HemtSpec(v_th=1.7, g_m=1.0, r_on=0.15)
        i = hemt_channel_current(spec, 6.0, 0.1)
        assert i == pytest.approx(0.1 / 0.15, rel=1e-9)

    def test_saturation_region(self):
        spec = HemtSpec(v_th=1.7, g_m=1.0, r_on=0.15)
        i = hemt_channel_current(spec, 3.0, 20.0)
        assert i == pytest.approx(1.0 * (3.0 - 1.7), rel=1e-9)

    def test_reverse_conduction_example(self):
        # Freewheeling drop of the gate-shorted low-side switch.
        spec = HemtSpec(reverse_offset=1.7, reverse_slope=3.24)
        i = hemt_channel_current(spec, 0.0, -3.94)
        assert abs(i) == pytest.approx(0.691, rel=0.01)
        assert i < 0  # source -> drain

    def test_reverse_needs_enough_drop(self):
        spec = HemtSpec(reverse_offset=2.2)
        assert hemt_channel_current(spec, 0.0, -1.0) == 0.0

    def test_reverse_drop_grows_as_gate_falls(self):
        # Fixed reverse current requires more |v_ds| at lower v_gs.
        spec = HemtSpec()

        def drop_at(v_gs, i_target=0.7):
            lo, hi = -0.01, -30.0
            for _ in range(60):
                mid = 0.5 * (lo + hi)
                if -hemt_channel_current(spec, v_gs, mid) < i_target:
                    lo = mid
                else:
                    hi = mid
            return -mid

        drops = [drop_at(v) for v in (2.0, 1.0, 0.0)]
        assert drops[0] < drops[1] < drops[2]

    def test_continuity_in_both_arguments(self):
        spec = HemtSpec()
        rng = np.random.RandomState(5)
        for _ in range(200):
            v_gs = rng.uniform(-1.0, 7.0)
            v_ds = rng.uniform(-6.0, 30.0)
            base = hemt_channel_current(spec, v_gs, v_ds)
            for dgs, dds in ((1e-7, 0), (0, 1e-7), (-1e-7, 0), (0, -1e-7)):
                step = hemt_channel_current(spec, v_gs + dgs, v_ds + dds)
                assert abs(step - base) < 1e-4

    def test_derivatives_match_finite_differences(self):
        spec = HemtSpec()
        rng = np.random.RandomState(6)
        h = 1e-7
        checked = 0
        for _ in range(300):
            v_gs = rng.uniform(-0.5, 7.0)
            v_ds = rng.uniform(-6.0, 30.0)
            i0, dgs, dds = hemt_channel_current_and_derivs(spec, v_gs, v_ds)
            # Skip points straddling a region kink within the stencil.
            fgs = (hemt_channel_current(spec, v_gs + h, v_ds)
                   - hemt_channel_current(spec, v_gs - h, v_ds)) / (2 * h)
            fds = (hemt_channel_current(spec, v_gs, v_ds + h)
                   - hemt_channel_current(spec, v_gs, v_ds - h)) / (2 * h)
            if abs(fgs - dgs) < 1e-3 and abs(fds - dds) < 1e-3:
                checked += 1
        assert checked > 240  # most sampled points are kink-free

    def test_value_consistency_between_variants(self):
        spec = HemtSpec()
        rng = np.random.RandomState(8)
        for _ in range(100):
            v_gs = rng.uniform(-1.0, 7.0)
            v_ds = rng.uniform(-6.0, 30.0)
            a = hemt_channel_current(spec, v_gs, v_ds)
            b = hemt_channel_current_and_derivs(spec, v_gs, v_ds)[0]
            assert a == b


class TestGateCharge:
    def test_two_level_charge(self):
        spec = HemtSpec(c_gd_low_vds=300e-12, c_gd_high_vds=10e-12,
                        c_gd_crossover=2.0)
        assert hemt_gate_charge(spec, 1.0) == pytest.approx(300e-12)
        assert hemt_gate_charge(spec, 2.0) == pytest.approx(600e-12)
        assert hemt_gate_charge(spec, 12.0) == pytest.approx(
            600e-12 + 10 * 10e-12
        )

    def test_linear_ramp_into_cgs_only(self):
        # v_ds frozen and negligible c_gd: slope i / c_gs.
        spec = HemtSpec(c_gs=100e-12, c_gd_low_vds=1e-24,
                        c_gd_high_vds=1e-24)
        st = GateChargeState()
        i, dt = 1e-3, 1e-10
        for _ in range(100):
            st = hemt_gate_charge_step(spec, st, i, dt)
        assert st.v_gs == pytest.approx(i * 100 * dt / 100e-12, rel=1e-9)

    def test_miller_plateau_pins_gate(self):
        # Strong drain slew: the gate current is absorbed by c_gd.
        spec = HemtSpec(c_gs=100e-12, c_gd_low_vds=50e-12,
                        c_gd_high_vds=50e-12)
        st = GateChargeState(v_gs=3.0, v_ds=20.0)
        i_gate = 5e-3
        dv_ds_dt = -i_gate / 50e-12  # commutation slew matching the drive
        st2 = hemt_gate_charge_step(spec, st, i_gate, 1e-9, dv_ds_dt)
        assert st2.v_gs == pytest.approx(3.0, abs=1e-9)
        assert st2.v_ds < 20.0

    def test_zero_current_no_coupling(self):
        spec = HemtSpec()
        st = GateChargeState(v_gs=2.0, v_ds=10.0)
        st2 = hemt_gate_charge_step(spec, st, 0.0, 1e-9)
        assert st2 == st

    def test_charge_bookkeeping(self):
        # Injected charge equals the stored-charge change along the path.
        spec = HemtSpec(c_gs=100e-12, c_gd_low_vds=200e-12,
                        c_gd_high_vds=20e-12, c_gd_crossover=2.0)
        st = GateChargeState(v_gs=0.0, v_ds=25.0)
        i, dt = 2e-3, 1e-11
        total_q = 0.0
        for _ in range(20000):
            st = hemt_gate_charge_step(spec, st, i, dt, dv_ds_dt=-1e8)
            total_q += i * dt
        # Gate-plate charge change: c_gs part plus the mirror of the
        # drain-plate gate-drain charge.
        stored = (spec.c_gs * st.v_gs
                  + hemt_gate_charge(spec, 25.0 - 0.0)
                  - hemt_gate_charge(spec, st.v_ds - st.v_gs))
        assert stored == pytest.approx(total_q, rel=5e-3)


class TestDiode:
    def test_knee_zero(self):
        d = DiodeSpec(v_f=1.0, r_s=0.1)
        assert diode_current(d, 1.0) == 0.0

    def test_linear_conduction(self):
        d = DiodeSpec(v_f=1.0, r_s=0.1)
        assert diode_current(d, 2.0) == pytest.approx(10.0, rel=1e-12)

    def test_reverse_blocking(self):
        d = DiodeSpec(v_f=1.0, r_s=0.1)
        assert diode_current(d, -5.0) == 0.0

    def test_ideal_switch_mode_flagged(self):
        d = DiodeSpec(v_f=0.5, r_s=0.0)
        with pytest.raises(ConfigError):
            diode_current(d, 1.0)

    def test_deriv_consistency(self):
        d = DiodeSpec(v_f=0.8, r_s=0.05)
        i, g = diode_current_and_deriv(d, 1.3)
        assert i == pytest.approx(10.0)
        assert g == pytest.approx(20.0)

    def test_validation(self):
        with pytest.raises(ConfigError):
            DiodeSpec(v_f=-0.1)


def test_hemt_spec_validation():
    with pytest.raises(ConfigError):
        HemtSpec(c_gd_low_vds=1e-12, c_gd_high_vds=5e-12)
    with pytest.raises(ConfigError):
        HemtSpec(v_th=-1.0)
