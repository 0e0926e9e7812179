"""SAW delay-line model: passband calibration, delay, envelope filtering,
isolation tables, capacitance extraction, ratings and thermal scaling."""

import warnings

import numpy as np
import pytest

from sawsim.errors import ConfigError, OutOfRangeError
from sawsim.saw_device import (
    SawDeviceSpec,
    breakdown_voltage,
    center_frequency,
    delay,
    envelope_kernel_halfwidth,
    extract_isolation_capacitance,
    filter_envelope,
    isolation_capacitance,
    make_series_c_sweep,
    max_input_voltage,
    thermal_output_scale,
    touchstone_text,
    transfer_function,
)
from sawsim.signals import ComplexEnvelope, TimeGrid, Waveform, rise_time_10_90


class TestGeometry:
    def test_center_frequency(self, saw_spec):
        assert center_frequency(saw_spec) == pytest.approx(223e6, rel=1e-9)

    def test_pitch_doubling_halves_frequency(self, saw_spec):
        doubled = SawDeviceSpec(pitch=2 * saw_spec.pitch)
        assert center_frequency(doubled) == pytest.approx(
            center_frequency(saw_spec) / 2, rel=1e-12
        )

    def test_wavelength_is_twice_pitch(self, saw_spec):
        lam = saw_spec.saw_velocity / center_frequency(saw_spec)
        assert lam == pytest.approx(2 * saw_spec.pitch, rel=1e-12)

    def test_delay(self, saw_spec):
        assert delay(saw_spec) == pytest.approx(327.8e-9, rel=1e-3)

    def test_delay_linearity(self, saw_spec):
        d2 = SawDeviceSpec(gap=2.5e-3)
        assert delay(d2) == pytest.approx(2 * delay(saw_spec), rel=1e-12)
        assert delay(d2) == pytest.approx(655.6e-9, rel=1e-3)

    def test_spec_validation(self):
        with pytest.raises(ConfigError):
            SawDeviceSpec(peak_transmission_db=1.0)
        with pytest.raises(ConfigError):
            SawDeviceSpec(frac_bandwidth=1.5)
        with pytest.raises(ConfigError):
            SawDeviceSpec(isolation_cap_table=((0.5, 0.03), (1.0, 0.04)))


class TestTransferFunction:
    def test_peak_calibrated(self, saw_spec):
        h = transfer_function(saw_spec, center_frequency(saw_spec))
        assert 20 * np.log10(abs(h)) == pytest.approx(-5.12, abs=1e-9)

    def test_band_edges(self, saw_spec):
        # Half-power points sit 3.01 dB below the -5.12 dB peak.
        f_c = center_frequency(saw_spec)
        for f in (f_c - 11.15e6, f_c + 11.15e6):
            db = 20 * np.log10(abs(transfer_function(saw_spec, f)))
            assert db == pytest.approx(-8.12, abs=0.02)

    def test_far_out_of_band_rejection(self, saw_spec):
        f = 1.5 * center_frequency(saw_spec)
        assert 20 * np.log10(abs(transfer_function(saw_spec, f))) < -40.0

    def test_passivity_across_specs(self):
        rng = np.random.RandomState(11)
        for _ in range(20):
            spec = SawDeviceSpec(
                pitch=float(rng.uniform(2e-6, 20e-6)),
                pairs=int(rng.randint(5, 60)),
                gap=float(rng.uniform(0.2e-3, 3e-3)),
                peak_transmission_db=float(rng.uniform(-30.0, 0.0)),
                frac_bandwidth=float(rng.uniform(0.02, 0.4)),
            )
            f = center_frequency(spec) * np.linspace(0.3, 2.5, 4001)
            mags = np.abs(transfer_function(spec, f))
            assert np.max(mags) ** 2 <= 1.0 + 1e-12

    def test_calibration_tolerance(self, saw_spec):
        f = center_frequency(saw_spec) * np.linspace(0.9, 1.1, 20001)
        peak = np.max(np.abs(transfer_function(saw_spec, f)))
        assert 20 * np.log10(peak) == pytest.approx(-5.12, abs=0.01)

    def test_rejects_nonpositive_frequency(self, saw_spec):
        with pytest.raises(ConfigError):
            transfer_function(saw_spec, -1e6)


class TestFilterEnvelope:
    def _cw(self, saw, n=4000, dt=5e-10, amp=1.0):
        grid = TimeGrid(0.0, dt, n)
        return ComplexEnvelope(grid, center_frequency(saw),
                               amp * np.ones(n, dtype=complex))

    def test_cw_amplitude_and_delay(self, saw_spec):
        out = filter_envelope(saw_spec, self._cw(saw_spec))
        mag = np.abs(out.samples)
        mid = mag[len(mag) // 2]
        assert mid == pytest.approx(10 ** (-5.12 / 20), rel=1e-9)
        tau = delay(saw_spec)
        k_before = int(tau / out.grid.dt) - 1
        assert np.all(mag[:k_before] == 0.0)

    def test_zero_input(self, saw_spec):
        grid = TimeGrid(0.0, 5e-10, 1000)
        env = ComplexEnvelope(grid, 223e6, np.zeros(1000, complex))
        out = filter_envelope(saw_spec, env)
        assert np.all(out.samples == 0.0)

    def test_causality(self, saw_spec):
        # Step input at t = 0: output is identically zero before tau.
        out = filter_envelope(saw_spec, self._cw(saw_spec))
        tau = delay(saw_spec)
        k = int(np.floor(tau / out.grid.dt))
        assert np.max(np.abs(out.samples[:k])) <= 1e-9 * np.max(
            np.abs(out.samples)
        )

    def test_linearity(self, saw_spec):
        env1 = self._cw(saw_spec, amp=1.0)
        env2 = self._cw(saw_spec, amp=2.0)
        out1 = filter_envelope(saw_spec, env1)
        out2 = filter_envelope(saw_spec, env2)
        # Power-of-two scaling is bit-exact; general scaling to 1e-12.
        assert np.array_equal(out2.samples, 2.0 * out1.samples)
        out3 = filter_envelope(
            saw_spec, self._cw(saw_spec, amp=3.0)
        )
        np.testing.assert_allclose(out3.samples, 3.0 * out1.samples,
                                   rtol=1e-12, atol=1e-15)

    def test_step_rise_time_tracks_bandwidth(self, saw_spec):
        # Triangular kernel of half-width T: step rise 10-90 = 1.1056 T.
        out = filter_envelope(saw_spec, self._cw(saw_spec))
        w = Waveform(out.grid, np.abs(out.samples), "volt")
        tau = delay(saw_spec)
        rise = rise_time_10_90(w, window=(0.0, tau + 300e-9))
        T = envelope_kernel_halfwidth(saw_spec)
        assert rise == pytest.approx(1.1056 * T, rel=0.02)

    def test_out_of_band_carrier_rejected(self, saw_spec):
        grid = TimeGrid(0.0, 5e-10, 100)
        env = ComplexEnvelope(grid, 0.4 * 223e6, np.ones(100, complex))
        with pytest.raises(OutOfRangeError):
            filter_envelope(saw_spec, env)

    def test_grid_extended_by_tail(self, saw_spec):
        env = self._cw(saw_spec, n=1000)
        out = filter_envelope(saw_spec, env)
        assert out.grid.t0 == env.grid.t0
        assert out.grid.dt == env.grid.dt
        assert out.grid.n > env.grid.n

    def test_off_carrier_gain_matches_transfer_function(self, saw_spec):
        f_car = 223e6 + 8e6
        grid = TimeGrid(0.0, 5e-10, 6000)
        env = ComplexEnvelope(grid, f_car, np.ones(6000, complex))
        out = filter_envelope(saw_spec, env)
        mid = abs(out.samples[len(out.samples) // 2])
        assert mid == pytest.approx(abs(transfer_function(saw_spec, f_car)),
                                    rel=1e-6)


class TestIsolationCapacitance:
    def test_paper_anchor(self, saw_spec):
        assert isolation_capacitance(saw_spec, 1.25) == pytest.approx(
            0.032, rel=1e-12
        )

    def test_table_point_round_trip(self, saw_spec):
        for gap, cap in saw_spec.isolation_cap_table:
            assert isolation_capacitance(saw_spec, gap) == pytest.approx(
                cap, rel=1e-12
            )

    def test_log_linear_midpoint(self):
        spec = SawDeviceSpec(isolation_cap_table=((1.0, 0.04), (2.0, 0.01)))
        mid = isolation_capacitance(spec, 1.5)
        expected = np.exp(0.5 * (np.log(0.04) + np.log(0.01)))
        assert mid == pytest.approx(expected, rel=1e-12)
        assert 0.01 < mid < 0.04

    def test_extrapolation_refused(self, saw_spec):
        with pytest.raises(OutOfRangeError):
            isolation_capacitance(saw_spec, 3.0)

    def test_strictly_decreasing(self, saw_spec):
        gaps = np.linspace(0.5, 1.25, 16)
        caps = [isolation_capacitance(saw_spec, g) for g in gaps]
        assert all(b < a for a, b in zip(caps, caps[1:]))


class TestExtraction:
    def test_series_c_s21_magnitude(self):
        sweep = make_series_c_sweep(0.032e-12, np.array([82.5e6]))
        assert abs(sweep.s21[0]) == pytest.approx(1.66e-3, rel=0.01)
        assert 20 * np.log10(abs(sweep.s21[0])) == pytest.approx(-55.6,
                                                                 abs=0.1)

    def test_round_trip_anchor(self):
        freqs = np.linspace(80e6, 85e6, 51)
        sweep = make_series_c_sweep(0.032e-12, freqs)
        c = extract_isolation_capacitance(sweep)
        assert c == pytest.approx(0.032e-12, rel=1e-3)

    def test_open_circuit(self):
        freqs = np.linspace(80e6, 85e6, 51)
        sweep = make_series_c_sweep(0.0, freqs)
        assert extract_isolation_capacitance(sweep) == 0.0

    def test_round_trip_across_range(self):
        freqs = np.linspace(80e6, 85e6, 51)
        for c in np.geomspace(0.01e-12, 1e-12, 9):
            sweep = make_series_c_sweep(c, freqs)
            got = extract_isolation_capacitance(sweep)
            assert got == pytest.approx(c, rel=1e-3)

    def test_warning_when_band_overlaps_passband(self, saw_spec):
        freqs = np.linspace(210e6, 235e6, 200)
        s21 = transfer_function(saw_spec, freqs)
        from sawsim.saw_device import TwoPortSweep

        sweep = TwoPortSweep(freqs, s21)
        with pytest.warns(UserWarning):
            extract_isolation_capacitance(sweep, band=(215e6, 230e6))

    def test_empty_band_rejected(self):
        sweep = make_series_c_sweep(0.1e-12, np.linspace(80e6, 85e6, 11))
        with pytest.raises(ConfigError):
            extract_isolation_capacitance(sweep, band=(10e6, 20e6))


class TestBreakdown:
    def test_paper_anchor(self, saw_spec):
        assert breakdown_voltage(saw_spec, 1.25) == pytest.approx(2.75)

    def test_exceeds_2_7_kv_at_1mm(self, saw_spec):
        assert breakdown_voltage(saw_spec, 1.0) > 2.7

    def test_monotone(self, saw_spec):
        assert breakdown_voltage(saw_spec, 1.25) >= breakdown_voltage(
            saw_spec, 1.0
        )

    def test_out_of_range_refused(self, saw_spec):
        with pytest.raises(OutOfRangeError):
            breakdown_voltage(saw_spec, 0.1)


class TestRatings:
    def test_coercive_limit(self, saw_spec):
        r = max_input_voltage(saw_spec)
        assert r.max_voltage == pytest.approx(171.0, rel=1e-9)
        assert r.max_power == 10.0

    def test_field_linearity(self, saw_spec):
        halved = SawDeviceSpec(coercive_field=saw_spec.coercive_field / 2)
        assert max_input_voltage(halved).max_voltage == pytest.approx(
            max_input_voltage(saw_spec).max_voltage / 2
        )


class TestThermalScale:
    def test_room_temperature_unity(self):
        assert thermal_output_scale(294.7) == 1.0

    def test_cryogenic_anchor(self):
        assert thermal_output_scale(0.535) == pytest.approx(5.6 / 4.5,
                                                            rel=1e-12)

    def test_plateau(self):
        assert thermal_output_scale(400.0) == 1.0
        assert thermal_output_scale(290.0) == 1.0
        assert thermal_output_scale(473.0) == 1.0

    def test_monotone_non_increasing(self):
        temps = np.linspace(0.5, 550.0, 120)
        scales = [thermal_output_scale(t) for t in temps]
        assert all(b <= a + 1e-12 for a, b in zip(scales, scales[1:]))

    def test_out_of_range(self):
        with pytest.raises(OutOfRangeError):
            thermal_output_scale(0.1)
        with pytest.raises(OutOfRangeError):
            thermal_output_scale(600.0)


def test_touchstone_export(saw_spec):
    freqs = np.array([100e6, 200e6, 223e6])
    s21 = transfer_function(saw_spec, freqs)
    from sawsim.saw_device import TwoPortSweep

    text = touchstone_text(TwoPortSweep(freqs, s21))
    lines = text.strip().split("\n")
    assert lines[0].startswith("!")
    cols = lines[-1].split()
    assert len(cols) == 3
    assert float(cols[0]) == pytest.approx(223e6)
