"""Time grids, PWM/AM construction and waveform metrics."""

import numpy as np
import pytest

from sawsim.errors import (
    ConfigError,
    GridMismatchError,
    MetricError,
    ResolutionError,
)
from sawsim.signals import (
    ComplexEnvelope,
    PwmSpec,
    TimeGrid,
    Waveform,
    am_modulate,
    integrate_product,
    make_pwm,
    rise_time_10_90,
    waveform_csv_text,
)


def test_grid_validation():
    g = TimeGrid(0.0, 1e-9, 1001)
    assert g.duration == pytest.approx(1e-6)
    with pytest.raises(ConfigError):
        TimeGrid(0.0, -1e-9, 10)
    with pytest.raises(ConfigError):
        TimeGrid(0.0, 1e-9, 1)


def test_waveform_validation():
    g = TimeGrid(0.0, 1e-9, 10)
    with pytest.raises(ConfigError):
        Waveform(g, np.zeros(9))
    with pytest.raises(ConfigError):
        Waveform(g, np.full(10, np.nan))
    with pytest.raises(ConfigError):
        Waveform(g, np.zeros(10), unit="furlong")


class TestMakePwm:
    def test_10khz_50pct_mean(self):
        # 20 full periods at 10 kHz, dt 100 ns: mean is exactly the duty.
        grid = TimeGrid(0.0, 100e-9, 20000)
        w = make_pwm(PwmSpec(10e3, 0.5), grid)
        assert w.samples.mean() == pytest.approx(0.5, abs=1e-12)
        assert w.unit == "dimensionless"

    def test_50khz_period_and_high_time(self):
        grid = TimeGrid(0.0, 10e-9, 4000)
        w = make_pwm(PwmSpec(50e3, 0.5), grid)
        # Period 20 us: high for the first 10 us of each period.
        t = grid.times()
        high = w.samples > 0.5
        assert high[t < 10e-6 - 1e-12].all()
        assert not high[(t > 10e-6) & (t < 20e-6 - 1e-12)].any()

    def test_25pct_mean(self):
        grid = TimeGrid(0.0, 100e-9, 40000)
        w = make_pwm(PwmSpec(10e3, 0.25, high_level=2.0, low_level=0.5), grid)
        assert w.samples.mean() == pytest.approx(0.25 * 2.0 + 0.75 * 0.5,
                                                 rel=1e-9)

    def test_mean_matches_duty_across_random_duties(self):
        rng = np.random.RandomState(7)
        grid = TimeGrid(0.0, 50e-9, 40000)  # 10 kHz -> 2000 samples/period
        for duty in rng.uniform(0.05, 0.95, size=12):
            w = make_pwm(PwmSpec(10e3, float(duty)), grid)
            n_per = 2000
            # Within 1/n of the duty per the sampling quantization.
            assert abs(w.samples.mean() - duty) <= 1.0 / n_per

    def test_resolution_error(self):
        grid = TimeGrid(0.0, 1e-6, 1000)
        with pytest.raises(ResolutionError):
            make_pwm(PwmSpec(100e3, 0.5), grid)

    def test_shaped_edges(self):
        grid = TimeGrid(0.0, 10e-9, 20000)
        w = make_pwm(PwmSpec(10e3, 0.5, edge_rise_fall=1e-6), grid)
        # Linear ramp: halfway up the rising edge after 0.5 us.
        assert w.value_at(0.5e-6) == pytest.approx(0.5, rel=1e-6)

    def test_phase_shifts_first_edge(self):
        grid = TimeGrid(0.0, 10e-9, 20000)
        w = make_pwm(PwmSpec(10e3, 0.5), grid, phase=20e-6)
        assert w.samples[0] == 0.0  # still in the low half before the edge


class TestAmModulate:
    def test_cw(self):
        grid = TimeGrid(0.0, 1e-9, 100)
        cmd = Waveform(grid, np.ones(100), "dimensionless")
        env = am_modulate(cmd, 223e6, 10.0)
        assert np.all(np.abs(env.samples) == 10.0)
        assert env.carrier_freq == 223e6

    def test_zero(self):
        grid = TimeGrid(0.0, 1e-9, 100)
        cmd = Waveform(grid, np.zeros(100), "dimensionless")
        env = am_modulate(cmd, 223e6, 10.0)
        assert np.all(env.samples == 0.0)

    def test_two_pulse_shape(self):
        # Two 10-us pulses separated by 10 us carried at 223 MHz.
        grid = TimeGrid(0.0, 1e-8, 3500)
        t = grid.times()
        s = (((t >= 0) & (t < 10e-6)) | ((t >= 20e-6) & (t < 30e-6))) * 1.0
        env = am_modulate(Waveform(grid, s, "dimensionless"), 223e6, 6.0)
        mag = np.abs(env.samples)
        assert mag.max() == 6.0
        assert mag[(t > 12e-6) & (t < 18e-6)].max() == 0.0

    def test_linearity_exact(self):
        grid = TimeGrid(0.0, 1e-9, 64)
        cmd = Waveform(grid, np.linspace(0, 1, 64), "dimensionless")
        e1 = am_modulate(cmd, 223e6, 2.0)
        e2 = am_modulate(cmd, 223e6, 4.0)
        assert np.array_equal(e2.samples, 2.0 * e1.samples)

    def test_negative_command_rejected(self):
        grid = TimeGrid(0.0, 1e-9, 8)
        cmd = Waveform(grid, np.array([0, 0, -0.1, 0, 0, 0, 0, 0.0]),
                       "dimensionless")
        with pytest.raises(ConfigError):
            am_modulate(cmd, 223e6, 1.0)

    def test_wrong_unit_rejected(self):
        grid = TimeGrid(0.0, 1e-9, 8)
        cmd = Waveform(grid, np.zeros(8), "volt")
        with pytest.raises(ConfigError):
            am_modulate(cmd, 223e6, 1.0)


class TestRiseTime:
    def test_exponential_closed_form(self):
        tau = 10e-9
        g = TimeGrid(0.0, 1e-11, 20000)
        t = g.times()
        w = Waveform(g, 1.0 - np.exp(-t / tau), "volt")
        assert rise_time_10_90(w) == pytest.approx(tau * np.log(9), rel=1e-6)

    def test_hard_step(self):
        g = TimeGrid(0.0, 1e-9, 200)
        s = np.zeros(200)
        s[100:] = 5.0
        w = Waveform(g, s, "volt")
        assert rise_time_10_90(w) <= g.dt

    def test_amplitude_scale_invariance(self):
        tau = 25e-9
        g = TimeGrid(0.0, 1e-10, 5000)
        t = g.times()
        base = 1.0 - np.exp(-t / tau)
        r1 = rise_time_10_90(Waveform(g, base, "volt"))
        r2 = rise_time_10_90(Waveform(g, 73.2 * base, "volt"))
        assert r1 == pytest.approx(r2, rel=1e-12)

    def test_time_translation_invariance(self):
        tau = 25e-9
        n = 5000
        g1 = TimeGrid(0.0, 1e-10, n)
        g2 = TimeGrid(4.7e-6, 1e-10, n)
        y = 1.0 - np.exp(-g1.times() / tau)
        r1 = rise_time_10_90(Waveform(g1, y, "volt"))
        r2 = rise_time_10_90(Waveform(g2, y, "volt"))
        assert r1 == pytest.approx(r2, rel=1e-12)

    def test_falling_direction(self):
        tau = 10e-9
        g = TimeGrid(0.0, 1e-11, 20000)
        w = Waveform(g, np.exp(-g.times() / tau), "volt")
        assert rise_time_10_90(w, "falling") == pytest.approx(
            tau * np.log(9), rel=1e-6
        )

    def test_no_transition_error(self):
        g = TimeGrid(0.0, 1e-9, 100)
        w = Waveform(g, np.ones(100), "volt")
        with pytest.raises(MetricError):
            rise_time_10_90(w)

    def test_window_selects_first_edge(self):
        g = TimeGrid(0.0, 1e-9, 4000)
        t = g.times()
        tau = 20e-9
        y = np.where(t < 2e-6, 1 - np.exp(-t / tau),
                     np.exp(-(t - 2e-6) / tau))
        w = Waveform(g, y, "volt")
        r = rise_time_10_90(w, window=(0.0, 1.5e-6))
        assert r == pytest.approx(tau * np.log(9), rel=1e-3)

    def test_ringing_uses_plateau_not_peak(self):
        # Overshoot ring after the edge: thresholds must follow the settled
        # plateau, not the ring peak (which tops out 30% high).
        g = TimeGrid(0.0, 1e-10, 20000)
        t = g.times()
        tau = 20e-9
        step = 1.0 - np.exp(-t / tau)
        ring = np.where(
            t > 4 * tau,
            0.3 * np.exp(-(t - 4 * tau) / 150e-9)
            * np.sin(2 * np.pi * (t - 4 * tau) / 60e-9),
            0.0,
        )
        w = Waveform(g, step + ring, "volt")
        r = rise_time_10_90(w)
        assert r == pytest.approx(tau * np.log(9), rel=0.05)


class TestIntegrateProduct:
    def test_constant_product(self):
        g = TimeGrid(0.0, 1e-9, 2001)
        v = Waveform(g, np.full(2001, 25.0), "volt")
        i = Waveform(g, np.ones(2001), "ampere")
        e = integrate_product(v, i, (0.0, 1e-6))
        assert e == pytest.approx(25e-6, rel=1e-12)

    def test_triangle_analytic(self):
        # v ramps 0 -> 25 V over 100 ns, i = 2 A: E = 0.5*25*2*100n = 2.5 uJ.
        g = TimeGrid(0.0, 1e-10, 1001)
        t = g.times()
        v = Waveform(g, 25.0 * t / 100e-9, "volt")
        i = Waveform(g, np.full(g.n, 2.0), "ampere")
        e = integrate_product(v, i, (0.0, 100e-9))
        assert e == pytest.approx(2.5e-6, rel=1e-12)

    def test_grid_mismatch(self):
        v = Waveform(TimeGrid(0.0, 1e-9, 10), np.ones(10), "volt")
        i = Waveform(TimeGrid(0.0, 2e-9, 10), np.ones(10), "ampere")
        with pytest.raises(GridMismatchError):
            integrate_product(v, i)

    def test_unit_mismatch(self):
        g = TimeGrid(0.0, 1e-9, 10)
        v = Waveform(g, np.ones(10), "volt")
        with pytest.raises(ConfigError):
            integrate_product(v, v)

    def test_bilinear(self):
        rng = np.random.RandomState(3)
        g = TimeGrid(0.0, 1e-9, 500)
        a = rng.randn(500)
        b = rng.randn(500)
        v = Waveform(g, a, "volt")
        i = Waveform(g, b, "ampere")
        e = integrate_product(v, i)
        e_scaled = integrate_product(Waveform(g, 3 * a, "volt"),
                                     Waveform(g, 2 * b, "ampere"))
        assert e_scaled == pytest.approx(6 * e, rel=1e-12)

    def test_additive_over_adjacent_windows(self):
        rng = np.random.RandomState(4)
        g = TimeGrid(0.0, 1e-9, 1000)
        v = Waveform(g, rng.randn(1000), "volt")
        i = Waveform(g, rng.randn(1000), "ampere")
        # Split at an off-grid point: partial cells must still add exactly.
        t_mid = 423.37e-9
        whole = integrate_product(v, i, (0.0, 999e-9))
        parts = integrate_product(v, i, (0.0, t_mid)) + \
            integrate_product(v, i, (t_mid, 999e-9))
        assert parts == pytest.approx(whole, rel=1e-9)


def test_csv_format():
    g = TimeGrid(0.0, 1e-9, 3)
    v = Waveform(g, np.array([0.0, 1.2345678987654321, -2e-5]), "volt")
    i = Waveform(g, np.array([1.0, 2.0, 3.0]), "ampere")
    text = waveform_csv_text({"v_ds": v, "i_ds": i})
    lines = text.strip().split("\n")
    assert lines[0] == "t_s,v_ds_V,i_ds_A"
    assert len(lines) == 4
    # Scientific notation with 9 significant digits.
    assert lines[1].split(",")[0] == "0.00000000e+00"
    assert lines[2].split(",")[1] == "1.23456790e+00"
