"""Behavioral two-port model of the SAW delay line.

The acoustic passband is the classic uniform-IDT delta-function response: a
sinc^2 amplitude shape around f_c = v / (2 * pitch), calibrated so the peak
power transmission and the -3 dB fractional bandwidth hit the measured
anchors exactly. Propagation is a pure delay gap / v. Electrode-reflection
ripple, triple-transit echoes and coupling-of-modes physics are deliberately
out of scope.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy.optimize import brentq

from .errors import ConfigError, OutOfRangeError
from .signals import ComplexEnvelope, TimeGrid

# Paper-anchored default tables. Only the quoted points are measurements; the
# remaining rows are assumed extensions so the default tables interpolate
# (config overrides them).
DEFAULT_ISOLATION_CAP_TABLE = (
    (0.50, 0.080),   # assumed
    (0.75, 0.055),   # assumed
    (1.00, 0.042),   # assumed
    (1.25, 0.032),   # measured anchor
)
DEFAULT_BREAKDOWN_TABLE = (
    (0.50, 1.50),    # assumed
    (0.75, 2.20),    # assumed
    (1.00, 2.72),    # "exceeding 2.7 kV" at 1 mm
    (1.25, 2.75),    # measured anchor
)
# Output-amplitude scale vs temperature, anchored at 5.6/4.5 at 0.535 K and
# 1.0 on the 290-473 K plateau; the decline above 473 K is assumed (solder
# failure regime).
DEFAULT_THERMAL_ANCHORS = (
    (0.5, 5.6 / 4.5),
    (0.535, 5.6 / 4.5),
    (290.0, 1.0),
    (473.0, 1.0),
    (544.0, 0.80),   # assumed
    (550.0, 0.78),   # assumed
)
THERMAL_T_MIN = 0.5
THERMAL_T_MAX = 550.0


def _check_monotonic_table(table, name, increasing: bool):
    gaps = [g for g, _ in table]
    vals = [v for _, v in table]
    if len(table) < 1:
        raise ConfigError(f"{name} table must not be empty")
    if any(b <= a for a, b in zip(gaps, gaps[1:])):
        raise ConfigError(f"{name} table gaps must be strictly increasing")
    pairs = zip(vals, vals[1:])
    if increasing:
        if any(b <= a for a, b in pairs):
            raise ConfigError(f"{name} table values must be strictly increasing")
    else:
        if any(b >= a for a, b in pairs):
            raise ConfigError(f"{name} table values must be strictly decreasing")


@dataclass(frozen=True)
class SawDeviceSpec:
    """Geometry, substrate constants and calibration anchors of one device.

    Lengths are SI (pitch/aperture in metres, gap in metres); the lookup
    tables use the paper's native units (gap in mm, capacitance in pF,
    breakdown in kV).
    """

    pitch: float = 8.55e-6
    pairs: int = 20
    aperture: float = 500e-6
    gap: float = 1.25e-3
    saw_velocity: float = 3813.3
    peak_transmission_db: float = -5.12
    frac_bandwidth: float = 0.10
    prop_loss_db_per_mm: float = 0.2
    k2: float = 0.053
    coercive_field: float = 20e6          # V/m (20 V/um)
    max_input_power: float = 10.0
    isolation_cap_table: tuple = DEFAULT_ISOLATION_CAP_TABLE
    breakdown_table: tuple = DEFAULT_BREAKDOWN_TABLE

    def __post_init__(self):
        for name in ("pitch", "pairs", "gap", "saw_velocity"):
            if not getattr(self, name) > 0:
                raise ConfigError(f"SawDeviceSpec.{name} must be > 0")
        if self.peak_transmission_db > 0.0:
            raise ConfigError("peak_transmission_db must be <= 0 dB (passive)")
        if not 0.0 < self.frac_bandwidth < 1.0:
            raise ConfigError("frac_bandwidth must be in (0, 1)")
        if self.prop_loss_db_per_mm < 0.0:
            raise ConfigError("prop_loss_db_per_mm must be >= 0")
        object.__setattr__(
            self, "isolation_cap_table", tuple(map(tuple, self.isolation_cap_table))
        )
        object.__setattr__(
            self, "breakdown_table", tuple(map(tuple, self.breakdown_table))
        )
        _check_monotonic_table(self.isolation_cap_table, "isolation_cap", False)
        _check_monotonic_table(self.breakdown_table, "breakdown", True)


@dataclass(frozen=True)
class TwoPortSweep:
    """Frequency sweep of S21 (linear complex) at a reference impedance."""

    freqs: np.ndarray
    s21: np.ndarray
    z0: float = 50.0

    def __post_init__(self):
        freqs = np.asarray(self.freqs, dtype=float)
        s21 = np.asarray(self.s21, dtype=complex)
        object.__setattr__(self, "freqs", freqs)
        object.__setattr__(self, "s21", s21)
        if freqs.ndim != 1 or s21.shape != freqs.shape:
            raise ConfigError("freqs and s21 must be 1-D arrays of equal length")
        if np.any(np.diff(freqs) <= 0):
            raise ConfigError("sweep frequencies must be strictly increasing")
        if np.any(np.abs(s21) > 1.0 + 1e-9):
            raise ConfigError("|S21| must not exceed 1 (passive two-port)")


def center_frequency(spec: SawDeviceSpec) -> float:
    """Acoustic synchronous frequency f_c = v / (2 * pitch); wavelength = 2*pitch."""
    return spec.saw_velocity / (2.0 * spec.pitch)


def delay(spec: SawDeviceSpec) -> float:
    """Acoustic propagation delay gap / v between the two IDTs."""
    return spec.gap / spec.saw_velocity


# sinc(x3)^2 = 2^-1/2, i.e. the half-power point of the sinc^2 amplitude shape.
@lru_cache(maxsize=1)
def _sinc_half_power_arg() -> float:
    return float(brentq(lambda x: np.sinc(x) - 2.0 ** -0.25, 0.1, 0.6, xtol=1e-15))


def _bandwidth_scale(spec: SawDeviceSpec) -> float:
    """Width factor s so that |H|^2 of sinc^2(N*s*(f-f_c)/f_c) has the spec'd
    -3 dB fractional bandwidth. Computed once per spec (pure function of it)."""
    x3 = _sinc_half_power_arg()
    return 2.0 * x3 / (spec.pairs * spec.frac_bandwidth)


def _loss_db(spec: SawDeviceSpec) -> float:
    return spec.prop_loss_db_per_mm * spec.gap * 1e3


def _peak_amplitude(spec: SawDeviceSpec) -> float:
    # Calibrated so max |H|^2 over f equals 10^(peak_transmission_db/10): the
    # propagation-loss factor is absorbed into A_peak at the spec's own gap.
    return 10.0 ** ((spec.peak_transmission_db + _loss_db(spec)) / 20.0)


def transfer_function(spec: SawDeviceSpec, f) -> complex | np.ndarray:
    """Complex two-port gain H(f) of the acoustic passband.

    |H| is A_peak * sinc^2 around f_c with the calibrated width; the phase is
    the pure propagation delay. Accepts a scalar or an array of frequencies.
    """
    f_arr = np.asarray(f, dtype=float)
    if np.any(f_arr <= 0):
        raise ConfigError("transfer_function requires f > 0")
    f_c = center_frequency(spec)
    s = _bandwidth_scale(spec)
    x = spec.pairs * s * (f_arr - f_c) / f_c
    mag = (
        _peak_amplitude(spec)
        * np.sinc(x) ** 2
        * 10.0 ** (-_loss_db(spec) / 20.0)
    )
    h = mag * np.exp(-2j * np.pi * f_arr * delay(spec))
    if np.isscalar(f) or f_arr.ndim == 0:
        return complex(h)
    return h


def envelope_kernel_halfwidth(spec: SawDeviceSpec) -> float:
    """Half-width T of the triangular baseband impulse response (seconds)."""
    return spec.pairs * _bandwidth_scale(spec) / center_frequency(spec)


def filter_envelope(spec: SawDeviceSpec, env: ComplexEnvelope) -> ComplexEnvelope:
    """Pass a complex envelope through the baseband-equivalent acoustic filter.

    The sinc^2 amplitude response with linear phase corresponds exactly to a
    triangular impulse response of half-width T; off-carrier operation adds a
    complex modulation of the kernel. The kernel is delayed by tau + T so the
    output is causal: identically zero before the acoustic delay tau, with the
    envelope edge midpoint arriving at tau + T. The output grid is the input
    grid extended by the filter tail.
    """
    f_c = center_frequency(spec)
    if not 0.5 * f_c <= env.carrier_freq <= 1.5 * f_c:
        raise OutOfRangeError(
            f"carrier {env.carrier_freq:g} Hz outside [{0.5 * f_c:g}, {1.5 * f_c:g}]"
        )
    dt = env.grid.dt
    tau = delay(spec)
    T = envelope_kernel_halfwidth(spec)
    delta = env.carrier_freq - f_c

    # Sampled triangular kernel on [tau, tau + 2T], time measured from t0.
    k0 = int(math.floor(tau / dt))
    k1 = int(math.ceil((tau + 2.0 * T) / dt))
    k = np.arange(k0, k1 + 1)
    t_k = k * dt
    tri = np.clip(1.0 - np.abs(t_k - (tau + T)) / T, 0.0, None)
    kernel = tri * np.exp(-2j * np.pi * delta * (t_k - (tau + T)))
    # Renormalise so the DC gain equals the analytic transfer function at the
    # carrier exactly (modulo the constant carrier phase, dropped here).
    target = abs(transfer_function(spec, env.carrier_freq))
    ssum = kernel.sum()
    if abs(ssum) < 1e-30:
        kernel = kernel * 0.0
    else:
        kernel = kernel * (target / ssum)

    # Kernel tap j corresponds to an absolute lag of k0 + j samples, so the
    # full convolution lands at output indices k0 .. n + k1 - 1.
    n_out = env.grid.n + k1
    full = np.convolve(env.samples, kernel)
    out = np.zeros(n_out, dtype=complex)
    out[k0:] = full
    grid_out = TimeGrid(env.grid.t0, dt, n_out)
    return ComplexEnvelope(grid_out, env.carrier_freq, out)


def _interp_table(table, x, name, log_y=False):
    gaps = [g for g, _ in table]
    vals = [v for _, v in table]
    if x < gaps[0] - 1e-12 or x > gaps[-1] + 1e-12:
        raise OutOfRangeError(
            f"{name}: gap {x:g} mm outside table range "
            f"[{gaps[0]:g}, {gaps[-1]:g}] mm; extrapolation refused"
        )
    x = min(max(x, gaps[0]), gaps[-1])
    if log_y:
        return float(np.exp(np.interp(x, gaps, np.log(vals))))
    return float(np.interp(x, gaps, vals))


def isolation_capacitance(spec: SawDeviceSpec, gap_mm: float) -> float:
    """Feedthrough capacitance [pF] at an IDT gap, log-linear in capacitance."""
    return _interp_table(spec.isolation_cap_table, gap_mm, "isolation_capacitance",
                         log_y=True)


def breakdown_voltage(spec: SawDeviceSpec, gap_mm: float) -> float:
    """Breakdown voltage [kV] at an IDT gap, linear interpolation."""
    return _interp_table(spec.breakdown_table, gap_mm, "breakdown_voltage")


def make_series_c_sweep(c_farad: float, freqs, z0: float = 50.0) -> TwoPortSweep:
    """Synthesize the S21 sweep of a pure series capacitance between z0 ports."""
    freqs = np.asarray(freqs, dtype=float)
    w = 2.0 * np.pi * freqs
    if c_farad == 0.0:
        s21 = np.zeros_like(freqs, dtype=complex)
    else:
        x = 2.0 * z0 * w * c_farad
        s21 = 1j * x / (1.0 + 1j * x)
    return TwoPortSweep(freqs, s21, z0)


def extract_isolation_capacitance(
    sweep: TwoPortSweep, band: tuple[float, float] = (80e6, 85e6)
) -> float:
    """Recover the series feedthrough capacitance [F] from an S21 sweep.

    Converts S21 to the series-branch transfer admittance
    Y = S21 / (2*z0*(1 - S21)) and averages Im{Y}/(2*pi*f) over the band
    (default 80-85 MHz, below the acoustic passband). A band that appears to
    overlap the passband (|S21| large) produces a warning, not an error.
    """
    f_lo, f_hi = band
    if not f_lo < f_hi:
        raise ConfigError("band must satisfy f_lo < f_hi")
    mask = (sweep.freqs >= f_lo) & (sweep.freqs <= f_hi)
    if not np.any(mask):
        raise ConfigError(f"band [{f_lo:g}, {f_hi:g}] Hz contains no sweep points")
    s21 = sweep.s21[mask]
    f = sweep.freqs[mask]
    if np.max(np.abs(s21)) > 0.1:
        warnings.warn(
            "extraction band overlaps a high-transmission region; the "
            "series-capacitance model is unreliable there",
            stacklevel=2,
        )
    denom = 2.0 * sweep.z0 * (1.0 - s21)
    y = s21 / denom
    c = np.imag(y) / (2.0 * np.pi * f)
    return float(np.mean(c))


@dataclass(frozen=True)
class InputRatings:
    """Electrical stress limits of the input IDT."""

    max_voltage: float   # peak volts across one electrode gap
    max_power: float     # watts


def max_input_voltage(spec: SawDeviceSpec) -> InputRatings:
    """Coercive-field-limited peak input voltage and the RF power rating."""
    return InputRatings(spec.coercive_field * spec.pitch, spec.max_input_power)


def thermal_output_scale(t_kelvin: float, anchors=DEFAULT_THERMAL_ANCHORS) -> float:
    """Multiplicative output-amplitude scale vs temperature.

    Monotone non-increasing piecewise-linear table: cryogenic gain anchored at
    5.6/4.5 of the room-temperature value, unity plateau 290-473 K, declining
    above. Timing is unaffected by design. Outside [0.5 K, 550 K] -> refused.
    """
    if not THERMAL_T_MIN <= t_kelvin <= THERMAL_T_MAX:
        raise OutOfRangeError(
            f"temperature {t_kelvin:g} K outside "
            f"[{THERMAL_T_MIN}, {THERMAL_T_MAX}] K"
        )
    ts = [t for t, _ in anchors]
    vs = [v for _, v in anchors]
    if any(b <= a for a, b in zip(ts, ts[1:])):
        raise ConfigError("thermal anchor temperatures must be strictly increasing")
    if any(b > a + 1e-12 for a, b in zip(vs, vs[1:])):
        raise ConfigError("thermal anchor scales must be non-increasing")
    return float(np.interp(t_kelvin, ts, vs))


def touchstone_text(sweep: TwoPortSweep) -> str:
    """Touchstone-style export: `freq_Hz  Re(S21)  Im(S21)` per line."""
    lines = ["! sawsim S21 sweep", f"! z0 = {sweep.z0:g} ohm",
             "! freq_Hz re_s21 im_s21"]
    for f, s in zip(sweep.freqs, sweep.s21):
        lines.append(f"{f:.8e} {s.real:.8e} {s.imag:.8e}")
    return "\n".join(lines) + "\n"


def write_touchstone(path, sweep: TwoPortSweep) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(touchstone_text(sweep))
