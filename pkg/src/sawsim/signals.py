"""Time grids, real waveforms, complex envelopes and waveform metrics.

Everything here is immutable value data; the operations are pure functions,
so concurrent use needs no coordination.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, GridMismatchError, MetricError, ResolutionError

UNITS = ("volt", "ampere", "watt", "dimensionless")
UNIT_SUFFIX = {"volt": "V", "ampere": "A", "watt": "W", "dimensionless": "1"}


@dataclass(frozen=True)
class TimeGrid:
    """Uniform sampling grid: n samples at t0, t0+dt, ..., t0+(n-1)*dt."""

    t0: float
    dt: float
    n: int

    def __post_init__(self):
        if not self.dt > 0.0:
            raise ConfigError(f"TimeGrid.dt must be > 0, got {self.dt}")
        if self.n < 2:
            raise ConfigError(f"TimeGrid.n must be >= 2, got {self.n}")

    @property
    def duration(self) -> float:
        return (self.n - 1) * self.dt

    @property
    def t_end(self) -> float:
        return self.t0 + self.duration

    def times(self) -> np.ndarray:
        return self.t0 + self.dt * np.arange(self.n)

    def index_of(self, t: float) -> float:
        """Fractional sample index of time t (may be out of range)."""
        return (t - self.t0) / self.dt


@dataclass(frozen=True)
class Waveform:
    """Real, uniformly sampled trace with a unit tag."""

    grid: TimeGrid
    samples: np.ndarray
    unit: str = "volt"

    def __post_init__(self):
        samples = np.asarray(self.samples, dtype=float)
        object.__setattr__(self, "samples", samples)
        if samples.shape != (self.grid.n,):
            raise ConfigError(
                f"sample count {samples.shape} does not match grid n={self.grid.n}"
            )
        if not np.all(np.isfinite(samples)):
            raise ConfigError("waveform samples must all be finite")
        if self.unit not in UNITS:
            raise ConfigError(f"unknown unit {self.unit!r}, expected one of {UNITS}")

    def value_at(self, t: float) -> float:
        """Linear interpolation at time t (t must lie on the grid span)."""
        x = self.grid.index_of(t)
        if x < -1e-9 or x > self.grid.n - 1 + 1e-9:
            raise OutOfGridError(t, self.grid)
        x = min(max(x, 0.0), self.grid.n - 1.0)
        i = int(x)
        if i >= self.grid.n - 1:
            return float(self.samples[-1])
        frac = x - i
        return float(self.samples[i] * (1.0 - frac) + self.samples[i + 1] * frac)

    def scaled(self, k: float) -> "Waveform":
        return Waveform(self.grid, self.samples * k, self.unit)


class OutOfGridError(GridMismatchError):
    def __init__(self, t, grid):
        super().__init__(f"time {t} outside grid [{grid.t0}, {grid.t_end}]")


@dataclass(frozen=True)
class ComplexEnvelope:
    """Complex baseband samples riding on a carrier; |sample| is the RF amplitude."""

    grid: TimeGrid
    carrier_freq: float
    samples: np.ndarray

    def __post_init__(self):
        samples = np.asarray(self.samples, dtype=complex)
        object.__setattr__(self, "samples", samples)
        if not self.carrier_freq > 0.0:
            raise ConfigError(f"carrier_freq must be > 0, got {self.carrier_freq}")
        if samples.shape != (self.grid.n,):
            raise ConfigError("envelope sample count does not match grid")
        if not np.all(np.isfinite(samples)):
            raise ConfigError("envelope samples must all be finite")

    def magnitude(self) -> Waveform:
        return Waveform(self.grid, np.abs(self.samples), "volt")


@dataclass(frozen=True)
class PwmSpec:
    """Square-wave command: frequency, duty, levels, optional linear edge time."""

    freq: float
    duty: float
    high_level: float = 1.0
    low_level: float = 0.0
    edge_rise_fall: float = 0.0

    def __post_init__(self):
        if not self.freq > 0.0:
            raise ConfigError(f"PWM freq must be > 0, got {self.freq}")
        if not 0.0 < self.duty < 1.0:
            raise ConfigError(f"PWM duty must be in (0, 1), got {self.duty}")
        if self.edge_rise_fall < 0.0:
            raise ConfigError("edge_rise_fall must be >= 0")


def make_pwm(spec: PwmSpec, grid: TimeGrid, phase: float = 0.0) -> Waveform:
    """Sample a PWM command on the grid.

    The wave is high on [0, duty*T) of each period; the first rising edge sits
    at t0 + phase (default 0, i.e. the wave starts high). With
    edge_rise_fall > 0 the transitions are linear ramps of that duration.
    """
    period = 1.0 / spec.freq
    if period / grid.dt < 100.0:
        raise ResolutionError(
            f"grid dt={grid.dt:g} too coarse for {spec.freq:g} Hz PWM "
            f"(need >= 100 samples per period, have {period / grid.dt:.1f})"
        )
    t = grid.times() - (grid.t0 + phase)
    frac = np.mod(t / period, 1.0)
    # Rounding guard: a sample landing within 1e-9 period of an edge belongs
    # to the half-open interval convention [0, duty), not to float noise.
    frac = np.where(frac > 1.0 - 1e-9, frac - 1.0, frac)
    lo, hi = spec.low_level, spec.high_level
    if spec.edge_rise_fall == 0.0:
        samples = np.where(frac < spec.duty - 1e-9, hi, lo)
    else:
        e = spec.edge_rise_fall / period
        if e >= min(spec.duty, 1.0 - spec.duty):
            raise ConfigError("edge_rise_fall longer than the PWM on/off interval")
        ramp_up = np.clip(frac / e, 0.0, 1.0)
        ramp_dn = np.clip((frac - spec.duty) / e, 0.0, 1.0)
        samples = lo + (hi - lo) * (ramp_up - ramp_dn)
    return Waveform(grid, samples.astype(float), "dimensionless")


def am_modulate(
    command: Waveform, carrier_freq: float, amplitude_at_high: float
) -> ComplexEnvelope:
    """On-off-key a carrier: envelope sample = amplitude_at_high * command sample.

    The command must be dimensionless in [0, 1]; over-modulation is undefined.
    """
    if command.unit != "dimensionless":
        raise ConfigError("am_modulate expects a dimensionless command waveform")
    s = command.samples
    if np.any(s < -1e-12) or np.any(s > 1.0 + 1e-12):
        bad = s[(s < -1e-12) | (s > 1.0 + 1e-12)][0]
        raise ConfigError(
            f"command sample {bad:g} outside [0, 1]; over-modulation undefined"
        )
    env = amplitude_at_high * np.clip(s, 0.0, 1.0).astype(complex)
    return ComplexEnvelope(command.grid, carrier_freq, env)


def _interp_crossing(t: np.ndarray, y: np.ndarray, level: float, rising: bool,
                     start: int = 0) -> float | None:
    """First linear-interpolated crossing of `level` at or after index `start`."""
    n = len(y)
    for i in range(max(start, 1), n):
        a, b = y[i - 1], y[i]
        if rising and a < level <= b:
            return t[i - 1] + (level - a) / (b - a) * (t[i] - t[i - 1])
        if not rising and a > level >= b:
            return t[i - 1] + (level - a) / (b - a) * (t[i] - t[i - 1])
    return None


def _window_slice(w: Waveform, window) -> tuple[np.ndarray, np.ndarray]:
    t = w.grid.times()
    y = w.samples
    if window is None:
        return t, y
    t_a, t_b = window
    mask = (t >= t_a - 1e-15) & (t <= t_b + 1e-15)
    if mask.sum() < 4:
        raise MetricError(f"window [{t_a}, {t_b}] selects fewer than 4 samples")
    return t[mask], y[mask]


def rise_time_10_90(
    w: Waveform, direction: str = "rising", window=None
) -> float:
    """10%-90% transition time of the first edge in the (windowed) waveform.

    The baseline is the initial value; the reference level is the steady
    post-transition plateau inside the analysis window, not the global
    extreme, so ringing overshoot does not skew the thresholds. Crossings are
    linearly interpolated between samples. `direction="falling"` measures
    90% -> 10%.
    """
    if direction not in ("rising", "falling"):
        raise ConfigError(f"direction must be rising|falling, got {direction!r}")
    t, y = _window_slice(w, window)
    n = len(y)
    baseline = float(y[0])

    # Plateau: the settled tail of the analysis window. If the edge rings
    # (overshoot beyond the tail value), fall back to the dwell just after
    # the transition so ringing peaks do not skew the thresholds.
    tail = max(3, n // 20)
    plateau = float(np.mean(y[-tail:]))
    refined = False
    for _ in range(2):
        exc = plateau - baseline
        if direction == "rising" and exc <= 0:
            raise MetricError("no rising excursion found (plateau <= baseline)")
        if direction == "falling" and exc >= 0:
            raise MetricError("no falling excursion found (plateau >= baseline)")
        lo = baseline + 0.1 * exc
        hi = baseline + 0.9 * exc
        rising = direction == "rising"
        t_lo = _interp_crossing(t, y, lo, rising)
        if t_lo is None:
            raise MetricError("no 10% crossing found")
        i_lo = int(np.searchsorted(t, t_lo))
        t_hi = _interp_crossing(t, y, hi, rising, start=i_lo)
        if t_hi is None:
            raise MetricError("no 90% crossing after the 10% crossing")
        if refined:
            break
        span = t_hi - t_lo
        i_a = int(np.searchsorted(t, t_hi))
        i_b = int(np.searchsorted(t, min(t_hi + 5.0 * span, t[-1])))
        ring = float(np.max((y[i_a:] - plateau) * np.sign(exc))) \
            if i_a < n else 0.0
        if ring > 0.05 * abs(exc) and i_b > i_a + 2:
            plateau = float(np.mean(y[i_a:i_b]))
            refined = True
        else:
            break
    return float(t_hi - t_lo)


def integrate_product(v: Waveform, i: Waveform, window=None) -> float:
    """Trapezoidal integral of v(t)*i(t) [J] over the window (default: full span).

    The integrand is the piecewise-linear interpolant of the sampled product
    v_k * i_k, with partial cells at the window edges interpolated on that
    product; integration is therefore exactly additive over adjacent windows.
    """
    if v.grid != i.grid:
        raise GridMismatchError("integrate_product requires waveforms on one grid")
    if v.unit != "volt" or i.unit != "ampere":
        raise ConfigError(f"expected (volt, ampere), got ({v.unit}, {i.unit})")
    t = v.grid.times()
    if window is None:
        t_a, t_b = t[0], t[-1]
    else:
        t_a, t_b = window
        if t_a >= t_b:
            raise ConfigError("integration window must have t_a < t_b")
        if t_a < t[0] - 1e-15 or t_b > t[-1] + 1e-15:
            raise ConfigError("integration window outside waveform span")

    p = v.samples * i.samples
    prod = Waveform(v.grid, p, "watt")

    i_a = int(np.ceil(v.grid.index_of(t_a) - 1e-9))
    i_b = int(np.floor(v.grid.index_of(t_b) + 1e-9))
    i_a = max(i_a, 0)
    i_b = min(i_b, v.grid.n - 1)
    total = 0.0
    if i_b > i_a:
        total += float(np.trapezoid(p[i_a : i_b + 1], dx=v.grid.dt))
    t_first = t[i_a]
    if t_a < t_first - 1e-15:
        total += 0.5 * (prod.value_at(t_a) + p[i_a]) * (t_first - t_a)
    t_last = t[i_b]
    if t_b > t_last + 1e-15:
        total += 0.5 * (p[i_b] + prod.value_at(t_b)) * (t_b - t_last)
    return total


def waveform_csv_text(name_to_wave: dict[str, Waveform]) -> str:
    """CSV export: header `t_s,<name>_<unit>`, scientific, 9 significant digits.

    All waveforms must share one grid; columns appear in insertion order.
    """
    waves = list(name_to_wave.items())
    if not waves:
        raise ConfigError("no waveforms to export")
    grid = waves[0][1].grid
    for name, w in waves:
        if w.grid != grid:
            raise GridMismatchError(f"waveform {name!r} not on the shared grid")
    header = "t_s," + ",".join(
        f"{name}_{UNIT_SUFFIX[w.unit]}" for name, w in waves
    )
    t = grid.times()
    cols = [w.samples for _, w in waves]
    lines = [header]
    for k in range(grid.n):
        row = [f"{t[k]:.8e}"] + [f"{c[k]:.8e}" for c in cols]
        lines.append(",".join(row))
    return "\n".join(lines) + "\n"


def write_waveform_csv(path, name_to_wave: dict[str, Waveform]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(waveform_csv_text(name_to_wave))
