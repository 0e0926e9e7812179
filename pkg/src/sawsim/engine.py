"""Multirate fixed-step transient solver.

Implicit-trapezoidal companion models with Newton iteration over the devices'
piecewise-linear regions, applied to a fixed set of testbench topologies (no
general netlist parsing). The power stage steps at dt_fast inside scheduled
switching windows and dt_slow elsewhere; the envelope-domain RF chain is
evaluated on its own grid and sampled into the power-stage step as a
controlled source. Runs are strictly sequential and deterministic: identical
config and drive reproduce bit-identical traces.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, SolverError
from .signals import TimeGrid, Waveform

FLAG_HYSTERESIS_V = 1e-3  # region flags only flip once past the boundary by this


@dataclass(frozen=True)
class SolverConfig:
    """Fixed-step solver settings."""

    dt_fast: float = 1e-10
    dt_slow: float = 1e-9
    event_tol: float = 1e-12
    max_newton_iters: int = 50
    newton_tol: float = 1e-9

    def __post_init__(self):
        if not 0 < self.dt_fast <= self.dt_slow:
            raise ConfigError("require 0 < dt_fast <= dt_slow")
        if not 0 < self.event_tol < self.dt_fast:
            raise ConfigError("require 0 < event_tol < dt_fast")
        if self.max_newton_iters < 1 or not 0 < self.newton_tol < 1e-3:
            raise ConfigError("bad Newton settings")


@dataclass(frozen=True)
class CircuitState:
    """Solution point: node voltages, inductor currents, companion history,
    device region flags and time."""

    t: float
    v: tuple
    i_l: tuple
    q: tuple
    i_c: tuple
    flags: tuple
    traces: tuple = ()
    flag_sig: tuple = ()

    def dump(self) -> str:
        return (
            f"t={self.t:.12e} v={self.v} i_l={self.i_l} "
            f"q={self.q} i_c={self.i_c} flags={self.flags}"
        )


def solve_dense(a, b):
    """Gaussian elimination with partial pivoting for tiny dense systems."""
    n = len(b)
    if n == 1:
        if a[0][0] == 0.0:
            raise SolverError("singular 1x1 system")
        return [b[0] / a[0][0]]
    m = [row[:] + [bi] for row, bi in zip(a, b)]
    for col in range(n):
        piv = max(range(col, n), key=lambda r: abs(m[r][col]))
        if abs(m[piv][col]) < 1e-300:
            raise SolverError("singular Jacobian")
        if piv != col:
            m[col], m[piv] = m[piv], m[col]
        inv = 1.0 / m[col][col]
        for r in range(col + 1, n):
            f = m[r][col] * inv
            if f != 0.0:
                for c in range(col, n + 1):
                    m[r][c] -= f * m[col][c]
    x = [0.0] * n
    for r in range(n - 1, -1, -1):
        s = m[r][n]
        for c in range(r + 1, n):
            s -= m[r][c] * x[c]
        x[r] = s / m[r][r]
    return x


class SampledDrive:
    """Linear interpolation over a sampled drive with a rolling index hint
    (run time is monotone, so lookup is O(1) amortized)."""

    __slots__ = ("t0", "dt", "values", "n")

    def __init__(self, grid: TimeGrid, values: np.ndarray):
        self.t0 = grid.t0
        self.dt = grid.dt
        self.values = np.asarray(values, dtype=float)
        self.n = grid.n
        if self.values.shape != (grid.n,):
            raise ConfigError("drive samples do not match grid")

    def at(self, t: float) -> float:
        x = (t - self.t0) / self.dt
        if x <= 0.0:
            return float(self.values[0])
        if x >= self.n - 1:
            return float(self.values[-1])
        i = int(x)
        frac = x - i
        return float(self.values[i] * (1.0 - frac) + self.values[i + 1] * frac)


class ConstantDrive:
    __slots__ = ("value",)

    def __init__(self, value: float):
        self.value = float(value)

    def at(self, t: float) -> float:
        return self.value


class FunctionDrive:
    __slots__ = ("fn",)

    def __init__(self, fn):
        self.fn = fn

    def at(self, t: float) -> float:
        return float(self.fn(t))


class _NoConvergence(Exception):
    pass


def _scaled_norm(F, scale):
    return max(abs(f) / s for f, s in zip(F, scale))


def _newton(topology, st: CircuitState, dt: float, u: dict, cfg: SolverConfig):
    """Damped Newton over the piecewise-linear device regions.

    Residuals are normalized by a per-node current scale fixed at the step's
    starting point (with later scales merged in monotonically, so the scale
    never shrinks mid-step). A backtracking line search halves the update
    whenever the scaled residual fails to decrease, which breaks the
    two-cycles plain Newton falls into at near-ideal switch corners."""
    v = list(st.v)
    F, J, scale0, aux = topology.model(v, st, dt, u)
    scale = list(scale0)
    norm = _scaled_norm(F, scale)
    for _ in range(cfg.max_newton_iters):
        if norm <= cfg.newton_tol:
            return v, aux
        dv = solve_dense(J, [-f for f in F])
        alpha = 1.0
        accepted = None
        for _ in range(12):
            v_try = [vi + alpha * d for vi, d in zip(v, dv)]
            F2, J2, scale2, aux2 = topology.model(v_try, st, dt, u)
            for i, s2 in enumerate(scale2):
                if s2 > scale[i]:
                    scale[i] = s2
            norm2 = _scaled_norm(F2, scale)
            if norm2 < norm or norm2 <= cfg.newton_tol:
                accepted = (v_try, F2, J2, aux2, norm2)
                break
            alpha *= 0.5
        if accepted is None:
            raise _NoConvergence((v, F, aux))
        v, F, J, aux, norm = accepted
    if norm <= cfg.newton_tol:
        return v, aux
    raise _NoConvergence((v, F, aux))


def step(topology, st: CircuitState, dt: float, drives: dict,
         cfg: SolverConfig) -> CircuitState:
    """Advance one trapezoidal step, halving down to dt/64 on Newton failure."""
    for divisor in (1, 2, 4, 8, 16, 32, 64):
        sub_dt = dt / divisor
        cur = st
        try:
            for k in range(divisor):
                t_new = st.t + sub_dt * (k + 1)
                u = {name: d.at(t_new) for name, d in drives.items()}
                v, aux = _newton(topology, cur, sub_dt, u, cfg)
                cur = topology.commit(v, cur, sub_dt, u, aux, t_new)
            return cur
        except _NoConvergence:
            continue
    raise SolverError(
        f"Newton failed at t={st.t:.6e} even at dt/64; state: {st.dump()}"
    )


def locate_event(topology, state_a: CircuitState, dt: float, drives: dict,
                 cfg: SolverConfig, predicate) -> tuple[float, CircuitState]:
    """Bisect the step interval for a predicate sign change, to event_tol.

    predicate maps a CircuitState to a float; it must change sign between
    state_a and state_a stepped by dt. Returns the event time and the state
    re-stepped from state_a to that time.
    """
    p_a = predicate(state_a)
    state_b = step(topology, state_a, dt, drives, cfg)
    p_b = predicate(state_b)
    if p_a == 0.0:
        return state_a.t, state_a
    if p_a * p_b > 0.0:
        raise SolverError("predicate does not change sign across the step")
    lo, hi = 0.0, dt
    best = state_b
    while hi - lo > cfg.event_tol:
        mid = 0.5 * (lo + hi)
        st_mid = step(topology, state_a, mid, drives, cfg)
        if p_a * predicate(st_mid) > 0.0:
            lo = mid
        else:
            hi = mid
            best = st_mid
    return state_a.t + hi, best


def make_schedule(duration: float, cfg: SolverConfig,
                  fast_windows=()) -> list[tuple[float, float, float]]:
    """Segment [0, duration] into (t_start, t_end, dt) pieces.

    Fast windows are snapped outward to the dt_slow grid and use a dt_fast
    that divides dt_slow exactly, so every segment holds an integer number of
    steps and boundaries land exactly.
    """
    m = max(1, round(cfg.dt_slow / cfg.dt_fast))
    dt_fast = cfg.dt_slow / m
    n_total = int(round(duration / cfg.dt_slow))
    if abs(n_total * cfg.dt_slow - duration) > 1e-6 * cfg.dt_slow:
        n_total = int(np.ceil(duration / cfg.dt_slow))
    # Snap windows to slow-grid indices and merge overlaps.
    idx = []
    for a, b in fast_windows:
        ia = max(0, int(np.floor(a / cfg.dt_slow)))
        ib = min(n_total, int(np.ceil(b / cfg.dt_slow)))
        if ib > ia:
            idx.append((ia, ib))
    idx.sort()
    merged = []
    for ia, ib in idx:
        if merged and ia <= merged[-1][1]:
            merged[-1] = (merged[-1][0], max(merged[-1][1], ib))
        else:
            merged.append((ia, ib))
    segments = []
    cursor = 0
    for ia, ib in merged:
        if ia > cursor:
            segments.append((cursor * cfg.dt_slow, ia * cfg.dt_slow, cfg.dt_slow))
        segments.append((ia * cfg.dt_slow, ib * cfg.dt_slow, dt_fast))
        cursor = ib
    if cursor < n_total:
        segments.append((cursor * cfg.dt_slow, n_total * cfg.dt_slow, cfg.dt_slow))
    return segments


@dataclass
class RunResult:
    """Traces on a uniform record grid plus the run log."""

    traces: dict
    final_state: CircuitState
    events: list
    steps: int
    raw_times: np.ndarray = None
    raw: dict = None


def run(topology, drives: dict, cfg: SolverConfig, duration: float,
        fast_windows=(), initial_state: CircuitState | None = None,
        record_dt: float | None = None, record: bool = True,
        locate_events: bool = True) -> RunResult:
    """Full multirate run over a fixed topology.

    drives maps drive names to objects with .at(t). Traces are resampled onto
    a uniform grid of record_dt (default dt_slow). Device region-flag changes
    are localized by bisection and logged as events.
    """
    st = initial_state if initial_state is not None else topology.init_state()
    t_base = st.t
    schedule = make_schedule(duration, cfg, fast_windows)
    names = topology.trace_names
    times = [st.t] if record else None
    data = [[x] for x in st.traces] if record else None
    events = []
    steps = 0
    for t_a, t_b, dt in schedule:
        n = int(round((t_b - t_a) / dt))
        for _ in range(n):
            prev = st
            st = step(topology, prev, dt, drives, cfg)
            steps += 1
            if st.flags != prev.flags and locate_events:
                for i, (fa, fb) in enumerate(zip(prev.flags, st.flags)):
                    if fa != fb:
                        try:
                            t_ev, _ = locate_event(
                                topology, prev, dt, drives, cfg,
                                lambda s, i=i: s.flag_sig[i],
                            )
                        except SolverError:
                            t_ev = st.t
                        events.append((t_ev, topology.flag_names[i], fa, fb))
            if record:
                times.append(st.t)
                for lst, x in zip(data, st.traces):
                    lst.append(x)
    result = RunResult(traces={}, final_state=st, events=events, steps=steps)
    if record:
        raw_t = np.asarray(times)
        raw = {nm: np.asarray(col) for nm, col in zip(names, data)}
        result.raw_times = raw_t
        result.raw = raw
        rdt = record_dt if record_dt is not None else cfg.dt_slow
        n_rec = int(np.floor((raw_t[-1] - t_base) / rdt)) + 1
        grid = TimeGrid(t_base, rdt, max(n_rec, 2))
        tt = grid.times()
        for nm in names:
            vals = np.interp(tt, raw_t, raw[nm])
            unit = topology.trace_units.get(nm, "volt")
            result.traces[nm] = Waveform(grid, vals, unit)
    return result


def run_fixed_grid(topology, grid: TimeGrid, drive_arrays: dict,
                   cfg: SolverConfig, v_init=None) -> dict:
    """Step exactly on a waveform grid (used by the envelope-domain rectifier);
    returns raw trace arrays aligned with the grid."""
    drives = {k: SampledDrive(grid, v) for k, v in drive_arrays.items()}
    st = topology.init_state(v_init=v_init, t0=grid.t0)
    names = topology.trace_names
    out = {nm: np.empty(grid.n) for nm in names}
    for nm, x in zip(names, st.traces):
        out[nm][0] = x
    dt = grid.dt
    for k in range(1, grid.n):
        st = step(topology, st, dt, drives, cfg)
        for j, nm in enumerate(names):
            out[nm][k] = st.traces[j]
    return out


def content_hash(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()


def manifest_text(config_lines: list[str], trace_hashes: dict[str, str]) -> str:
    """Run manifest: a config echo (re-parseable) plus trace content hashes
    recorded as comments."""
    lines = ["# sawsim run manifest"]
    lines.extend(config_lines)
    for name, digest in sorted(trace_hashes.items()):
        lines.append(f"# sha256 {name} = {digest}")
    return "\n".join(lines) + "\n"
