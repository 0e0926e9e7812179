"""Receiver-side electrical model of the SAW gate driver.

Covers the Thevenin-like RF source behavior seen at the rectifier output, the
full-bridge rectifier with hold capacitor and bleed resistor, the RF-power to
output-voltage map, and the enhanced PNP pull-down stage. The rectifier is an
envelope-domain model: the bridge conducts whenever the RF amplitude beats
the hold-node voltage by two diode drops, abstracting per-carrier-cycle peaks
into a continuous comparison against |env| - 2*v_f.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, OutOfRangeError, ResolutionError
from .signals import ComplexEnvelope, Waveform

# Floor for an "ideal" Thevenin source so the charging path stays non-singular.
R_TH_FLOOR = 1e-3


def _default_power_voltage_points() -> tuple:
    # Amplitude law v ~ 10^(P/20) pinned exactly at the measured
    # (34 dBm, 6.23 V) point; assumed configuration, override per device.
    return tuple(
        (p, 6.23 * 10.0 ** ((p - 34.0) / 20.0)) for p in range(20, 41)
    )


@dataclass(frozen=True)
class SourceIvModel:
    """DC output capability of the rectified SAW source.

    iv_points, when present, is the measured (current A, voltage V) curve at
    one fixed RF power; otherwise the source is the linear Thevenin fit
    through (0, v_oc) and (i_sc, 0). power_voltage_points maps input RF power
    [dBm] to the DC output voltage at the reference load.
    """

    v_oc: float = 13.4
    i_sc: float = 44.4e-3
    iv_points: tuple | None = None
    power_voltage_points: tuple = None
    ref_load: float = 385.0

    def __post_init__(self):
        if not self.v_oc > 0 or not self.i_sc > 0:
            raise ConfigError("v_oc and i_sc must be > 0")
        if self.power_voltage_points is None:
            object.__setattr__(
                self, "power_voltage_points", _default_power_voltage_points()
            )
        pv = tuple(map(tuple, self.power_voltage_points))
        object.__setattr__(self, "power_voltage_points", pv)
        if any(b[0] <= a[0] or b[1] <= a[1] for a, b in zip(pv, pv[1:])):
            raise ConfigError("power_voltage_points must be strictly increasing")
        if self.iv_points is not None:
            iv = tuple(map(tuple, self.iv_points))
            object.__setattr__(self, "iv_points", iv)
            if any(b[0] <= a[0] for a, b in zip(iv, iv[1:])):
                raise ConfigError("iv_points currents must be strictly increasing")
            if any(b[1] >= a[1] for a, b in zip(iv, iv[1:])):
                raise ConfigError("iv_points voltages must be strictly decreasing")

    @property
    def r_thevenin(self) -> float:
        return self.v_oc / self.i_sc


@dataclass(frozen=True)
class RectifierSpec:
    """Full-bridge rectifier output network: per-junction drop, hold cap, bleed."""

    diode_vf: float = 0.3
    c_hold: float = 72e-12
    r_bleed: float = 1000.0

    def __post_init__(self):
        if self.diode_vf < 0:
            raise ConfigError("diode_vf must be >= 0")
        if not self.c_hold > 0 or not self.r_bleed > 0:
            raise ConfigError("c_hold and r_bleed must be > 0")


@dataclass(frozen=True)
class PullDownSpec:
    """Enhanced turn-off stage: series diode into the gate plus a PNP sink."""

    enabled: bool = False
    pnp_gain: float = 100.0
    pnp_vbe_on: float = 0.7
    series_diode_vf: float = 0.3
    pulldown_resistance: float = 5.0

    def __post_init__(self):
        if self.pnp_gain < 0 or self.pnp_vbe_on < 0 or self.series_diode_vf < 0:
            raise ConfigError("pull-down gains and drops must be >= 0")
        if not self.pulldown_resistance > 0:
            raise ConfigError("pulldown_resistance must be > 0")


def source_voltage_at_load(model: SourceIvModel, load_current: float) -> float:
    """Output voltage at a DC load current.

    Interpolates the measured iv_points when present, else the linear
    Thevenin law v_oc * (1 - I/i_sc). Currents beyond i_sc are refused.
    """
    if load_current < 0:
        raise ConfigError("load_current must be >= 0")
    if model.iv_points is not None:
        cur = [c for c, _ in model.iv_points]
        vol = [v for _, v in model.iv_points]
        if load_current > cur[-1] + 1e-12:
            raise OutOfRangeError(
                f"load current {load_current:g} A beyond the measured curve"
            )
        return float(np.interp(load_current, cur, vol))
    if load_current > model.i_sc + 1e-12:
        raise OutOfRangeError(
            f"load current {load_current:g} A exceeds i_sc = {model.i_sc:g} A"
        )
    return model.v_oc * (1.0 - load_current / model.i_sc)


def _open_circuit_voltage_at_power(model: SourceIvModel, p_in_dbm: float) -> float:
    pv = model.power_voltage_points
    powers = [p for p, _ in pv]
    volts = [v for _, v in pv]
    if p_in_dbm < powers[0] - 1e-12 or p_in_dbm > powers[-1] + 1e-12:
        raise OutOfRangeError(
            f"RF power {p_in_dbm:g} dBm outside table span "
            f"[{powers[0]:g}, {powers[-1]:g}] dBm; extrapolation refused"
        )
    v_ref = float(np.interp(p_in_dbm, powers, volts))
    # The table is measured at ref_load; undo that divider to get the
    # open-circuit value at this power.
    return v_ref * (model.r_thevenin + model.ref_load) / model.ref_load


def output_voltage_vs_power(
    model: SourceIvModel, p_in_dbm: float, load: float
) -> float:
    """DC output voltage at an RF drive power and DC load resistance.

    Piecewise-linear interpolation of power_voltage_points (tabulated at the
    reference load), corrected to the requested load through the source's
    I-V behavior. A measured nonlinear curve is scaled homothetically in
    (V, I) with the drive amplitude.
    """
    if not load > 0:
        raise ConfigError("load must be > 0 ohm")
    v_oc_p = _open_circuit_voltage_at_power(model, p_in_dbm)
    if model.iv_points is None:
        return v_oc_p * load / (model.r_thevenin + load)
    k = v_oc_p / model.v_oc
    # Solve V_scaled(I) = I * load with V_scaled(I) = k * V(I / k).
    lo, hi = 0.0, k * model.iv_points[-1][0]
    for _ in range(80):
        mid = 0.5 * (lo + hi)
        v = k * source_voltage_at_load(model, mid / k)
        if v > mid * load:
            lo = mid
        else:
            hi = mid
    i = 0.5 * (lo + hi)
    return i * load


def pull_down_current(spec: PullDownSpec, v_gate: float, v_driver: float) -> float:
    """Gate discharge current sunk by the PNP stage.

    Active when the driver node sits a v_be below the gate; the sink is the
    amplified base current, capped by the saturated ohmic path
    v_gate / pulldown_resistance.
    """
    if not spec.enabled:
        return 0.0
    headroom = v_gate - spec.pnp_vbe_on - v_driver
    if headroom <= 0.0 or v_gate <= 0.0:
        return 0.0
    i_base = headroom / spec.pulldown_resistance
    return min(spec.pnp_gain * i_base, v_gate / spec.pulldown_resistance)


def rectify(
    envelope: ComplexEnvelope,
    spec: RectifierSpec,
    source: SourceIvModel | None = None,
    ext_load=None,
    v0: float = 0.0,
) -> Waveform:
    """Envelope-domain rectifier: hold-node voltage on the envelope grid.

    The node charges through the source's Thevenin resistance whenever
    |env(t)| - 2*diode_vf exceeds it, and discharges through r_bleed and the
    external load otherwise (and always). ext_load is None, a resistance in
    ohms, or a callable i(v). Solved by the transient engine's trapezoidal
    stepper on the envelope grid.
    """
    from .topologies import ReceiverChain
    from .engine import SolverConfig, run_fixed_grid

    r_th = max(source.r_thevenin if source is not None else 0.0, R_TH_FLOOR)
    dt = envelope.grid.dt
    if source is not None:
        tau = source.r_thevenin * spec.c_hold
        if dt > 0.25 * tau:
            raise ResolutionError(
                f"envelope grid dt={dt:g} s too coarse for the rectifier "
                f"charging time constant R_th*C = {tau:g} s (need dt <= tau/4)"
            )
    topo = ReceiverChain(spec, r_th=r_th, ext_load=ext_load)
    drive = np.abs(envelope.samples)
    traces = run_fixed_grid(
        topo, envelope.grid, {"env": drive}, SolverConfig(), v_init=(v0,)
    )
    return Waveform(envelope.grid, traces["v_hold"], "volt")
