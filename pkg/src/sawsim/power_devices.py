"""Behavioral switching-device models: GaN HEMT, Schottky diode, gate charge.

The HEMT channel is a three-region behavioral switch (off / saturation /
ohmic, plus third-quadrant reverse conduction). Current is continuous in
(v_gs, v_ds): the saturation-ohmic corner is blended over a 50 mV knee, and
the cutoff is exact (zero for v_gs <= v_th). Capacitances use a two-level
gate-drain charge with a crossover on the drain-gate voltage, which keeps the
stored charge a well-defined state function.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

from .errors import ConfigError

KNEE_V = 0.05  # saturation/ohmic blending width, volts across v_ds


@dataclass(frozen=True)
class HemtSpec:
    """Behavioral GaN HEMT parameters (650 V / 11 A class by default).

    g_m is the effective plateau transconductance of the three-region model,
    not the datasheet peak. c_gd switches between the low- and high-voltage
    values at `c_gd_crossover` volts of drain-gate voltage.
    """

    v_th: float = 2.2
    g_m: float = 1.0
    r_on: float = 0.15
    c_gs: float = 94e-12
    c_gd_low_vds: float = 345e-12
    c_gd_high_vds: float = 12e-12
    c_gd_crossover: float = 2.0
    c_ds: float = 36e-12
    reverse_offset: float = 2.2
    reverse_slope: float = 2.368

    def __post_init__(self):
        for name in ("v_th", "g_m", "r_on", "c_gs", "c_gd_low_vds",
                     "c_gd_high_vds", "c_gd_crossover", "c_ds",
                     "reverse_offset", "reverse_slope"):
            if not getattr(self, name) > 0:
                raise ConfigError(f"HemtSpec.{name} must be > 0")
        if self.c_gd_low_vds < self.c_gd_high_vds:
            raise ConfigError("c_gd_low_vds must be >= c_gd_high_vds")

    def with_(self, **kw) -> "HemtSpec":
        return replace(self, **kw)


@dataclass(frozen=True)
class DiodeSpec:
    """Piecewise-linear Schottky: v_f knee, series r_s, junction capacitance."""

    v_f: float = 1.7
    r_s: float = 0.35
    c_j: float = 60e-12

    def __post_init__(self):
        if self.v_f < 0 or self.r_s < 0 or self.c_j < 0:
            raise ConfigError("DiodeSpec fields must be >= 0")


def hemt_channel_current(spec: HemtSpec, v_gs: float, v_ds: float) -> float:
    """Signed drain->source channel current.

    Forward (v_ds >= 0): min(g_m*(v_gs - v_th), v_ds/r_on), C1-blended over a
    50 mV knee, exactly zero for v_gs <= v_th. Reverse (v_ds < 0, gate off or
    weakly on): source->drain conduction (negative return value) of magnitude
    (-v_ds - max(0, reverse_offset - v_gs)) / reverse_slope once the bracket
    is positive.
    """
    if v_ds >= 0.0:
        if v_gs <= spec.v_th:
            return 0.0
        i_sat = spec.g_m * (v_gs - spec.v_th)
        i_ohm = v_ds / spec.r_on
        eps = KNEE_V / spec.r_on
        if eps > i_sat:
            eps = i_sat
        x = i_ohm - i_sat
        if x >= eps:
            return i_sat
        if x <= -eps:
            return i_ohm
        return i_sat - (eps - x) ** 2 / (4.0 * eps)
    drop = -v_ds - max(0.0, spec.reverse_offset - v_gs)
    if drop <= 0.0:
        return 0.0
    return -drop / spec.reverse_slope


def hemt_channel_current_and_derivs(
    spec: HemtSpec, v_gs: float, v_ds: float
) -> tuple[float, float, float]:
    """(i_ds, di/dv_gs, di/dv_ds) for the Newton solver."""
    if v_ds >= 0.0:
        if v_gs <= spec.v_th:
            return 0.0, 0.0, 0.0
        i_sat = spec.g_m * (v_gs - spec.v_th)
        i_ohm = v_ds / spec.r_on
        g_ohm = 1.0 / spec.r_on
        eps = KNEE_V / spec.r_on
        eps_from_sat = eps > i_sat
        if eps_from_sat:
            eps = i_sat
        x = i_ohm - i_sat
        if x >= eps:
            return i_sat, spec.g_m, 0.0
        if x <= -eps:
            return i_ohm, 0.0, g_ohm
        u = eps - x
        i = i_sat - u * u / (4.0 * eps)
        blend = u / (2.0 * eps)           # d i / d i_ohm
        di_dds = g_ohm * blend
        if eps_from_sat:
            # eps tracks i_sat: d i / d i_sat collapses to (i_ohm / 2 i_sat)^2.
            di_dgs = spec.g_m * (i_ohm * i_ohm) / (4.0 * i_sat * i_sat)
        else:
            di_dgs = spec.g_m * (1.0 - blend)
        return i, di_dgs, di_dds
    drop = -v_ds - max(0.0, spec.reverse_offset - v_gs)
    if drop <= 0.0:
        return 0.0, 0.0, 0.0
    g = 1.0 / spec.reverse_slope
    d_dgs = -g if v_gs < spec.reverse_offset else 0.0
    return -drop / spec.reverse_slope, d_dgs, g


def hemt_gate_charge(spec: HemtSpec, v_dg: float) -> float:
    """Stored gate-drain charge as a function of drain-gate voltage."""
    xc = spec.c_gd_crossover
    if v_dg <= xc:
        return spec.c_gd_low_vds * v_dg
    return spec.c_gd_low_vds * xc + spec.c_gd_high_vds * (v_dg - xc)


def hemt_c_gd(spec: HemtSpec, v_dg: float) -> float:
    """Incremental gate-drain capacitance at a drain-gate voltage."""
    return spec.c_gd_low_vds if v_dg <= spec.c_gd_crossover else spec.c_gd_high_vds


@dataclass(frozen=True)
class GateChargeState:
    """State of the standalone gate-charge integrator."""

    v_gs: float = 0.0
    v_ds: float = 0.0


def hemt_gate_charge_step(
    spec: HemtSpec,
    state: GateChargeState,
    i_gate: float,
    dt: float,
    dv_ds_dt: float = 0.0,
) -> GateChargeState:
    """Advance the gate node one step under a given gate current.

    The gate node charges c_gs and the v_ds-dependent c_gd; an externally
    imposed drain slew couples through c_gd, which is what pins v_gs during
    the Miller plateau (i_gate is then absorbed by c_gd * dv_ds/dt).
    """
    if dt <= 0:
        raise ConfigError("dt must be > 0")
    c_gd = hemt_c_gd(spec, state.v_ds - state.v_gs)
    dv_gs_dt = (i_gate + c_gd * dv_ds_dt) / (spec.c_gs + c_gd)
    return GateChargeState(
        v_gs=state.v_gs + dv_gs_dt * dt,
        v_ds=state.v_ds + dv_ds_dt * dt,
    )


def diode_current(spec: DiodeSpec, v: float) -> float:
    """Piecewise-linear conduction current; displacement via c_j is the
    engine's job. r_s = 0 with v > v_f is the ideal-switch regime, which only
    the engine can enforce as a node constraint."""
    if v <= spec.v_f:
        return 0.0
    if spec.r_s == 0.0:
        raise ConfigError(
            "ideal-switch regime (r_s = 0, v > v_f): use a topology constraint"
        )
    return (v - spec.v_f) / spec.r_s


def diode_current_and_deriv(spec: DiodeSpec, v: float) -> tuple[float, float]:
    if v <= spec.v_f:
        return 0.0, 0.0
    g = 1.0 / spec.r_s
    return (v - spec.v_f) * g, g
