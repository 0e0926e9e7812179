"""Scenario runner: parse configuration, dispatch testbenches and sweeps,
emit CSV traces, a metrics summary and a re-parseable run manifest.

Usage:
    sawsim <scenario> [--config FILE] [--out DIR] [--jobs N]
                      [--set key=value ...]

Scenarios: characterize, dpt, buck, thermal, sweep. The config format is
line-oriented `section.key = value` with `#` comments; every key is listed in
SCHEMA below. Exit codes: 0 ok, 2 config error, 3 solver error, 4 metric
error.
"""

from __future__ import annotations

import argparse
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .driver_output import PullDownSpec, RectifierSpec, SourceIvModel
from .engine import SolverConfig, content_hash, manifest_text
from .errors import ConfigError, MetricError, SawsimError, SolverError
from .power_devices import DiodeSpec, HemtSpec
from .saw_device import (
    SawDeviceSpec,
    breakdown_voltage,
    extract_isolation_capacitance,
    isolation_capacitance,
    make_series_c_sweep,
    touchstone_text,
)
from .signals import Waveform, waveform_csv_text
from .testbenches import (
    BuckConfig,
    DptConfig,
    ideal_buck_config,
    run_buck,
    run_characterization,
    run_dpt,
    run_thermal_sweep,
)

SCENARIOS = ("characterize", "dpt", "buck", "thermal", "sweep")

# key -> (type, constraint, default, provenance). Constraint: pos, nonneg,
# frac (0..1), bool, any. Provenance "paper" marks a Methods-cited value;
# everything else is flagged `assumed` in the manifest.
SCHEMA = {
    "scenario": ("str", "scenario", None, "n/a"),
    "saw.pitch": ("float", "pos", 8.55e-6, "paper"),
    "saw.pairs": ("int", "pos", 20, "paper"),
    "saw.aperture": ("float", "pos", 500e-6, "paper"),
    "saw.gap": ("float", "pos", 1.25e-3, "paper"),
    "saw.velocity": ("float", "pos", 3813.3, "assumed"),
    "saw.peak_transmission_db": ("float", "nonpos", -5.12, "paper"),
    "saw.frac_bandwidth": ("float", "frac", 0.10, "paper"),
    "saw.prop_loss_db_per_mm": ("float", "nonneg", 0.2, "paper"),
    "saw.k2": ("float", "frac", 0.053, "paper"),
    "saw.coercive_field": ("float", "pos", 20e6, "paper"),
    "saw.max_input_power": ("float", "pos", 10.0, "paper"),
    "saw.isolation_cap_table": ("table", "any", None, "assumed"),
    "saw.breakdown_table": ("table", "any", None, "assumed"),
    "source.v_oc": ("float", "pos", 13.4, "paper"),
    "source.i_sc": ("float", "pos", 44.4e-3, "paper"),
    "source.ref_load": ("float", "pos", 385.0, "paper"),
    "source.power_voltage_points": ("table", "any", None, "assumed"),
    "dut.v_th": ("float", "pos", None, "assumed"),
    "dut.g_m": ("float", "pos", None, "assumed"),
    "dut.r_on": ("float", "pos", None, "assumed"),
    "dut.c_gs": ("float", "pos", None, "assumed"),
    "dut.c_gd_low": ("float", "pos", None, "assumed"),
    "dut.c_gd_high": ("float", "pos", None, "assumed"),
    "dut.c_gd_crossover": ("float", "pos", None, "assumed"),
    "dut.c_ds": ("float", "pos", None, "assumed"),
    "dut.reverse_offset": ("float", "pos", None, "assumed"),
    "dut.reverse_slope": ("float", "pos", None, "assumed"),
    "fwd.v_f": ("float", "nonneg", None, "assumed"),
    "fwd.r_s": ("float", "nonneg", None, "assumed"),
    "fwd.c_j": ("float", "nonneg", None, "assumed"),
    "rectifier.diode_vf": ("float", "nonneg", 0.3, "assumed"),
    "pulldown.enabled": ("bool", "any", None, "assumed"),
    "pulldown.pnp_gain": ("float", "pos", 100.0, "assumed"),
    "pulldown.pnp_vbe_on": ("float", "nonneg", 0.7, "assumed"),
    "pulldown.series_diode_vf": ("float", "nonneg", 0.3, "assumed"),
    "pulldown.pulldown_resistance": ("float", "pos", 5.0, "assumed"),
    "characterize.rf_power": ("float", "any", 34.0, "paper"),
    "characterize.r_bleed": ("float", "pos", 1000.0, "paper"),
    "characterize.c_hold": ("float", "pos", 72e-12, "paper"),
    "dpt.v_dc": ("float", "pos", 25.0, "paper"),
    "dpt.l": ("float", "pos", 132e-6, "paper"),
    "dpt.c_link": ("float", "pos", 94e-6, "paper"),
    "dpt.r_g": ("float", "pos", 385.0, "paper"),
    "dpt.c_hold": ("float", "pos", 72e-12, "paper"),
    "dpt.pulse1": ("float", "pos", 10e-6, "paper"),
    "dpt.gap": ("float", "pos", 10e-6, "paper"),
    "dpt.pulse2": ("float", "pos", 10e-6, "paper"),
    "dpt.rf_power": ("float", "any", 34.0, "paper"),
    "buck.v_in": ("float", "pos", 15.0, "paper"),
    "buck.l": ("float", "pos", 132e-6, "paper"),
    "buck.c_out": ("float", "pos", 4.2e-6, "paper"),
    "buck.r_load": ("float", "pos", 8.0, "paper"),
    "buck.f_sw": ("float", "pos", 50e3, "paper"),
    "buck.duty": ("float", "frac", 0.5, "paper"),
    "buck.rf_power": ("float", "any", 34.0, "paper"),
    "buck.r_g": ("float", "pos", 385.0, "paper"),
    "buck.c_hold": ("float", "pos", 72e-12, "paper"),
    "buck.min_cycles": ("int", "pos", 40, "assumed"),
    "buck.max_cycles": ("int", "pos", 200, "assumed"),
    "buck.ideal": ("bool", "any", False, "assumed"),
    "thermal.temps": ("floats", "any",
                      (0.535, 100.0, 200.0, 294.7, 350.0, 400.0, 473.0, 520.0),
                      "assumed"),
    "thermal.nominal_output_v": ("float", "pos", 4.5, "paper"),
    "thermal.room_temperature": ("float", "pos", 294.7, "paper"),
    "sweep.parameter": ("str", "any", "dpt.rf_power", "assumed"),
    "sweep.values": ("floats", "any",
                     (31.0, 32.0, 33.0, 34.0, 35.0, 36.0, 37.0), "assumed"),
    "sweep.jobs": ("int", "pos", 1, "assumed"),
}

_HEMT_DEFAULT = HemtSpec()
_FWD_DEFAULT = DiodeSpec()
_HEMT_KEYS = {
    "dut.v_th": "v_th", "dut.g_m": "g_m", "dut.r_on": "r_on",
    "dut.c_gs": "c_gs", "dut.c_gd_low": "c_gd_low_vds",
    "dut.c_gd_high": "c_gd_high_vds", "dut.c_gd_crossover": "c_gd_crossover",
    "dut.c_ds": "c_ds", "dut.reverse_offset": "reverse_offset",
    "dut.reverse_slope": "reverse_slope",
}


def _schema_default(key):
    typ, cons, default, prov = SCHEMA[key]
    if default is not None:
        return default
    if key.startswith("dut."):
        return getattr(_HEMT_DEFAULT, _HEMT_KEYS[key])
    if key == "fwd.v_f":
        return _FWD_DEFAULT.v_f
    if key == "fwd.r_s":
        return _FWD_DEFAULT.r_s
    if key == "fwd.c_j":
        return _FWD_DEFAULT.c_j
    if key == "pulldown.enabled":
        return None  # scenario-dependent
    if key == "saw.isolation_cap_table":
        return SawDeviceSpec().isolation_cap_table
    if key == "saw.breakdown_table":
        return SawDeviceSpec().breakdown_table
    if key == "source.power_voltage_points":
        return SourceIvModel().power_voltage_points
    return None


def _parse_value(key: str, raw: str, line_no: int):
    typ, cons, _, _ = SCHEMA[key]
    raw = raw.strip()
    try:
        if typ == "str":
            val = raw
        elif typ == "bool":
            if raw.lower() in ("true", "1", "yes", "on"):
                val = True
            elif raw.lower() in ("false", "0", "no", "off"):
                val = False
            else:
                raise ValueError("expected true/false")
        elif typ == "int":
            val = int(raw)
        elif typ == "float":
            val = float(raw)
        elif typ == "floats":
            val = tuple(float(x) for x in raw.split(",") if x.strip())
            if not val:
                raise ValueError("empty list")
        elif typ == "table":
            pairs = []
            for item in raw.split(","):
                a, b = item.split(":")
                pairs.append((float(a), float(b)))
            val = tuple(pairs)
        else:
            raise ValueError(f"unhandled type {typ}")
    except ValueError as exc:
        raise ConfigError(f"line {line_no}: bad value for {key}: {exc}")
    _check_constraint(key, val, cons, line_no)
    return val


def _check_constraint(key, val, cons, line_no=None):
    where = f"line {line_no}: " if line_no is not None else ""
    if cons == "pos" and not val > 0:
        raise ConfigError(f"{where}{key} must be > 0, got {val}")
    if cons == "nonneg" and val < 0:
        raise ConfigError(f"{where}{key} must be >= 0, got {val}")
    if cons == "nonpos" and val > 0:
        raise ConfigError(f"{where}{key} must be <= 0, got {val}")
    if cons == "frac" and not 0.0 < val < 1.0:
        raise ConfigError(f"{where}{key} must be in (0, 1), got {val}")
    if cons == "scenario" and val not in SCENARIOS:
        raise ConfigError(
            f"{where}unknown scenario {val!r}, expected one of {SCENARIOS}"
        )


@dataclass
class ScenarioConfig:
    """Fully resolved scenario: name plus a flat key->value map."""

    scenario: str
    values: dict = field(default_factory=dict)

    def get(self, key):
        if key in self.values:
            return self.values[key]
        return _schema_default(key)

    def is_default(self, key) -> bool:
        return key not in self.values


def parse_config(text: str, overrides=()) -> ScenarioConfig:
    """Parse the line-oriented config; reject unknown keys; fill defaults."""
    values = {}
    for line_no, raw_line in enumerate(text.splitlines(), start=1):
        line = raw_line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {line_no}: expected `key = value`")
        key, _, raw = line.partition("=")
        key = key.strip()
        if key not in SCHEMA:
            raise ConfigError(f"line {line_no}: unknown key {key!r}")
        values[key] = _parse_value(key, raw, line_no)
    for item in overrides:
        if "=" not in item:
            raise ConfigError(f"--set expects key=value, got {item!r}")
        key, _, raw = item.partition("=")
        key = key.strip()
        if key not in SCHEMA:
            raise ConfigError(f"--set: unknown key {key!r}")
        values[key] = _parse_value(key, raw, 0)
    if "scenario" not in values:
        raise ConfigError("scenario required (set `scenario = <name>`)")
    scenario = values.pop("scenario")
    cfg = ScenarioConfig(scenario=scenario, values=values)
    _validate_cross(cfg)
    return cfg


def _validate_cross(cfg: ScenarioConfig):
    if cfg.scenario == "sweep":
        param = cfg.get("sweep.parameter")
        if param not in SCHEMA or param == "scenario":
            raise ConfigError(f"sweep.parameter: unknown parameter path {param!r}")
    # Constraint checks for values coming from --set on keys with defaults.
    for key, val in cfg.values.items():
        _check_constraint(key, val, SCHEMA[key][1])


# ---------------------------------------------------------------------------
# Config -> spec objects


def _saw_spec(cfg: ScenarioConfig) -> SawDeviceSpec:
    kw = dict(
        pitch=cfg.get("saw.pitch"), pairs=cfg.get("saw.pairs"),
        aperture=cfg.get("saw.aperture"), gap=cfg.get("saw.gap"),
        saw_velocity=cfg.get("saw.velocity"),
        peak_transmission_db=cfg.get("saw.peak_transmission_db"),
        frac_bandwidth=cfg.get("saw.frac_bandwidth"),
        prop_loss_db_per_mm=cfg.get("saw.prop_loss_db_per_mm"),
        k2=cfg.get("saw.k2"), coercive_field=cfg.get("saw.coercive_field"),
        max_input_power=cfg.get("saw.max_input_power"),
    )
    if cfg.get("saw.isolation_cap_table") is not None:
        kw["isolation_cap_table"] = cfg.get("saw.isolation_cap_table")
    if cfg.get("saw.breakdown_table") is not None:
        kw["breakdown_table"] = cfg.get("saw.breakdown_table")
    return SawDeviceSpec(**kw)


def _source_model(cfg: ScenarioConfig) -> SourceIvModel:
    return SourceIvModel(
        v_oc=cfg.get("source.v_oc"), i_sc=cfg.get("source.i_sc"),
        ref_load=cfg.get("source.ref_load"),
        power_voltage_points=cfg.get("source.power_voltage_points"),
    )


def _hemt_spec(cfg: ScenarioConfig) -> HemtSpec:
    return HemtSpec(**{attr: cfg.get(key) for key, attr in _HEMT_KEYS.items()})


def _fwd_spec(cfg: ScenarioConfig) -> DiodeSpec:
    return DiodeSpec(v_f=cfg.get("fwd.v_f"), r_s=cfg.get("fwd.r_s"),
                     c_j=cfg.get("fwd.c_j"))


def _pulldown_spec(cfg: ScenarioConfig, default_enabled: bool) -> PullDownSpec:
    enabled = cfg.get("pulldown.enabled")
    if enabled is None:
        enabled = default_enabled
    return PullDownSpec(
        enabled=enabled, pnp_gain=cfg.get("pulldown.pnp_gain"),
        pnp_vbe_on=cfg.get("pulldown.pnp_vbe_on"),
        series_diode_vf=cfg.get("pulldown.series_diode_vf"),
        pulldown_resistance=cfg.get("pulldown.pulldown_resistance"),
    )


def build_dpt_config(cfg: ScenarioConfig) -> DptConfig:
    return DptConfig(
        v_dc=cfg.get("dpt.v_dc"), l=cfg.get("dpt.l"),
        c_link=cfg.get("dpt.c_link"), fwd=_fwd_spec(cfg), dut=_hemt_spec(cfg),
        r_g=cfg.get("dpt.r_g"), c_hold=cfg.get("dpt.c_hold"),
        pulse1=cfg.get("dpt.pulse1"), gap=cfg.get("dpt.gap"),
        pulse2=cfg.get("dpt.pulse2"), rf_power=cfg.get("dpt.rf_power"),
        pulldown=_pulldown_spec(cfg, default_enabled=False),
        saw=_saw_spec(cfg), source=_source_model(cfg),
        rect_diode_vf=cfg.get("rectifier.diode_vf"),
    )


def build_buck_config(cfg: ScenarioConfig) -> BuckConfig:
    hemt = _hemt_spec(cfg)
    base = BuckConfig(
        v_in=cfg.get("buck.v_in"), l=cfg.get("buck.l"),
        c_out=cfg.get("buck.c_out"), r_load=cfg.get("buck.r_load"),
        f_sw=cfg.get("buck.f_sw"), duty=cfg.get("buck.duty"),
        high_side=hemt, low_side=hemt,
        pulldown=_pulldown_spec(cfg, default_enabled=True),
        rf_power=cfg.get("buck.rf_power"), r_g=cfg.get("buck.r_g"),
        c_hold=cfg.get("buck.c_hold"), saw=_saw_spec(cfg),
        source=_source_model(cfg),
        rect_diode_vf=cfg.get("rectifier.diode_vf"),
        min_cycles=cfg.get("buck.min_cycles"),
        max_cycles=cfg.get("buck.max_cycles"),
    )
    if cfg.get("buck.ideal"):
        return ideal_buck_config(base)
    return base


# ---------------------------------------------------------------------------
# Artifacts


def _fmt(val) -> str:
    if isinstance(val, bool):
        return "true" if val else "false"
    if isinstance(val, (int,)):
        return str(val)
    if isinstance(val, float):
        return f"{val:.9g}"
    if isinstance(val, tuple):
        if val and isinstance(val[0], tuple):
            return ",".join(f"{a:g}:{b:g}" for a, b in val)
        return ",".join(f"{x:.9g}" for x in val)
    return str(val)


_SECTION_KEYS = {
    "characterize": ("saw.", "source.", "rectifier.", "characterize."),
    "dpt": ("saw.", "source.", "rectifier.", "dut.", "fwd.", "pulldown.",
            "dpt."),
    "buck": ("saw.", "source.", "rectifier.", "dut.", "pulldown.", "buck."),
    "thermal": ("saw.", "source.", "rectifier.", "thermal."),
}
_SECTION_KEYS["sweep"] = _SECTION_KEYS["dpt"] + ("sweep.",)


def config_echo_lines(cfg: ScenarioConfig) -> list[str]:
    """The resolved configuration as re-parseable `key = value` lines, each
    default annotated with its provenance (paper-cited or assumed)."""
    lines = [f"scenario = {cfg.scenario}"]
    prefixes = _SECTION_KEYS[cfg.scenario]
    for key in SCHEMA:
        if key == "scenario" or not key.startswith(prefixes):
            continue
        val = cfg.get(key)
        if val is None:
            continue
        prov = SCHEMA[key][3]
        tag = prov if cfg.is_default(key) else "override"
        lines.append(f"{key} = {_fmt(val)}  # {tag}")
    return lines


def _write(path, text) -> str:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(text)
    return content_hash(text.encode())


def _write_metrics(path, metrics: dict) -> str:
    lines = [f"{k} = {_fmt(v)}" for k, v in metrics.items()]
    return _write(path, "\n".join(lines) + "\n")


def run_scenario(cfg: ScenarioConfig, out_dir: str, jobs: int = 1) -> int:
    """Execute a scenario, writing traces CSV(s), metrics.txt and manifest.txt
    into out_dir. Returns the process exit status."""
    os.makedirs(out_dir, exist_ok=True)
    hashes = {}
    if cfg.scenario == "characterize":
        saw = _saw_spec(cfg)
        src = _source_model(cfg)
        rect = RectifierSpec(diode_vf=cfg.get("rectifier.diode_vf"),
                             c_hold=cfg.get("characterize.c_hold"),
                             r_bleed=cfg.get("characterize.r_bleed"))
        res = run_characterization(saw, src, rect,
                                   rf_power=cfg.get("characterize.rf_power"))
        s21_rows = ["freq_Hz,re_s21,im_s21"]
        for f, s in zip(res.sweep.freqs, res.sweep.s21):
            s21_rows.append(f"{f:.8e},{s.real:.8e},{s.imag:.8e}")
        hashes["s21.csv"] = _write(os.path.join(out_dir, "s21.csv"),
                                   "\n".join(s21_rows) + "\n")
        hashes["s21_touchstone.txt"] = _write(
            os.path.join(out_dir, "s21_touchstone.txt"),
            touchstone_text(res.sweep))
        iv_rows = ["current_A,voltage_V"]
        for i, v in zip(res.iv_currents, res.iv_voltages):
            iv_rows.append(f"{i:.8e},{v:.8e}")
        hashes["iv.csv"] = _write(os.path.join(out_dir, "iv.csv"),
                                  "\n".join(iv_rows) + "\n")
        hashes["edge.csv"] = _write(
            os.path.join(out_dir, "edge.csv"),
            waveform_csv_text({"v_out": res.edge_waveform}))
        gap_mm = saw.gap * 1e3
        cap_pf = isolation_capacitance(saw, gap_mm)
        synth = make_series_c_sweep(cap_pf * 1e-12,
                                    np.linspace(75e6, 90e6, 151))
        cap_extracted = extract_isolation_capacitance(synth) * 1e12
        metrics = {
            "s21_peak_db": res.peak_db,
            "s21_peak_freq_hz": res.peak_freq,
            "frac_bandwidth": res.frac_bandwidth,
            "rise_time_s": res.rise_time,
            "fall_time_s": res.fall_time,
            "v_oc_v": src.v_oc,
            "i_sc_a": src.i_sc,
            "isolation_cap_pf": cap_pf,
            "isolation_cap_extracted_pf": cap_extracted,
            "breakdown_kv": breakdown_voltage(saw, gap_mm),
        }
        hashes["metrics.txt"] = _write_metrics(
            os.path.join(out_dir, "metrics.txt"), metrics)
    elif cfg.scenario == "dpt":
        res = run_dpt(build_dpt_config(cfg))
        keep = ("v_gs", "v_ds", "i_ds", "i_l", "env")
        hashes["traces.csv"] = _write(
            os.path.join(out_dir, "traces.csv"),
            waveform_csv_text({k: res.traces[k] for k in keep}))
        m = res.metrics
        metrics = {
            "t_on_s": m.t_on, "t_off_s": m.t_off, "e_on_j": m.e_on,
            "e_off_j": m.e_off, "di_dt_a_per_s": m.di_dt,
            "i_at_second_turn_on_a": m.i_at_second_turn_on,
            "overshoot_current_a": m.overshoot_current,
        }
        hashes["metrics.txt"] = _write_metrics(
            os.path.join(out_dir, "metrics.txt"), metrics)
    elif cfg.scenario == "buck":
        res = run_buck(build_buck_config(cfg))
        keep = ("v_out", "v_sw", "v_gs", "v_ds_hs", "i_l")
        hashes["traces.csv"] = _write(
            os.path.join(out_dir, "traces.csv"),
            waveform_csv_text({k: res.traces[k] for k in keep}))
        metrics = {
            "v_out_v": res.v_out,
            "efficiency": res.efficiency,
            "efficiency_with_rf_drive": res.efficiency_with_drive,
            "inductor_ripple_a": res.ripple,
            "volt_second_avg_v": res.volt_second_avg,
            "energy_audit_residual": res.audit_residual,
            "cycles_to_settle": res.cycles_to_settle,
        }
        hashes["metrics.txt"] = _write_metrics(
            os.path.join(out_dir, "metrics.txt"), metrics)
    elif cfg.scenario == "thermal":
        saw = _saw_spec(cfg)
        src = _source_model(cfg)
        rect = RectifierSpec(diode_vf=cfg.get("rectifier.diode_vf"),
                             c_hold=cfg.get("characterize.c_hold"),
                             r_bleed=cfg.get("characterize.r_bleed"))
        rows = run_thermal_sweep(
            saw, cfg.get("thermal.temps"), rect, src,
            nominal_output_v=cfg.get("thermal.nominal_output_v"),
            room_temperature=cfg.get("thermal.room_temperature"))
        txt = ["temperature_K,peak_V,rise_time_s,fall_time_s"]
        for r in rows:
            txt.append(f"{r['temperature_k']:.8e},{r['peak_v']:.8e},"
                       f"{r['rise_time_s']:.8e},{r['fall_time_s']:.8e}")
        hashes["thermal.csv"] = _write(os.path.join(out_dir, "thermal.csv"),
                                       "\n".join(txt) + "\n")
        metrics = {
            "peak_room_v": next(r["peak_v"] for r in rows
                                if abs(r["temperature_k"]
                                       - cfg.get("thermal.room_temperature"))
                                < 1e-6),
            "n_points": len(rows),
        }
        hashes["metrics.txt"] = _write_metrics(
            os.path.join(out_dir, "metrics.txt"), metrics)
    elif cfg.scenario == "sweep":
        rows = run_sweep(cfg, out_dir, jobs)
        header = "point," + cfg.get("sweep.parameter") + "," + ",".join(
            k for k in rows[0][1]
        )
        txt = [header]
        for (val, metrics), idx in zip(rows, range(len(rows))):
            txt.append(f"{idx},{val:.9g}," + ",".join(
                _fmt(v) for v in metrics.values()))
        hashes["sweep_metrics.csv"] = _write(
            os.path.join(out_dir, "sweep_metrics.csv"), "\n".join(txt) + "\n")
    else:
        raise ConfigError(f"unknown scenario {cfg.scenario!r}")

    manifest = manifest_text(config_echo_lines(cfg), hashes)
    _write(os.path.join(out_dir, "manifest.txt"), manifest)
    return 0


def _sweep_point(args):
    cfg_values, scenario, param, value, out_dir = args
    values = dict(cfg_values)
    values[param] = value
    point_cfg = ScenarioConfig(scenario="dpt", values=values)
    res = run_dpt(build_dpt_config(point_cfg))
    m = res.metrics
    metrics = {
        "t_on_s": m.t_on, "t_off_s": m.t_off, "e_on_j": m.e_on,
        "e_off_j": m.e_off, "di_dt_a_per_s": m.di_dt,
        "i_at_second_turn_on_a": m.i_at_second_turn_on,
    }
    os.makedirs(out_dir, exist_ok=True)
    _write_metrics(os.path.join(out_dir, "metrics.txt"), metrics)
    return value, metrics


def run_sweep(cfg: ScenarioConfig, out_dir: str, jobs: int = 1):
    """Run the swept scenario point by point (DPT metrics per point). Points
    are independent; with jobs > 1 they run on a process pool."""
    param = cfg.get("sweep.parameter")
    values = cfg.get("sweep.values")
    tasks = [
        (dict(cfg.values), "dpt", param, v,
         os.path.join(out_dir, f"point_{i:02d}"))
        for i, v in enumerate(values)
    ]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            rows = list(pool.map(_sweep_point, tasks))
    else:
        rows = [_sweep_point(t) for t in tasks]
    return rows


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="sawsim",
        description="Transient co-simulation of a SAW-isolated gate driver",
    )
    parser.add_argument("scenario", nargs="?", choices=SCENARIOS,
                        help="scenario to run (may also come from the config)")
    parser.add_argument("--config", help="configuration file")
    parser.add_argument("--out", default="sawsim_out", help="output directory")
    parser.add_argument("--jobs", type=int, default=1,
                        help="worker processes for sweep points")
    parser.add_argument("--set", action="append", default=[], metavar="K=V",
                        help="override a config key")
    args = parser.parse_args(argv)

    try:
        text = ""
        if args.config:
            with open(args.config, "r", encoding="utf-8") as fh:
                text = fh.read()
        overrides = list(args.set)
        if args.scenario:
            overrides.append(f"scenario = {args.scenario}")
        cfg = parse_config(text, overrides=overrides)
        if args.jobs < 1:
            raise ConfigError("--jobs must be >= 1")
        return run_scenario(cfg, args.out, jobs=args.jobs)
    except ConfigError as exc:
        print(f"sawsim: config error: {exc}", file=sys.stderr)
        return 2
    except SolverError as exc:
        print(f"sawsim: solver error: {exc}", file=sys.stderr)
        return 3
    except MetricError as exc:
        print(f"sawsim: metric error: {exc}", file=sys.stderr)
        return 4
    except SawsimError as exc:
        print(f"sawsim: error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"sawsim: i/o error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
