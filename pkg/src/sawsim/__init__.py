"""sawsim: transient co-simulation of a microwave-acoustic isolated gate driver.

Modulated RF source -> SAW delay line -> rectifier/gate network -> GaN HEMT,
with testbenches for device characterization, the double pulse test, a buck
converter and temperature sweeps.
"""

from .signals import (
    ComplexEnvelope,
    PwmSpec,
    TimeGrid,
    Waveform,
    am_modulate,
    integrate_product,
    make_pwm,
    rise_time_10_90,
)
from .saw_device import (
    SawDeviceSpec,
    TwoPortSweep,
    breakdown_voltage,
    center_frequency,
    delay,
    extract_isolation_capacitance,
    filter_envelope,
    isolation_capacitance,
    max_input_voltage,
    thermal_output_scale,
    transfer_function,
)
from .driver_output import (
    PullDownSpec,
    RectifierSpec,
    SourceIvModel,
    output_voltage_vs_power,
    pull_down_current,
    rectify,
    source_voltage_at_load,
)
from .power_devices import (
    DiodeSpec,
    GateChargeState,
    HemtSpec,
    diode_current,
    hemt_channel_current,
    hemt_gate_charge_step,
)
from .engine import CircuitState, SolverConfig, locate_event, run, step

__version__ = "0.1.0"

__all__ = [
    "ComplexEnvelope", "PwmSpec", "TimeGrid", "Waveform", "am_modulate",
    "integrate_product", "make_pwm", "rise_time_10_90",
    "SawDeviceSpec", "TwoPortSweep", "breakdown_voltage", "center_frequency",
    "delay", "extract_isolation_capacitance", "filter_envelope",
    "isolation_capacitance", "max_input_voltage", "thermal_output_scale",
    "transfer_function",
    "PullDownSpec", "RectifierSpec", "SourceIvModel", "output_voltage_vs_power",
    "pull_down_current", "rectify", "source_voltage_at_load",
    "DiodeSpec", "GateChargeState", "HemtSpec", "diode_current",
    "hemt_channel_current", "hemt_gate_charge_step",
    "CircuitState", "SolverConfig", "locate_event", "run", "step",
]
