"""Shared fixtures. The expensive transient runs are session-scoped so the
acceptance module and the unit tests reuse one simulation each."""

import pytest

from sawsim.driver_output import PullDownSpec, SourceIvModel
from sawsim.engine import SolverConfig
from sawsim.saw_device import SawDeviceSpec
from sawsim.testbenches import (
    BuckConfig,
    DptConfig,
    ideal_buck_config,
    run_buck,
    run_characterization,
    run_dpt,
    run_thermal_sweep,
)

SWEEP_POWERS = (31.0, 32.0, 33.0, 34.0, 35.0, 36.0, 37.0)


@pytest.fixture(scope="session")
def saw_spec():
    return SawDeviceSpec()


@pytest.fixture(scope="session")
def source_model():
    return SourceIvModel()


@pytest.fixture(scope="session")
def char_result(saw_spec, source_model):
    return run_characterization(saw_spec, source_model)


@pytest.fixture(scope="session")
def dpt_result():
    return run_dpt(DptConfig())


@pytest.fixture(scope="session")
def dpt_pulldown_result():
    return run_dpt(DptConfig().replace(pulldown=PullDownSpec(enabled=True)))


@pytest.fixture(scope="session")
def sweep_results():
    solver = SolverConfig(dt_fast=4e-10, dt_slow=4e-9)
    out = []
    for p in SWEEP_POWERS:
        out.append((p, run_dpt(DptConfig().replace(rf_power=p), solver=solver)))
    return out


@pytest.fixture(scope="session")
def buck_result():
    return run_buck(BuckConfig())


@pytest.fixture(scope="session")
def buck_ideal_result():
    return run_buck(ideal_buck_config())


@pytest.fixture(scope="session")
def thermal_rows(saw_spec):
    return run_thermal_sweep(
        saw_spec, (0.535, 100.0, 200.0, 294.7, 350.0, 400.0, 473.0, 520.0)
    )
