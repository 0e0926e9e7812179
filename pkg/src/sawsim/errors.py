"""Exception hierarchy shared across the toolkit.

The CLI maps these onto exit codes: ConfigError -> 2, SolverError -> 3,
MetricError -> 4.
"""


class SawsimError(Exception):
    """Base class for all toolkit errors."""


class ConfigError(SawsimError):
    """Invalid configuration, spec invariant violation, or bad input value."""


class ResolutionError(ConfigError):
    """A grid is too coarse for the requested signal or circuit dynamics."""


class GridMismatchError(ConfigError):
    """Two waveforms that must share a time grid do not."""


class OutOfRangeError(ConfigError):
    """A query falls outside a table or validity range; extrapolation refused."""


class SolverError(SawsimError):
    """Transient engine failure (Newton non-convergence, non-settling run)."""


class MetricError(SawsimError):
    """A waveform metric could not be extracted (missing/ambiguous transition)."""
