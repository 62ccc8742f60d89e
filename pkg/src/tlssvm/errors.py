"""Exception types shared across the package.

The CLI maps these onto exit codes (config -> 2, data -> 3, solver -> 4).
"""


class ConfigError(ValueError):
    """Invalid configuration, CLI usage, or experiment spec."""


class DataError(ValueError):
    """Malformed input files or datasets inconsistent with a model/grid."""


class SolverError(RuntimeError):
    """A linear subproblem could not be solved to the required accuracy."""


class UnsupportedOperation(RuntimeError):
    """Operation not available for the given kernel family."""
