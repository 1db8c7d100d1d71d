"""Exception hierarchy shared across the package.

Two families matter for the CLI exit codes: configuration/parameter problems
(exit 2) and numerical failures detected at run time (exit 3).
"""


class LfscatterError(Exception):
    """Base class for all package errors."""


class ParameterError(LfscatterError):
    """A parameter is nonfinite or violates a documented precondition."""


class ConfigError(ParameterError):
    """A config file could not be parsed or violates a constraint."""


class AccuracyError(LfscatterError):
    """A self-check (step halving, truncation audit) exceeded its tolerance."""


class NumericalError(LfscatterError):
    """Integration produced a state violating physical invariants."""


class GridMismatchError(ParameterError):
    """Two spectra were compared on different mode grids."""
