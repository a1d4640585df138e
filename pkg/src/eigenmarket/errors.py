"""Exception hierarchy shared across the package.

The split mirrors the CLI exit codes: configuration or usage problems,
data that fails validation, and numerical routines that did not converge.
"""


class EigenmarketError(Exception):
    """Base class for all package-specific errors."""


class ConfigError(EigenmarketError):
    """Invalid parameters, unusable flags, or missing input files."""


class DataValidationError(EigenmarketError):
    """Input data violates a documented contract (shape, range, ordering)."""


class NumericalError(EigenmarketError):
    """A numerical routine failed to reach its stated tolerance."""
