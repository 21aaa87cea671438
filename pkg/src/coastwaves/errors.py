"""Exception hierarchy; the CLI maps these onto exit codes."""


class CoastwavesError(Exception):
    """Base class for all package errors."""


class ConfigError(CoastwavesError, ValueError):
    """Bad configuration or model definition."""


class NumericalError(CoastwavesError, ArithmeticError):
    """A numerical stage failed to converge or met a forbidden configuration."""
