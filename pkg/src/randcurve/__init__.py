"""randcurve - ground states, weak norms and interface geometry for random-field curve models."""

__version__ = "0.1.0"

from .errors import (
    ConfigurationError,
    InvalidArgumentError,
    InvariantViolation,
    OracleLimitError,
    PreconditionError,
    RandcurveError,
)

__all__ = [
    "ConfigurationError",
    "InvalidArgumentError",
    "InvariantViolation",
    "OracleLimitError",
    "PreconditionError",
    "RandcurveError",
    "__version__",
]
