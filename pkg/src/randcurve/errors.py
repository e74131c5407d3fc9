"""Exception hierarchy for randcurve."""


class RandcurveError(Exception):
    """Base class for all randcurve errors."""


class InvalidArgumentError(RandcurveError, ValueError):
    """An operation was called with arguments outside its domain."""


class OracleLimitError(InvalidArgumentError):
    """An exhaustive oracle was asked to enumerate beyond its size cap."""


class PreconditionError(RandcurveError):
    """An operation's documented precondition does not hold for this input."""


class InvariantViolation(RandcurveError, AssertionError):
    """A property that must hold on every solve was observed to fail."""


class ConfigurationError(RandcurveError):
    """An experiment configuration failed to parse or validate.

    ``key_path`` is the dotted location of the offending entry, e.g. ``params.epsilons.0``.
    """

    def __init__(self, message: str, key_path: str = ""):
        self.key_path = key_path
        super().__init__(f"{key_path}: {message}" if key_path else message)
