"""Exception hierarchy; the CLI maps each family to an exit code."""


class BoundsError(Exception):
    """Base class for every error raised by this package."""


class PreconditionError(BoundsError):
    """An input lies outside the region where a bound is proved to hold."""


class DomainError(PreconditionError):
    """A function was evaluated outside its mathematical domain."""


class HypothesisError(PreconditionError):
    """A theorem hypothesis (named in the message) is violated."""


class RangeError(PreconditionError):
    """A log-scale argument lies outside the supported range."""


class CoverageError(PreconditionError):
    """Verified data does not cover the requested range."""


class DataError(BoundsError):
    """An input file is malformed or inconsistent."""


class ResourceError(BoundsError):
    """A request would exceed the configured memory budget."""
