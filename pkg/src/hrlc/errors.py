"""Exception types shared across the package.

Every error raised by hrlc derives from HrlcError so callers (and the CLI's
exit-code mapping) can distinguish our failures from genuine bugs.
"""


class HrlcError(Exception):
    """Base class for all hrlc errors."""


class FormatError(HrlcError):
    """A file container is malformed or uses an unsupported variant."""


class ShapeError(HrlcError):
    """Array dimensions or dtypes do not match the operation's contract."""


class DataError(HrlcError):
    """Data values are invalid (NaN/Inf where finite values are required)."""


class IoError(HrlcError):
    """An underlying read or write failed."""


class NotFoundError(HrlcError):
    """No input matched (missing file, empty glob)."""


class RangeError(HrlcError):
    """A count or index parameter is outside its valid range."""


class DegenerateError(HrlcError):
    """Input is rank-deficient for the requested decomposition.

    Carries the attained numerical rank so callers can retry at a
    feasible dimension.
    """

    def __init__(self, message, attained_rank):
        super().__init__(message)
        self.attained_rank = attained_rank


class StateError(HrlcError):
    """An operation was called before its prerequisite stage ran."""


class InternalError(HrlcError):
    """An invariant that should be unreachable was violated."""


class ConfigError(HrlcError):
    """A configuration file or flag value is invalid."""
