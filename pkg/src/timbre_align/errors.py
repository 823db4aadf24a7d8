"""Exception types shared across the package."""


class TimbreAlignError(Exception):
    """Base class for all errors raised by this package."""


class ManifestError(TimbreAlignError):
    """A dataset manifest is missing, malformed, or inconsistent."""


class DecodeError(TimbreAlignError):
    """An audio file could not be decoded."""


class InterchangeError(TimbreAlignError):
    """A tensor interchange file or its manifest violates the contract."""


class DimensionError(TimbreAlignError):
    """Two vectors passed to a distance function have different dimensions."""


class ZeroVectorError(TimbreAlignError):
    """Cosine distance is undefined for a zero vector."""


class StrategyError(TimbreAlignError):
    """A length strategy was applied to a representation that does not accept it."""


class EmptyBlockError(TimbreAlignError):
    """A block operation was asked to run on zero defined entries."""
