"""Exception types raised by rankreg."""


class RankRegError(Exception):
    """Base class for all rankreg errors."""


class InputError(RankRegError, ValueError):
    """Malformed input: non-finite entries, shape mismatch, out-of-range index."""


class DegenerateProblemError(RankRegError):
    """The problem data make a required quantity vanish (e.g. ``D == 0``)."""


class PropertyViolation(RankRegError):
    """A trace breaks a structural property it is expected to satisfy."""

    def __init__(self, message, iteration=None):
        super().__init__(message)
        self.iteration = iteration


class InsufficientDataError(RankRegError):
    """A trace is too short, or its reference point is unusable, for a check."""
