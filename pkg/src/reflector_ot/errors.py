"""Exception hierarchy shared by all modules."""


class ReflectorError(Exception):
    """Base class for every error raised by this package."""


class PoleSingularity(ReflectorError):
    """A direction too close to the south pole (1 + mz vanishes)."""


class OutOfRange(ReflectorError):
    """A planar point on or beyond the circle of radius ell."""


class NonpositiveCost(ReflectorError):
    """The cost K is not positive, so log K is undefined."""


class NonpositiveRadius(ReflectorError):
    """A reflector radius that is zero or negative."""


class DegenerateMesh(ReflectorError):
    """Triangulation failed or produced zero-area cells."""


class DegenerateRay(ReflectorError):
    """The ray tracing map has a vanishing denominator."""


class EmptySubset(ReflectorError):
    """A constraint subset with no pairs."""


class MissingRow(ReflectorError):
    """An input sample has no active constraint."""


class NumericalFailure(ReflectorError):
    """The LP backend failed for reasons other than unboundedness."""


class Unbounded(ReflectorError):
    """The LP is unbounded; ``witness`` describes why."""

    def __init__(self, message, witness=None):
        super().__init__(message)
        self.witness = witness


class BadBracket(ReflectorError):
    """Endpoints of a threshold bracket do not straddle the coverage change."""


class InsufficientData(ReflectorError):
    """Too few points to fit a decay rate."""


class ConstraintCapExceeded(ReflectorError):
    """The selected constraint count exceeds the configured memory cap."""

    def __init__(self, count, cap):
        super().__init__(f"{count} selected constraints exceed cap {cap}")
        self.count = count
        self.cap = cap


class ConfigError(ReflectorError):
    """Invalid run configuration."""
