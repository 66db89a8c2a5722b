"""Exception hierarchy shared by all modules."""


class ValextError(Exception):
    """Base class for all errors raised by valext."""


class DimensionMismatchError(ValextError, ValueError):
    """Operands live in different ambient spaces or have incompatible shapes."""


class GradeError(ValextError, ValueError):
    """A grade or bidegree precondition is violated."""


class IncompatibleDataError(ValextError):
    """Input data disagree on common intersections beyond tolerance."""


class RankDeficientError(ValextError):
    """A linear system does not have the rank needed for a unique answer."""


class DegenerateBasisError(ValextError):
    """A numerically computed basis fails its residual check; resample."""


class PreconditionError(ValextError, ValueError):
    """A structural precondition on an arrangement or body does not hold."""


class ExtensionError(ValextError):
    """An extension step could not reproduce its prescribed restrictions."""
