"""Double forms, arrangement extensions and numerical integral geometry."""
from . import arrangements, crofton, doubleforms, exterior, extension, grassmann
from .errors import (DegenerateBasisError, DimensionMismatchError, ExtensionError, GradeError,
                     IncompatibleDataError, PreconditionError, RankDeficientError, ValextError)

__version__ = "0.1.0"

__all__ = [
    "arrangements", "crofton", "doubleforms", "exterior", "extension", "grassmann",
    "ValextError", "DimensionMismatchError", "GradeError", "PreconditionError",
    "IncompatibleDataError", "RankDeficientError", "DegenerateBasisError", "ExtensionError",
]
