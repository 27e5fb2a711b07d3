"""Exception hierarchy.

Each error carries a machine-readable ``code``, a message and a details
mapping, and converts to the ``ErrorResponse`` envelope. The class decides
the process exit status: data and validation problems exit 2, failures of
the statistical procedure itself exit 3.
"""

from __future__ import annotations

from typing import Any, ClassVar

from hstar.models import Error, ErrorResponse


class HStarError(Exception):
    """Base class of every error raised by the library.

    Attributes:
        code: Machine-readable error code in UPPER_SNAKE_CASE.
        exit_code: Process exit status the CLI uses for this error.
        message: Human-readable description.
        details: Extra context (row numbers, sizes, thresholds).

    Examples:
        >>> err = TooFewObservations("need at least 4 values", n=3)
        >>> err.to_error().details
        {'n': 3}
    """

    code: ClassVar[str] = "HSTAR_ERROR"
    exit_code: ClassVar[int] = 2

    def __init__(self, message: str, **details: Any) -> None:
        super().__init__(message)
        self.message = message
        self.details = details

    def to_error(self) -> Error:
        """Convert to the structured ``Error`` model."""
        return Error(code=self.code, message=self.message, details=self.details)

    def to_response(self) -> ErrorResponse:
        """Wrap in the ``ErrorResponse`` envelope."""
        return ErrorResponse(error=self.to_error())


class DataError(HStarError):
    """Invalid input data or parameters (exit 2)."""

    exit_code = 2


class ProcedureError(HStarError):
    """The statistical procedure cannot produce a result (exit 3)."""

    exit_code = 3


class TooFewObservations(DataError):
    code = "TOO_FEW_OBSERVATIONS"


class AllValuesIdentical(DataError):
    code = "ALL_VALUES_IDENTICAL"


class NonFiniteValue(DataError):
    code = "NON_FINITE_VALUE"


class ParseError(DataError):
    code = "PARSE_ERROR"


class EmptyColumn(DataError):
    code = "EMPTY_COLUMN"


class InvalidSpec(DataError):
    code = "INVALID_SPEC"


class NonPositiveValueForLognormal(DataError):
    code = "NON_POSITIVE_VALUE_FOR_LOGNORMAL"


class ZeroWeightMass(DataError):
    code = "ZERO_WEIGHT_MASS"


class NonpositiveEta(DataError):
    code = "NONPOSITIVE_ETA"


class MalformedTableFile(DataError):
    code = "MALFORMED_TABLE_FILE"


class InvalidCounts(DataError):
    code = "INVALID_COUNTS"


class OutOfSupport(DataError):
    code = "OUT_OF_SUPPORT"


class TooFewOrdinary(DataError):
    code = "TOO_FEW_ORDINARY"


class InvalidParameter(DataError):
    code = "INVALID_PARAMETER"


class FitRejected(ProcedureError):
    code = "FIT_REJECTED"


class InsufficientTailMass(ProcedureError):
    code = "INSUFFICIENT_TAIL_MASS"


class TruncationInfeasible(ProcedureError):
    code = "TRUNCATION_INFEASIBLE"


class DegenerateDesign(ProcedureError):
    code = "DEGENERATE_DESIGN"


class DegenerateNormalizer(ProcedureError):
    code = "DEGENERATE_NORMALIZER"


class TooFewPairs(ProcedureError):
    code = "TOO_FEW_PAIRS"


class AllZeroDifferences(ProcedureError):
    code = "ALL_ZERO_DIFFERENCES"


class NoPretestOutliers(ProcedureError):
    code = "NO_PRETEST_OUTLIERS"
