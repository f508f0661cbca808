"""Exception hierarchy shared by every module.

Each error carries a short machine-readable ``code`` so the command line
layer can map it to an exit status and a JSON error record.
"""


class FgrafsError(Exception):
    """Base class for all library errors."""

    code = "error"

    def __init__(self, message: str, *, key: str | None = None, **details):
        super().__init__(message)
        self.key = key
        self.details = details

    def record(self) -> dict:
        out = {"error": self.code, "message": str(self)}
        if self.key is not None:
            out["key"] = self.key
        if self.details:
            out["details"] = {k: _jsonable(v) for k, v in self.details.items()}
        return out


def _jsonable(v):
    try:
        return float(v)
    except (TypeError, ValueError):
        return str(v)


class ValidationError(FgrafsError, ValueError):
    """Invalid user input; maps to CLI exit status 2."""

    code = "validation-error"


class InvalidCardinalityError(ValidationError):
    code = "invalid-cardinality"


class InvalidBandwidthError(ValidationError):
    code = "invalid-bandwidth"


class DimensionError(ValidationError):
    code = "dimension-error"


class DomainError(ValidationError):
    code = "domain-error"


class StabilityError(ValidationError):
    code = "stability-error"


class NumericalError(FgrafsError, ArithmeticError):
    """Numerical failure; maps to CLI exit status 3."""

    code = "numerical-failure"


class EmptyBasisError(NumericalError):
    code = "empty-basis"


class NumericalConsistencyError(NumericalError):
    code = "numerical-consistency"


class DegenerateBandError(NumericalError):
    code = "degenerate-band"


class IcSolveFailure(NumericalError):
    code = "ic-solve-failure"
