"""Exception hierarchy shared by all modules.

Every error carries a stable machine-readable ``code`` and an ``exit_code``
used by the command line front end.
"""


class ShapingError(Exception):
    code = "ShapingError"
    exit_code = 3

    def __init__(self, message, **context):
        super().__init__(message)
        self.message = message
        self.context = context

    def to_dict(self):
        return {"code": self.code, "message": self.message, "context": self.context}


class Empty(ShapingError):
    code = "Empty"


class NegativeEntry(ShapingError):
    code = "NegativeEntry"


class SumOutOfTolerance(ShapingError):
    code = "SumOutOfTolerance"


class LengthMismatch(ShapingError):
    code = "LengthMismatch"


class AbsoluteContinuityViolation(ShapingError):
    code = "AbsoluteContinuityViolation"


class InvalidAllocation(ShapingError):
    code = "InvalidAllocation"


class SearchSpaceTooLarge(ShapingError):
    code = "SearchSpaceTooLarge"


class NonPositiveSnr(ShapingError):
    code = "NonPositiveSnr"


class InfeasiblePower(ShapingError):
    code = "InfeasiblePower"


class ZeroPower(ShapingError):
    code = "ZeroPower"


class NonConvergence(ShapingError):
    code = "NonConvergence"
    exit_code = 4
