"""Exception types raised across the package.

Every exception carries a short machine-readable ``code`` used by the CLI
as the error prefix.
"""


class PCError(ValueError):
    code = "error"

    def __init__(self, message: str = "", cell: tuple[int, int] | None = None):
        super().__init__(message)
        self.cell = cell


class NonSquareError(PCError):
    code = "non-square"


class TooSmallError(PCError):
    code = "too-small"


class DiagonalNotOneError(PCError):
    code = "diagonal-not-one"


class NonPositiveEntryError(PCError):
    code = "non-positive-entry"


class ReciprocityViolationError(PCError):
    code = "reciprocity-violation"


class IndexOutOfRangeError(PCError, IndexError):
    code = "index-out-of-range"


class NotIrreducibleError(PCError):
    code = "not-irreducible"

    def __init__(self, message: str, component: tuple[int, ...] = ()):
        super().__init__(message)
        self.component = component


class NoConvergenceError(PCError):
    code = "no-convergence"

    def __init__(self, message: str, residual: float = float("nan")):
        super().__init__(message)
        self.residual = residual


class IncompleteMatrixError(PCError):
    code = "incomplete-matrix"


class UndefinedForOrderTwoError(PCError):
    code = "undefined-for-order-two"


class LengthMismatchError(PCError):
    code = "length-mismatch"


class KTooLargeError(PCError):
    code = "k-too-large"


class XTooLargeError(PCError):
    code = "x-too-large"


class CalibrationFailedError(PCError):
    code = "calibration-failed"


class ParseError(PCError):
    code = "parse-error"

    def __init__(self, message: str, line: int | None = None, column: int | None = None):
        loc = ""
        if line is not None:
            loc = f"line {line}" + (f", column {column}" if column is not None else "") + ": "
        super().__init__(loc + message)
        self.line = line
        self.column = column
