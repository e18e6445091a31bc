"""
Exception hierarchy shared by every eigenscale module.

Each error carries the exit code the CLI returns for it:
0 ok, 2 usage / bad input, 3 data or degenerate, 4 convergence.
"""

from typing import Optional


class EigenScaleError(Exception):
    """Base class for all eigenscale failures"""
    exit_code = 3


# ========== USAGE / INPUT (exit 2) ==========

class InvalidSpecError(EigenScaleError):
    """A spec or config failed validation"""
    exit_code = 2


class MatrixFormatError(EigenScaleError):
    """A matrix file could not be parsed"""
    exit_code = 2


class MalformedHeaderError(MatrixFormatError):
    pass


class IndexOutOfRangeError(MatrixFormatError):
    pass


class DuplicateEntryError(MatrixFormatError):
    pass


class DimensionTooLargeForDenseError(EigenScaleError):
    exit_code = 2

    def __init__(self, dim: int, limit: int):
        super().__init__(f"dense oracle refused: N={dim} exceeds {limit}")
        self.dim = dim
        self.limit = limit


class UnsupportedFillingError(EigenScaleError):
    exit_code = 2


class LengthOutOfRangeError(EigenScaleError):
    exit_code = 2


# ========== DATA (exit 3) ==========

class DegenerateEnsembleError(EigenScaleError):
    """Generated matrix has a disconnected off-diagonal graph"""


class ZeroVectorError(EigenScaleError):
    pass


class DegenerateGroundStateError(EigenScaleError):
    pass


class InvalidCellError(EigenScaleError):
    """A sweep cell exceeded the allowed solver failure rate"""


# ========== CONVERGENCE (exit 4) ==========

class NoConvergenceError(EigenScaleError):
    exit_code = 4

    def __init__(self, iterations: int, best_residual: float, message: Optional[str] = None):
        super().__init__(message or
                         f"no convergence after {iterations} iterations "
                         f"(best residual {best_residual:.3e})")
        self.iterations = iterations
        self.best_residual = best_residual
