"""
This module contains the exceptions for the monodromy-speed library.
"""


class InvalidCellError(ValueError):
    """Exception raised when a unit cell description violates the cell invariants."""

    def __init__(self, message: str):
        self.message = f"Invalid unit cell: {message}"
        super().__init__(self.message)


class NonSquareCellError(InvalidCellError):
    """Exception raised when an operation needs a square period but gets a rectangle."""

    def __init__(self, periods: tuple[float, ...]):
        super().__init__(f"a square period is required, got {periods=}")


class CellFileError(ValueError):
    """Exception raised when a cell description file cannot be read or parsed."""

    def __init__(self, path: str, message: str):
        self.message = f"Failed to read cell file: {path=} - {message}"
        super().__init__(self.message)


class TruncationError(ValueError):
    """Exception raised when a Fourier truncation parameter is out of range."""

    def __init__(self, name: str, value: int, minimum: int = 0, requirement: str | None = None):
        requirement = requirement or f"must be >= {minimum}"
        self.message = f"Invalid truncation: {name}={value} ({requirement})"
        super().__init__(self.message)


class NonSquareMatrixError(ValueError):
    """Exception raised when a square matrix is required."""

    def __init__(self, shape: tuple[int, ...]):
        self.message = f"Expected a square matrix, got {shape=}"
        super().__init__(self.message)


class NonFiniteMatrixError(ValueError):
    """Exception raised when a matrix contains NaN or Inf entries."""

    def __init__(self, what: str):
        self.message = f"Matrix contains non-finite entries: {what}"
        super().__init__(self.message)


class ExponentialOverflowError(ArithmeticError):
    """Exception raised when a matrix exponential leaves the representable range."""

    def __init__(self, slab: int | None = None, norm: float | None = None):
        self.slab = slab
        self.message = f"Matrix exponential overflow: {slab=} {norm=}"
        super().__init__(self.message)


class SingularSystemError(ArithmeticError):
    """Exception raised when a linear system is singular to working precision."""

    def __init__(self, pivot: float, size: int):
        self.pivot = pivot
        self.message = f"Singular system to working precision: {pivot=:.3e} {size=}"
        super().__init__(self.message)


class AsymmetricMatrixError(ValueError):
    """Exception raised when a symmetric matrix is required but the input is not."""

    def __init__(self, asymmetry: float, tolerance: float):
        self.message = f"Matrix is not symmetric: relative asymmetry {asymmetry:.3e} > {tolerance:.1e}"
        super().__init__(self.message)


class NegativeSpeedSquaredError(ArithmeticError):
    """Exception raised when a computed squared speed is negative or not finite.

    This signals an insufficient truncation or an overflow; the value is never clamped.
    """

    def __init__(self, value: float, truncation: int | tuple[int, ...]):
        self.value = value
        self.message = f"Truncation failure: squared speed {value=} at {truncation=}"
        super().__init__(self.message)


class OracleConvergenceError(RuntimeError):
    """Exception raised when the finite-difference oracle does not converge."""

    def __init__(self, residual: float, iterations: int):
        self.residual = residual
        self.iterations = iterations
        self.message = f"Conjugate gradients did not converge: {residual=:.3e} after {iterations=}"
        super().__init__(self.message)


class NonMonotoneRefinementError(ArithmeticError):
    """Exception raised when oracle speeds over successive grids do not approach a limit monotonically."""

    def __init__(self, grids: tuple[int, ...], speeds: tuple[float, ...]):
        self.grids = grids
        self.speeds = speeds
        shown = ", ".join(f"{n}: {c:.6g}" for n, c in zip(grids, speeds, strict=True))
        self.message = f"Grid refinement is not monotone, no extrapolation possible ({shown})"
        super().__init__(self.message)


class MethodFailedError(RuntimeError):
    """Exception raised when a solver method fails inside the runner."""

    def __init__(self, method: str, message: str):
        self.method = method
        self.message = f"Method {method!r} failed: {message}"
        super().__init__(self.message)


__all__ = [
    "AsymmetricMatrixError",
    "CellFileError",
    "ExponentialOverflowError",
    "InvalidCellError",
    "MethodFailedError",
    "NegativeSpeedSquaredError",
    "NonFiniteMatrixError",
    "NonMonotoneRefinementError",
    "NonSquareCellError",
    "NonSquareMatrixError",
    "OracleConvergenceError",
    "SingularSystemError",
    "TruncationError",
]
