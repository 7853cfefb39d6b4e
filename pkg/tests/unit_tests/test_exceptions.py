"""Unit tests for exception classes."""

from monodromy_speed.api.exceptions import (
    AsymmetricMatrixError,
    CellFileError,
    ExponentialOverflowError,
    InvalidCellError,
    MethodFailedError,
    NegativeSpeedSquaredError,
    NonMonotoneRefinementError,
    NonSquareCellError,
    NonSquareMatrixError,
    OracleConvergenceError,
    SingularSystemError,
    TruncationError,
)


def test_invalid_cell_error():
    """Test InvalidCellError exception."""
    error = InvalidCellError("test message")
    assert error.message == "Invalid unit cell: test message"
    assert str(error) == "Invalid unit cell: test message"
    assert isinstance(error, ValueError)


def test_non_square_cell_error():
    """Test NonSquareCellError is an InvalidCellError naming the periods."""
    error = NonSquareCellError((1.0, 2.0))
    assert isinstance(error, InvalidCellError)
    assert error.message == "Invalid unit cell: a square period is required, got periods=(1.0, 2.0)"


def test_cell_file_error():
    """Test CellFileError exception."""
    error = CellFileError("cell.toml", "missing background")
    expected = "Failed to read cell file: path='cell.toml' - missing background"
    assert error.message == expected
    assert str(error) == expected


def test_truncation_error():
    """Test TruncationError with and without a minimum."""
    assert str(TruncationError("N", -1)) == "Invalid truncation: N=-1 (must be >= 0)"
    assert str(TruncationError("G", 0, minimum=1)) == "Invalid truncation: G=0 (must be >= 1)"
    error = TruncationError("n", 96, requirement="must be a power of two")
    assert error.message == "Invalid truncation: n=96 (must be a power of two)"


def test_non_square_matrix_error():
    """Test NonSquareMatrixError exception."""
    error = NonSquareMatrixError((2, 3))
    assert error.message == "Expected a square matrix, got shape=(2, 3)"


def test_exponential_overflow_error():
    """Test ExponentialOverflowError carries the slab index."""
    error = ExponentialOverflowError(slab=3)
    assert error.slab == 3
    assert str(error) == "Matrix exponential overflow: slab=3 norm=None"
    assert isinstance(error, ArithmeticError)


def test_singular_system_error():
    """Test SingularSystemError carries the pivot magnitude."""
    error = SingularSystemError(pivot=0.0, size=4)
    assert error.pivot == 0.0
    assert str(error) == "Singular system to working precision: pivot=0.000e+00 size=4"


def test_asymmetric_matrix_error():
    """Test AsymmetricMatrixError exception."""
    error = AsymmetricMatrixError(0.5, 1e-8)
    assert str(error) == "Matrix is not symmetric: relative asymmetry 5.000e-01 > 1.0e-08"


def test_negative_speed_squared_error():
    """Test NegativeSpeedSquaredError keeps the offending value."""
    error = NegativeSpeedSquaredError(-2.5, 4)
    assert error.value == -2.5
    assert str(error) == "Truncation failure: squared speed value=-2.5 at truncation=4"


def test_oracle_convergence_error():
    """Test OracleConvergenceError carries the residual."""
    error = OracleConvergenceError(1e-3, 640)
    assert error.residual == 1e-3
    assert str(error) == "Conjugate gradients did not converge: residual=1.000e-03 after iterations=640"


def test_method_failed_error():
    """Test MethodFailedError tags the method."""
    error = MethodFailedError("pwe", "boom")
    assert error.method == "pwe"
    assert str(error) == "Method 'pwe' failed: boom"


def test_non_monotone_refinement_error():
    """Test NonMonotoneRefinementError lists the speed on each grid."""
    error = NonMonotoneRefinementError((64, 128, 256), (1772.0, 1673.6, 1721.3))
    assert isinstance(error, ArithmeticError)
    assert error.grids == (64, 128, 256)
    assert str(error) == (
        "Grid refinement is not monotone, no extrapolation possible (64: 1772, 128: 1673.6, 256: 1721.3)"
    )
