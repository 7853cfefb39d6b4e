"""
This module contains the dense linear-algebra kernels the solvers use: the matrix
exponential, pivoted linear solves, small symmetric eigenproblems and Toeplitz assembly.
"""

import logging

import numpy as np
import numpy.typing as npt
import scipy.linalg

from monodromy_speed.api.exceptions import (
    AsymmetricMatrixError,
    ExponentialOverflowError,
    NonFiniteMatrixError,
    NonSquareMatrixError,
    SingularSystemError,
)

logger = logging.getLogger(__name__)

Matrix = npt.NDArray[np.float64] | npt.NDArray[np.complex128]


def require_square(a: npt.ArrayLike, what: str = "matrix") -> Matrix:
    """Return ``a`` as a finite square array.

    Raises:
        NonSquareMatrixError: If ``a`` is not a square 2D array.
        NonFiniteMatrixError: If ``a`` contains NaN or Inf.
    """
    matrix = np.asarray(a)
    if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1] or matrix.shape[0] == 0:
        raise NonSquareMatrixError(matrix.shape)
    if not np.all(np.isfinite(matrix)):
        raise NonFiniteMatrixError(what)
    return matrix


def mat_exp(a: npt.ArrayLike, t: float = 1.0) -> Matrix:
    """exp(tA) by scaling and squaring with a Padé approximant (``scipy.linalg.expm``).

    Raises:
        ExponentialOverflowError: If the result leaves the floating-point range.
    """
    matrix = require_square(a)
    if not np.isfinite(t):
        raise NonFiniteMatrixError(f"scale {t=}")
    with np.errstate(over="ignore", invalid="ignore"):
        result = scipy.linalg.expm(t * matrix)
    if not np.all(np.isfinite(result)):
        raise ExponentialOverflowError(norm=float(np.abs(t) * np.linalg.norm(matrix, 1)))
    return result


def solve_linear(a: npt.ArrayLike, b: npt.ArrayLike) -> Matrix:
    """Solve Ax = b by LU with partial pivoting. ``b`` may hold several right-hand sides.

    Raises:
        SingularSystemError: If a pivot of U is negligible relative to the largest one.
    """
    matrix = require_square(a)
    rhs = np.asarray(b)
    lu, piv = scipy.linalg.lu_factor(matrix, check_finite=False)
    pivots = np.abs(np.diag(lu))
    largest = float(pivots.max())
    smallest = float(pivots.min())
    if largest == 0.0 or smallest <= matrix.shape[0] * np.finfo(float).eps * largest:
        raise SingularSystemError(pivot=smallest, size=matrix.shape[0])
    return scipy.linalg.lu_solve((lu, piv), rhs, check_finite=False)


def sym_eigen_small(a: npt.ArrayLike, tolerance: float = 1e-8) -> npt.NDArray[np.float64]:
    """Eigenvalues of a small symmetric (or Hermitian) matrix, sorted descending.

    Raises:
        AsymmetricMatrixError: If ‖A − Aᴴ‖ exceeds ``tolerance``·‖A‖.
    """
    matrix = require_square(a)
    scale = float(np.linalg.norm(matrix))
    asymmetry = float(np.linalg.norm(matrix - matrix.conj().T)) / scale if scale > 0.0 else 0.0
    if asymmetry > tolerance:
        raise AsymmetricMatrixError(asymmetry, tolerance)
    eigenvalues = scipy.linalg.eigh(0.5 * (matrix + matrix.conj().T), eigvals_only=True)
    return np.asarray(eigenvalues[::-1], dtype=float)


def toeplitz_from_coefficients(coefficients: npt.ArrayLike, size: int) -> Matrix:
    """The size×size matrix T[n, m] = ĉ_{n−m}.

    ``coefficients`` holds ĉ_k for k = −K..K at offset K with K ≥ size − 1; extra entries
    are ignored.
    """
    values = np.asarray(coefficients)
    offset = (values.shape[0] - 1) // 2
    if offset < size - 1:
        message = f"{values.shape[0]} coefficients cannot fill a {size}x{size} Toeplitz matrix"
        raise ValueError(message)
    column = values[offset : offset + size]
    row = values[offset - size + 1 : offset + 1][::-1]
    return scipy.linalg.toeplitz(column, row)


def real_basis(truncation: int) -> npt.NDArray[np.complex128]:
    """Unitary map from exponential coefficients (n = −N..N) to the real orthonormal basis.

    Index N stays the constant mode; index N + k holds the √2·cos(2πkx/T) coefficient and
    index N − k the √2·sin(2πkx/T) coefficient. A real operator T in exponential form is
    ``(P @ T @ P.conj().T).real`` in this basis.
    """
    d = 2 * truncation + 1
    p = np.zeros((d, d), dtype=complex)
    p[truncation, truncation] = 1.0
    root = 1.0 / np.sqrt(2.0)
    for k in range(1, truncation + 1):
        p[truncation + k, truncation + k] = root
        p[truncation + k, truncation - k] = root
        p[truncation - k, truncation + k] = 1j * root
        p[truncation - k, truncation - k] = -1j * root
    return p


def to_real_basis(operator: npt.ArrayLike, basis: npt.NDArray[np.complex128]) -> npt.NDArray[np.float64]:
    """Express an exponential-basis operator (or vector) in the real basis ``basis``."""
    values = np.asarray(operator)
    if values.ndim == 1:
        return np.asarray((basis @ values).real)
    return np.asarray((basis @ values @ basis.conj().T).real)


__all__ = [
    "Matrix",
    "mat_exp",
    "real_basis",
    "require_square",
    "solve_linear",
    "sym_eigen_small",
    "to_real_basis",
    "toeplitz_from_coefficients",
]
