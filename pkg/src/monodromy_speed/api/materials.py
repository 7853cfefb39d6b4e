"""
This module contains the material phases a unit cell is painted with.

Units are SI throughout: densities in kg/m³, moduli in Pa.
"""

from collections.abc import Sequence
from functools import cached_property
from typing import Self

import numpy as np
import numpy.typing as npt
from pydantic import BaseModel, ConfigDict, Field, PositiveFloat, field_validator

# Voigt index of the symmetric pair (i, j), and the pair behind each Voigt index.
VOIGT_INDEX: tuple[tuple[int, int, int], ...] = ((0, 5, 4), (5, 1, 3), (4, 3, 2))
VOIGT_PAIRS: tuple[tuple[int, int], ...] = ((0, 0), (1, 1), (2, 2), (1, 2), (0, 2), (0, 1))


class MaterialPhase(BaseModel):
    """A homogeneous phase of the 2D scalar (antiplane shear) problem."""

    model_config = ConfigDict(frozen=True)

    rho: PositiveFloat = Field(description="Density in kg/m³", examples=[7.8e3, 1.14e3])
    mu: PositiveFloat = Field(description="Shear modulus in Pa", examples=[80e9, 1.48e9])

    @property
    def speed(self) -> float:
        """Shear wave speed √(μ/ρ) of the pure phase in m/s."""
        return float(np.sqrt(self.mu / self.rho))

    def scaled(self, mu_factor: float = 1.0, rho_factor: float = 1.0) -> Self:
        """A copy with modulus and density multiplied by the given factors."""
        return type(self)(rho=self.rho * rho_factor, mu=self.mu * mu_factor)


class ElasticPhase(BaseModel):
    """A homogeneous anisotropic elastic phase of the 3D problem.

    The stiffness c_ijkl is stored as a symmetric positive definite 6×6 matrix in Voigt
    notation (11, 22, 33, 23, 13, 12) with full-tensor accessors.
    """

    model_config = ConfigDict(frozen=True)

    rho: PositiveFloat = Field(description="Density in kg/m³")
    stiffness: tuple[tuple[float, ...], ...] = Field(description="6×6 Voigt stiffness matrix in Pa")

    @field_validator("stiffness")
    @classmethod
    def validate_stiffness(cls, value: tuple[tuple[float, ...], ...]) -> tuple[tuple[float, ...], ...]:
        """The Voigt matrix must be 6×6, symmetric and positive definite."""
        matrix = np.asarray(value, dtype=float)
        if matrix.shape != (6, 6):
            message = f"stiffness must be 6x6, got shape {matrix.shape}"
            raise ValueError(message)
        scale = float(np.max(np.abs(matrix)))
        if not np.allclose(matrix, matrix.T, rtol=0.0, atol=1e-10 * scale):
            message = "stiffness must be symmetric (major symmetry)"
            raise ValueError(message)
        if np.linalg.eigvalsh(matrix)[0] <= 0.0:
            message = "stiffness must be positive definite"
            raise ValueError(message)
        return tuple(tuple(float(x) for x in row) for row in matrix)

    @classmethod
    def isotropic(cls, rho: float, lame_lambda: float, mu: float) -> Self:
        """Isotropic phase from the Lamé constants λ and μ."""
        matrix = np.zeros((6, 6))
        matrix[:3, :3] = lame_lambda
        matrix[np.arange(3), np.arange(3)] = lame_lambda + 2.0 * mu
        matrix[np.arange(3, 6), np.arange(3, 6)] = mu
        return cls(rho=rho, stiffness=tuple(map(tuple, matrix)))

    @classmethod
    def cubic(cls, rho: float, c11: float, c12: float, c44: float) -> Self:
        """Cubic phase with crystal axes along the lattice vectors."""
        matrix = np.zeros((6, 6))
        matrix[:3, :3] = c12
        matrix[np.arange(3), np.arange(3)] = c11
        matrix[np.arange(3, 6), np.arange(3, 6)] = c44
        return cls(rho=rho, stiffness=tuple(map(tuple, matrix)))

    @cached_property
    def voigt(self) -> npt.NDArray[np.float64]:
        """The 6×6 Voigt matrix as a read-only array."""
        matrix = np.asarray(self.stiffness, dtype=float)
        matrix.setflags(write=False)
        return matrix

    @cached_property
    def tensor(self) -> npt.NDArray[np.float64]:
        """The full fourth-order tensor c_ijkl with major and minor symmetries."""
        index = np.asarray(VOIGT_INDEX)
        full = self.voigt[index[:, :, None, None], index[None, None, :, :]]
        full.setflags(write=False)
        return full

    def permuted(self, order: Sequence[int]) -> Self:
        """The same phase described in coordinates relabelled by ``order``.

        New axis ``a`` is old axis ``order[a]``.
        """
        p = list(order)
        full = self.tensor[np.ix_(p, p, p, p)]
        matrix = np.array([[full[i, j, k, l] for (k, l) in VOIGT_PAIRS] for (i, j) in VOIGT_PAIRS])
        return type(self)(rho=self.rho, stiffness=tuple(map(tuple, matrix)))

    @property
    def stiffness_bounds(self) -> tuple[float, float]:
        """Smallest and largest eigenvalue of the Voigt matrix."""
        eigenvalues = np.linalg.eigvalsh(self.voigt)
        return float(eigenvalues[0]), float(eigenvalues[-1])


Phase = MaterialPhase | ElasticPhase

__all__ = ["VOIGT_INDEX", "VOIGT_PAIRS", "ElasticPhase", "MaterialPhase", "Phase"]
