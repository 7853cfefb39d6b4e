"""
This module contains the monodromy solver for 3D anisotropic elastic cells.

Along the propagation axis the state η = (u, t/c_ref) carries the three displacement
components and the three tractions on the slab planes, each expanded over the transverse
Fourier modes n = (n₂, n₃). On a slab, with 𝒞 = T[c_{i1k1}], ℬ = Σ_a T[c_{i1ka}]D_a and
𝒦 = Σ_ab D_aᴴ T[c_{iakb}] D_b,

    η′ = [[−𝒞⁻¹ℬ, 𝒞⁻¹], [𝒦 − ℬᴴ𝒞⁻¹ℬ, ℬᴴ𝒞⁻¹]] η

and the periodic solutions for the three unit macroscopic gradients give the effective
Christoffel matrix Γ_ik = c^eff_{i1k1}. Its eigenvalues are ⟨ρ⟩c².
"""

import logging
import math
from functools import cached_property, lru_cache

import numpy as np
import numpy.typing as npt
from pydantic import BaseModel, ConfigDict, Field

from monodromy_speed.api.exceptions import (
    ExponentialOverflowError,
    InvalidCellError,
    NegativeSpeedSquaredError,
    TruncationError,
)
from monodromy_speed.api.materials import ElasticPhase, Phase
from monodromy_speed.api.results import ElasticSpeeds
from monodromy_speed.api.unit_cell import Dimension, UnitCell
from monodromy_speed.cell.averages import cell_averages
from monodromy_speed.cell.slabs import Slab, SlabPartition, SlabPiece, slab_partition, transverse_coefficients
from monodromy_speed.config import InverseRule, SolverConfig
from monodromy_speed.linalg.dense import Matrix, mat_exp, sym_eigen_small
from monodromy_speed.solvers.monodromy import plan_propagation, segment_product, solve_periodic_deflated

logger = logging.getLogger(__name__)


def _elastic(phase: Phase) -> ElasticPhase:
    if not isinstance(phase, ElasticPhase):
        message = "the elastic solver needs a 3D cell"
        raise InvalidCellError(message)
    return phase


def transverse_modes(truncation: tuple[int, int]) -> npt.NDArray[np.int64]:
    """Mode pairs (n₂, n₃), n₂ outer, shape ((2N₂+1)(2N₃+1), 2)."""
    n2, n3 = np.meshgrid(
        np.arange(-truncation[0], truncation[0] + 1), np.arange(-truncation[1], truncation[1] + 1), indexing="ij"
    )
    return np.stack((n2.ravel(), n3.ravel()), axis=1)


def _blocks(toeplitz: npt.NDArray[np.complex128]) -> npt.NDArray[np.complex128]:
    """(d, d, 3, 3) indexed [n, m, i, k] to a 3d×3d matrix indexed [i·d + n, k·d + m]."""
    d = toeplitz.shape[0]
    return np.transpose(toeplitz, (2, 0, 3, 1)).reshape(3 * d, 3 * d)


class ElasticGenerator(BaseModel):
    """The complex 6d×6d generator of one slab of a 3D cell, d = (2N₂+1)(2N₃+1)."""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    truncation: tuple[int, int] = Field(description="(N₂, N₃)")
    modulus_scale: float = Field(description="Reference stiffness c_ref in Pa", gt=0.0)
    compliance: np.ndarray = Field(description="c_ref·𝒞⁻¹, 3d×3d")
    coupling: np.ndarray = Field(description="ℬ/c_ref, 3d×3d")
    transverse: np.ndarray = Field(description="𝒦/c_ref, 3d×3d and Hermitian")

    @property
    def d(self) -> int:
        return (2 * self.truncation[0] + 1) * (2 * self.truncation[1] + 1)

    @cached_property
    def matrix(self) -> npt.NDArray[np.complex128]:
        s, b = self.compliance, self.coupling
        b_adjoint = b.conj().T
        size = s.shape[0]
        q = np.empty((2 * size, 2 * size), dtype=complex)
        q[:size, :size] = -s @ b
        q[:size, size:] = s
        q[size:, :size] = self.transverse - b_adjoint @ s @ b
        q[size:, size:] = b_adjoint @ s
        q.setflags(write=False)
        return q

    @cached_property
    def spectral_radius(self) -> float:
        return float(np.max(np.abs(np.linalg.eigvals(self.matrix))))


def assemble_generator_3d(
    slab: Slab,
    truncation: tuple[int, int],
    modulus_scale: float,
    inverse_rule: InverseRule = InverseRule.LAURENT,
) -> ElasticGenerator:
    """Build the generator of a slab whose first axis is the propagation axis.

    Raises:
        TruncationError: If N₂ or N₃ is negative.
        InvalidCellError: If the slab is not a 3D slab.
    """
    for name, value in zip(("N2", "N3"), truncation, strict=True):
        if value < 0:
            raise TruncationError(name, value)
    if len(slab.transverse_periods) != 2:
        message = "assemble_generator_3d needs a 3D slab"
        raise InvalidCellError(message)
    t2, t3 = slab.transverse_periods
    modes = transverse_modes(truncation)
    offsets = (2 * truncation[0], 2 * truncation[1])
    difference = modes[:, None, :] - modes[None, :, :] + offsets

    coefficients = transverse_coefficients(
        slab.pieces, slab.transverse_periods, offsets, lambda phase: _elastic(phase).tensor
    )
    toeplitz = coefficients[difference[..., 0], difference[..., 1]]
    derivatives = 2j * np.pi * np.stack((modes[:, 0] / t2, modes[:, 1] / t3))

    contact = _blocks(toeplitz[:, :, :, 0, :, 0])
    if inverse_rule is InverseRule.LAURENT:
        compliance = np.linalg.inv(contact)
    else:
        inverse = transverse_coefficients(
            slab.pieces,
            slab.transverse_periods,
            offsets,
            lambda phase: np.linalg.inv(_elastic(phase).tensor[:, 0, :, 0]),
        )
        compliance = _blocks(inverse[difference[..., 0], difference[..., 1]])
    compliance = 0.5 * (compliance + compliance.conj().T)

    coupling = sum(toeplitz[:, :, :, 0, :, a + 1] * derivatives[a][None, :, None, None] for a in range(2))
    stiffness = np.einsum("an,nmiakb,bm->nmik", derivatives.conj(), toeplitz[:, :, :, 1:, :, 1:], derivatives)
    stiffness = _blocks(stiffness)
    stiffness = 0.5 * (stiffness + stiffness.conj().T)
    return ElasticGenerator(
        truncation=truncation,
        modulus_scale=modulus_scale,
        compliance=modulus_scale * compliance,
        coupling=_blocks(coupling) / modulus_scale,
        transverse=stiffness / modulus_scale,
    )


ElasticKey = tuple[tuple[SlabPiece, ...], tuple[float, ...], tuple[int, int], float, InverseRule]


@lru_cache(maxsize=256)
def _generator(key: ElasticKey) -> ElasticGenerator:
    pieces, periods, truncation, modulus_scale, inverse_rule = key
    slab = Slab(start=0.0, width=1.0, transverse_periods=periods, pieces=pieces)
    return assemble_generator_3d(slab, truncation, modulus_scale, inverse_rule)


@lru_cache(maxsize=1024)
def _exponential(key: ElasticKey, width: float) -> Matrix:
    result = mat_exp(_generator(key).matrix, width)
    result.setflags(write=False)
    return result


def _oriented(cell: UnitCell, axis: int) -> UnitCell:
    if cell.dimension is not Dimension.ELASTIC_3D:
        message = "the elastic solver needs a 3D cell"
        raise InvalidCellError(message)
    if axis not in (1, 2, 3):
        message = f"axis must be 1, 2 or 3, got {axis}"
        raise InvalidCellError(message)
    first = axis - 1
    return cell.permuted((first, (first + 1) % 3, (first + 2) % 3))


def reference_stiffness(partition: SlabPartition) -> float:
    """c_ref, the largest cell-averaged diagonal Voigt stiffness."""
    return float(np.max(partition.average(lambda phase: np.diag(_elastic(phase).voigt))))


def _keys(partition: SlabPartition, truncation: tuple[int, int], scale: float, rule: InverseRule) -> list[ElasticKey]:
    return [(slab.pieces, slab.transverse_periods, truncation, scale, rule) for slab in partition.slabs]


def elastic_generators(
    cell: UnitCell, n2: int, n3: int, axis: int = 1, config: SolverConfig | None = None
) -> list[ElasticGenerator]:
    """The slab generators of a 3D cell for propagation along ``axis``."""
    config = config or SolverConfig()
    partition = slab_partition(_oriented(cell, axis))
    keys = _keys(partition, (n2, n3), reference_stiffness(partition), config.inverse_rule)
    return [_generator(key) for key in keys]


def christoffel_matrix(
    cell: UnitCell, n2: int, n3: int, axis: int = 1, config: SolverConfig | None = None
) -> npt.NDArray[np.float64]:
    """Effective Γ_ik = c^eff_{iaka} for propagation along ``axis`` in Pa.

    Components are in the rotated frame whose first axis is ``axis`` and whose others follow
    cyclically.

    Raises:
        ExponentialOverflowError: If a slab exponential overflows, with the slab index.
        SingularSystemError: If the deflated system is singular.
    """
    config = config or SolverConfig()
    truncation = (n2, n3)
    oriented = _oriented(cell, axis)
    partition = slab_partition(oriented)
    scale = reference_stiffness(partition)
    keys = _keys(partition, truncation, scale, config.inverse_rule)

    def exponential(slab: int, width: float) -> Matrix:
        try:
            return _exponential(keys[slab], width)
        except ExponentialOverflowError as e:
            raise ExponentialOverflowError(slab=slab) from e

    generators = [_generator(key) for key in keys]
    segments = plan_propagation(
        [slab.width for slab in partition.slabs],
        [generator.spectral_radius for generator in generators],
        exponential,
        config.max_log_growth,
    )
    d = generators[0].d
    zero = int(np.flatnonzero(np.all(transverse_modes(truncation) == 0, axis=1))[0])
    displacement = [i * d + zero for i in range(3)]
    rhs = np.zeros((6 * d, 3))
    for k, index in enumerate(displacement):
        rhs[index, k] = oriented.periods[0]
    states = solve_periodic_deflated(
        [segment_product(steps) for steps in segments],
        rhs,
        fixed_columns=displacement,
        fixed_rows=[3 * d + index for index in displacement],
    )
    gamma = scale * states[0, [3 * d + index for index in displacement], :]
    logger.debug(f"Elastic solve at N=({n2}, {n3}) over {len(partition)} slabs in {len(segments)} segments")
    return np.asarray(gamma.real)


def principal_speeds_3d(
    cell: UnitCell, n2: int, n3: int, axis: int = 1, config: SolverConfig | None = None
) -> ElasticSpeeds:
    """The three quasistatic speeds for propagation along a lattice axis, fastest first.

    Raises:
        NegativeSpeedSquaredError: If an eigenvalue of Γ is not positive.
        AsymmetricMatrixError: If Γ is not symmetric to 1e-8.
    """
    config = config or SolverConfig()
    gamma = christoffel_matrix(cell, n2, n3, axis, config)
    rho_mean = cell_averages(cell).rho_mean
    eigenvalues = sym_eigen_small(gamma)
    if not np.all(np.isfinite(eigenvalues)) or eigenvalues[-1] <= 0.0:
        raise NegativeSpeedSquaredError(float(eigenvalues[-1]) / rho_mean, (n2, n3))
    bounds = [_elastic(phase).stiffness_bounds for phase in cell.phases]
    d = (2 * n2 + 1) * (2 * n3 + 1)
    return ElasticSpeeds(
        axis=axis,
        speeds=tuple(math.sqrt(value / rho_mean) for value in eigenvalues),
        eigenvalues=tuple(float(value) for value in eigenvalues),
        rho_mean=rho_mean,
        stiffness_bounds=(min(low for low, _ in bounds), max(high for _, high in bounds)),
        truncation=(n2, n3),
        matrix_dim=6 * d,
    )


__all__ = [
    "ElasticGenerator",
    "assemble_generator_3d",
    "christoffel_matrix",
    "elastic_generators",
    "principal_speeds_3d",
    "reference_stiffness",
    "transverse_modes",
]
