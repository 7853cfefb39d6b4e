"""
This module contains the monodromy-matrix solver for 2D antiplane shear.

Along x₁ the state η = (u, t/μ_ref) of displacement and traction coefficients obeys
η′ = Q₀η with Q₀ = [[0, μ_ref·𝛍⁻¹], [A/μ_ref, 0]], A = 4π²(nmμ̂_{n−m})/T₂², on every
slab. The corrector problem for a unit macroscopic gradient along x₁ becomes the
periodicity condition η(T₁) − η(0) = T₁w₀, whose deflated solution gives the effective
modulus as the constant traction mode.
"""

import logging
import math
from collections.abc import Callable, Sequence
from functools import cached_property, lru_cache
from typing import NamedTuple

import numpy as np
import numpy.typing as npt
from numpy.polynomial.legendre import leggauss
from pydantic import BaseModel, ConfigDict, Field

from monodromy_speed.api.exceptions import (
    ExponentialOverflowError,
    InvalidCellError,
    NegativeSpeedSquaredError,
    TruncationError,
)
from monodromy_speed.api.results import EffectiveTensor, Method
from monodromy_speed.api.unit_cell import Dimension, UnitCell
from monodromy_speed.cell.averages import cell_averages, layered_means
from monodromy_speed.cell.rotation import rotate45
from monodromy_speed.cell.slabs import FourierSlab, Slab, SlabPartition, SlabPiece, slab_fourier, slab_partition
from monodromy_speed.config import InverseRule, M12Path, Quadrature, SolverConfig
from monodromy_speed.linalg.dense import (
    Matrix,
    mat_exp,
    real_basis,
    solve_linear,
    to_real_basis,
    toeplitz_from_coefficients,
)

logger = logging.getLogger(__name__)


class TruncatedGenerator(BaseModel):
    """The real 2d×2d generator Q₀ of one slab, d = 2N+1, in the real Fourier basis.

    Both blocks are scaled by the reference modulus so that their entries are O(1).
    """

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    truncation: int = Field(description="Half-width N", ge=0)
    modulus_scale: float = Field(description="Reference modulus μ_ref in Pa", gt=0.0)
    inverse_modulus: np.ndarray = Field(description="μ_ref·𝛍⁻¹, d×d")
    stiffness: np.ndarray = Field(description="A/μ_ref, d×d, zero row and column at the constant mode")

    @property
    def d(self) -> int:
        return 2 * self.truncation + 1

    @cached_property
    def matrix(self) -> npt.NDArray[np.float64]:
        d = self.d
        q = np.zeros((2 * d, 2 * d))
        q[:d, d:] = self.inverse_modulus
        q[d:, :d] = self.stiffness
        q.setflags(write=False)
        return q

    @cached_property
    def spectral_radius(self) -> float:
        """Largest |λ| of Q₀; the log-growth of exp(hQ₀) per unit length."""
        return float(np.max(np.abs(np.linalg.eigvals(self.matrix))))


def assemble_generator(
    slab: FourierSlab, modulus_scale: float, inverse_rule: InverseRule = InverseRule.LAURENT
) -> TruncatedGenerator:
    """Build Q₀ for a slab from its Fourier data.

    The generator always propagates along x₁ of the slab's cell; the second direction is
    handled by swapping the cell axes before partitioning.
    """
    n_max = slab.truncation
    d = 2 * n_max + 1
    n = np.arange(-n_max, n_max + 1)
    basis = real_basis(n_max)
    mu_toeplitz = toeplitz_from_coefficients(slab.mu_hat, d)
    stiffness = (4.0 * np.pi**2 / slab.period**2) * np.outer(n, n) * mu_toeplitz
    if inverse_rule is InverseRule.LAURENT:
        inverse_modulus = np.linalg.inv(to_real_basis(mu_toeplitz, basis))
    else:
        inverse_modulus = to_real_basis(toeplitz_from_coefficients(slab.inv_mu_hat, d), basis)
    inverse_modulus = 0.5 * (inverse_modulus + inverse_modulus.T)
    stiffness_real = to_real_basis(stiffness, basis)
    return TruncatedGenerator(
        truncation=n_max,
        modulus_scale=modulus_scale,
        inverse_modulus=modulus_scale * inverse_modulus,
        stiffness=0.5 * (stiffness_real + stiffness_real.T) / modulus_scale,
    )


ProfileKey = tuple[tuple[SlabPiece, ...], float, int, float, InverseRule]


@lru_cache(maxsize=1024)
def _generator(key: ProfileKey) -> TruncatedGenerator:
    pieces, period, truncation, modulus_scale, inverse_rule = key
    slab = Slab(start=0.0, width=1.0, transverse_periods=(period,), pieces=pieces)
    return assemble_generator(slab_fourier(slab, truncation), modulus_scale, inverse_rule)


@lru_cache(maxsize=4096)
def _exponential(key: ProfileKey, width: float) -> Matrix:
    result = mat_exp(_generator(key).matrix, width)
    result.setflags(write=False)
    return result


@lru_cache(maxsize=4096)
def _integrated_exponential(key: ProfileKey, width: float) -> Matrix:
    """∫₀^h exp(sQ₀) ds from the exponential of the augmented matrix [[Q₀, I], [0, 0]]."""
    q = _generator(key).matrix
    size = q.shape[0]
    augmented = np.zeros((2 * size, 2 * size))
    augmented[:size, :size] = q
    augmented[:size, size:] = np.eye(size)
    result = mat_exp(augmented, width)[:size, size:]
    result.setflags(write=False)
    return result


class PropagationStep(NamedTuple):
    """One sub-step of a slab: exp(width·Q) applied to the state."""

    slab: int
    width: float
    exponential: Matrix


def plan_propagation(
    widths: Sequence[float],
    radii: Sequence[float],
    exponential: Callable[[int, float], Matrix],
    max_log_growth: float,
) -> list[list[PropagationStep]]:
    """Split slabs into sub-steps and group them into segments of bounded log-growth.

    A slab of width Δ whose generator has spectral radius r becomes ⌈Δr/g⌉ equal sub-steps;
    consecutive sub-steps share a segment while their summed growth stays under g.
    """
    segments: list[list[PropagationStep]] = []
    current: list[PropagationStep] = []
    budget = 0.0
    for slab, (width, radius) in enumerate(zip(widths, radii, strict=True)):
        count = max(1, math.ceil(width * radius / max_log_growth))
        step = width / count
        for _ in range(count):
            growth = step * radius
            if current and budget + growth > max_log_growth:
                segments.append(current)
                current, budget = [], 0.0
            current.append(PropagationStep(slab=slab, width=step, exponential=exponential(slab, step)))
            budget += growth
    segments.append(current)
    return segments


def segment_product(steps: Sequence[PropagationStep]) -> Matrix:
    """Ordered product of the step exponentials, first step rightmost."""
    product = steps[0].exponential
    for step in steps[1:]:
        product = step.exponential @ product
    return product


def solve_periodic_deflated(
    segments: Sequence[Matrix],
    rhs: npt.NDArray[np.float64] | npt.NDArray[np.complex128],
    fixed_columns: Sequence[int],
    fixed_rows: Sequence[int],
) -> npt.NDArray[np.float64] | npt.NDArray[np.complex128]:
    """Solve the cyclic system η_{j+1} = E_jη_j (j < K−1), E_{K−1}η_{K−1} − η_0 = rhs.

    The state coordinates ``fixed_columns`` of η_0 are set to zero and the equations
    ``fixed_rows`` of the closing block are dropped. With a single segment this is the
    deflated solve of (M₀ − I)η_0 = rhs.

    Returns:
        The states at the segment starts, shape (K, n, r).
    """
    count = len(segments)
    size = segments[0].shape[0]
    rhs = rhs.reshape(size, -1)
    dtype = np.result_type(rhs, *segments)
    system = np.zeros((count * size, count * size), dtype=dtype)
    identity = np.eye(size)
    for j, exponential in enumerate(segments):
        rows = slice(j * size, (j + 1) * size)
        following = (j + 1) % count
        system[rows, j * size : (j + 1) * size] += exponential
        system[rows, following * size : (following + 1) * size] -= identity
    full_rhs = np.zeros((count * size, rhs.shape[1]), dtype=dtype)
    full_rhs[(count - 1) * size :] = rhs
    keep_columns = np.setdiff1d(np.arange(count * size), np.asarray(fixed_columns, dtype=int))
    keep_rows = np.setdiff1d(np.arange(count * size), (count - 1) * size + np.asarray(fixed_rows, dtype=int))
    reduced = solve_linear(system[np.ix_(keep_rows, keep_columns)], full_rhs[keep_rows])
    states = np.zeros((count * size, rhs.shape[1]), dtype=dtype)
    states[keep_columns] = reduced
    logger.debug(f"Periodic solve with {count} segments of size {size}")
    return states.reshape(count, size, rhs.shape[1])


class MonodromyMatrix(BaseModel):
    """The monodromy matrix M₀ = ∏ exp(Δᵢ Q₀⁽ⁱ⁾), last slab leftmost."""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    truncation: int = Field(ge=0)
    modulus_scale: float = Field(description="μ_ref used to scale the traction block", gt=0.0)
    matrix: np.ndarray
    partition: SlabPartition

    @property
    def d(self) -> int:
        return 2 * self.truncation + 1

    @property
    def fixed_vectors(self) -> tuple[npt.NDArray[np.float64], npt.NDArray[np.float64]]:
        """w₀ (constant displacement) and w̃₀ (constant traction) in state coordinates."""
        w0 = np.zeros(2 * self.d)
        w0[self.truncation] = 1.0
        w0_tilde = np.zeros(2 * self.d)
        w0_tilde[self.d + self.truncation] = 1.0
        return w0, w0_tilde

    def fixed_vector_residuals(self) -> tuple[float, float]:
        """‖M₀w₀ − w₀‖ and ‖M₀ᵀw̃₀ − w̃₀‖ relative to ‖M₀‖."""
        w0, w0_tilde = self.fixed_vectors
        scale = float(np.linalg.norm(self.matrix))
        return (
            float(np.linalg.norm(self.matrix @ w0 - w0)) / scale,
            float(np.linalg.norm(self.matrix.T @ w0_tilde - w0_tilde)) / scale,
        )

    @property
    def determinant(self) -> float:
        return float(np.linalg.det(self.matrix))


def _oriented(cell: UnitCell, axis: int) -> UnitCell:
    if cell.dimension is not Dimension.SCALAR_2D:
        message = "the scalar monodromy solver needs a 2D cell"
        raise InvalidCellError(message)
    if axis not in (1, 2):
        message = f"axis must be 1 or 2, got {axis}"
        raise InvalidCellError(message)
    return cell if axis == 1 else cell.swapped()


def _keys(partition: SlabPartition, truncation: int, modulus_scale: float, rule: InverseRule) -> list[ProfileKey]:
    return [
        (slab.pieces, slab.transverse_periods[0], truncation, modulus_scale, rule) for slab in partition.slabs
    ]


def monodromy(cell: UnitCell, truncation: int, axis: int = 1, config: SolverConfig | None = None) -> MonodromyMatrix:
    """The monodromy matrix of the cell along ``axis`` at half-width N.

    Raises:
        TruncationError: If N < 0.
        ExponentialOverflowError: If a slab exponential overflows, with the slab index.
    """
    if truncation < 0:
        raise TruncationError("N", truncation)
    config = config or SolverConfig()
    oriented = _oriented(cell, axis)
    partition = slab_partition(oriented)
    modulus_scale = cell_averages(oriented).moduli[0]
    product: Matrix = np.eye(2 * (2 * truncation + 1))
    for index, (slab, key) in enumerate(
        zip(partition.slabs, _keys(partition, truncation, modulus_scale, config.inverse_rule), strict=True)
    ):
        try:
            factor = _exponential(key, slab.width)
        except ExponentialOverflowError as e:
            raise ExponentialOverflowError(slab=index, norm=None) from e
        product = factor @ product
        if not np.all(np.isfinite(product)):
            raise ExponentialOverflowError(slab=index)
    return MonodromyMatrix(truncation=truncation, modulus_scale=modulus_scale, matrix=product, partition=partition)


class _AxisSolution(NamedTuple):
    partition: SlabPartition
    keys: list[ProfileKey]
    segments: list[list[PropagationStep]]
    states: npt.NDArray[np.float64]
    modulus_scale: float


def _solve_axis(oriented: UnitCell, truncation: int, config: SolverConfig) -> _AxisSolution:
    if truncation < 0:
        raise TruncationError("N", truncation)
    partition = slab_partition(oriented)
    modulus_scale = cell_averages(oriented).moduli[0]
    keys = _keys(partition, truncation, modulus_scale, config.inverse_rule)

    def exponential(slab: int, width: float) -> Matrix:
        try:
            return _exponential(keys[slab], width)
        except ExponentialOverflowError as e:
            raise ExponentialOverflowError(slab=slab) from e

    segments = plan_propagation(
        [slab.width for slab in partition.slabs],
        [_generator(key).spectral_radius for key in keys],
        exponential,
        config.max_log_growth,
    )
    d = 2 * truncation + 1
    rhs = np.zeros(2 * d)
    rhs[truncation] = oriented.periods[0]
    states = solve_periodic_deflated(
        [segment_product(steps) for steps in segments], rhs, fixed_columns=[truncation], fixed_rows=[d + truncation]
    )
    logger.debug(f"Solved N={truncation} over {len(partition)} slabs in {len(segments)} segments")
    return _AxisSolution(partition, keys, segments, np.asarray(states.real), modulus_scale)


def _effective_modulus(solution: _AxisSolution, truncation: int) -> float:
    d = 2 * truncation + 1
    return solution.modulus_scale * float(solution.states[0, d + truncation, 0])


def _checked_speed_squared(mu_eff: float, rho_mean: float, truncation: int) -> float:
    squared = mu_eff / rho_mean
    if not math.isfinite(squared) or squared <= 0.0:
        raise NegativeSpeedSquaredError(squared, truncation)
    return squared


def principal_speed(
    cell: UnitCell, truncation: int, axis: int = 1, config: SolverConfig | None = None
) -> tuple[float, float]:
    """Effective speed along a lattice axis and the matching diagonal coefficient.

    Returns:
        (c, M_aa) with c in m/s and M_aa = ⟨μ⟩ − ⟨ρ⟩c² in Pa.

    Raises:
        NegativeSpeedSquaredError: If the computed c² is negative or not finite.
        SingularSystemError: If the deflated system is singular.
    """
    config = config or SolverConfig()
    oriented = _oriented(cell, axis)
    averages = cell_averages(oriented)
    mu_mean, _ = averages.moduli
    mu_eff = _effective_modulus(_solve_axis(oriented, truncation, config), truncation)
    squared = _checked_speed_squared(mu_eff, averages.rho_mean, truncation)
    return math.sqrt(squared), mu_mean - mu_eff


def _m12_direct(solution: _AxisSolution, truncation: int, config: SolverConfig) -> float:
    """⟨∂₂μ · u⟩ accumulated step by step along x₁."""
    d = 2 * truncation + 1
    n = np.arange(-truncation, truncation + 1)
    basis = real_basis(truncation)
    gradients: list[npt.NDArray[np.float64]] = []
    for slab in solution.partition.slabs:
        fourier = slab_fourier(slab, truncation)
        mu_hat = fourier.mu_hat[truncation : 3 * truncation + 1]
        gradient = np.zeros(2 * d)
        gradient[:d] = to_real_basis(2j * np.pi * n / fourier.period * mu_hat, basis)
        gradients.append(gradient)
    nodes, weights = leggauss(config.gauss_order)
    total = 0.0
    for segment, steps in enumerate(solution.segments):
        state = solution.states[segment, :, 0]
        for step in steps:
            key = solution.keys[step.slab]
            if config.m12_quadrature is Quadrature.EXACT:
                integral = _integrated_exponential(key, step.width) @ state
            else:
                half = 0.5 * step.width
                integral = sum(
                    half * weight * (_exponential(key, half * (node + 1.0)) @ state)
                    for node, weight in zip(nodes, weights, strict=True)
                )
            total += float(gradients[step.slab] @ integral)
            state = step.exponential @ state
    return total / solution.partition.periods[0]


def offdiagonal_m12(
    cell: UnitCell, truncation: int, path: M12Path | None = None, config: SolverConfig | None = None
) -> float:
    """The off-diagonal coefficient M_12 in Pa.

    ``direct`` integrates ⟨∂₂μ · u⟩ along the periodic solution for a unit gradient along
    x₁. ``rotation`` uses M_12 = (M̃_11 − M̃_22)/2 on the cell turned by 45°.

    Raises:
        NonSquareCellError: For the rotation path on a rectangular cell.
    """
    config = config or SolverConfig()
    path = path or config.m12_path
    oriented = _oriented(cell, 1)
    if path is M12Path.ROTATION:
        rotated = rotate45(oriented, config.slices_for(truncation))
        _, m11 = principal_speed(rotated, truncation, 1, config)
        _, m22 = principal_speed(rotated, truncation, 2, config)
        return 0.5 * (m11 - m22)
    return _m12_direct(_solve_axis(oriented, truncation, config), truncation, config)


def effective_tensor(cell: UnitCell, truncation: int, config: SolverConfig | None = None) -> EffectiveTensor:
    """Full 2×2 tensor M_ij by the monodromy method at half-width N."""
    config = config or SolverConfig()
    oriented = _oriented(cell, 1)
    averages = cell_averages(oriented)
    mu_mean, mu_harmonic = averages.moduli
    first = _solve_axis(oriented, truncation, config)
    mu_eff = _effective_modulus(first, truncation)
    _checked_speed_squared(mu_eff, averages.rho_mean, truncation)
    _, m22 = principal_speed(oriented, truncation, 2, config)
    if config.m12_path is M12Path.DIRECT:
        m12 = _m12_direct(first, truncation, config)
    else:
        m12 = offdiagonal_m12(oriented, truncation, M12Path.ROTATION, config)
    d = 2 * truncation + 1
    logger.debug(f"MM tensor at N={truncation}: M11={mu_mean - mu_eff:.6e} M22={m22:.6e} M12={m12:.6e}")
    return EffectiveTensor(
        method=Method.MM,
        m11=mu_mean - mu_eff,
        m22=m22,
        m12=m12,
        rho_mean=averages.rho_mean,
        mu_mean=mu_mean,
        mu_harmonic=mu_harmonic,
        truncation=truncation,
        d=d,
        matrix_dim=2 * d,
    )


def closed_form_estimate(cell: UnitCell) -> EffectiveTensor:
    """Isotropic closed-form estimate c² ≈ (⟨⟨μ⁻¹⟩₁⁻¹⟩₂ + ⟨⟨μ⟩₂⁻¹⟩₁⁻¹)/(2⟨ρ⟩).

    Returned as an isotropic tensor (M_11 = M_22, no M_12) so that it shares the speed and
    bound accessors of the other methods.
    """
    oriented = _oriented(cell, 1)
    averages = cell_averages(oriented)
    mu_mean, mu_harmonic = averages.moduli
    series_then_mean, mean_then_series = layered_means(oriented)
    correction = mu_mean - 0.5 * (series_then_mean + mean_then_series)
    return EffectiveTensor(
        method=Method.ESTIMATE,
        m11=correction,
        m22=correction,
        m12=None,
        rho_mean=averages.rho_mean,
        mu_mean=mu_mean,
        mu_harmonic=mu_harmonic,
    )


__all__ = [
    "MonodromyMatrix",
    "PropagationStep",
    "TruncatedGenerator",
    "assemble_generator",
    "closed_form_estimate",
    "effective_tensor",
    "monodromy",
    "offdiagonal_m12",
    "plan_propagation",
    "principal_speed",
    "segment_product",
    "solve_periodic_deflated",
]
