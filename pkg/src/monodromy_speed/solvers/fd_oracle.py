"""
This module contains the finite-difference reference solver for 2D cells: a cell-centred
periodic grid with exact sub-cell moduli, harmonic-mean face moduli and conjugate
gradients on the zero-mean subspace.
"""

import logging
import math
from collections.abc import Sequence

import numpy as np
import numpy.typing as npt
import scipy.sparse.linalg
from pydantic import BaseModel, ConfigDict, Field

from monodromy_speed.api.exceptions import (
    InvalidCellError,
    NonMonotoneRefinementError,
    OracleConvergenceError,
    TruncationError,
)
from monodromy_speed.api.results import EffectiveTensor, Method
from monodromy_speed.api.unit_cell import Dimension, UnitCell
from monodromy_speed.cell.averages import cell_averages
from monodromy_speed.cell.slabs import grid_moduli, scalar_modulus, slab_partition
from monodromy_speed.config import SolverConfig

logger = logging.getLogger(__name__)

MIN_GRID = 64
STALL_TOLERANCE = 1e-9


class GridField(BaseModel):
    """Moduli of an n×n cell-centred grid, with face values between neighbours.

    ``mu_cells[i]`` is the exact sub-cell laminate value for flux along axis i, so
    interfaces between grid lines are resolved by their area and orientation.

    ``mu_faces[0][i, j]`` sits between cells (i, j) and (i+1, j); ``mu_faces[1][i, j]``
    between (i, j) and (i, j+1). Indices wrap periodically.
    """

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    n: int = Field(description="Grid points per axis", ge=MIN_GRID)
    spacing: tuple[float, float] = Field(description="(h₁, h₂)")
    mu_cells: tuple[np.ndarray, np.ndarray] = Field(description="Cell moduli per flux axis, axis 0 along x₁")
    mu_faces: tuple[np.ndarray, np.ndarray] = Field(description="Harmonic-mean face moduli per axis")

    @classmethod
    def sample(cls, cell: UnitCell, n: int) -> "GridField":
        cells = grid_moduli(slab_partition(cell), (n, n), scalar_modulus)
        faces = tuple(
            2.0 * mu * np.roll(mu, -1, axis) / (mu + np.roll(mu, -1, axis)) for axis, mu in enumerate(cells)
        )
        return cls(n=n, spacing=(cell.periods[0] / n, cell.periods[1] / n), mu_cells=cells, mu_faces=faces)

    def apply(self, values: npt.NDArray[np.float64]) -> npt.NDArray[np.float64]:
        """−∇·(μ∇h) on the zero-mean subspace, for a flattened field ``values``."""
        field = values.reshape(self.n, self.n)
        field = field - field.mean()
        result = np.zeros_like(field)
        for axis, (faces, h) in enumerate(zip(self.mu_faces, self.spacing, strict=True)):
            flux = faces * (np.roll(field, -1, axis) - field) / h
            result -= (flux - np.roll(flux, 1, axis)) / h
        return (result - result.mean()).ravel()

    def source(self, axis: int) -> npt.NDArray[np.float64]:
        """The discrete ∂ᵢμ, (μ_face,i − μ_face,i shifted back by one)/hᵢ."""
        faces = self.mu_faces[axis]
        return ((faces - np.roll(faces, 1, axis)) / self.spacing[axis]).ravel()


def _solve(grid: GridField, rhs: npt.NDArray[np.float64], config: SolverConfig) -> npt.NDArray[np.float64]:
    size = grid.n * grid.n
    operator = scipy.sparse.linalg.LinearOperator((size, size), matvec=grid.apply, dtype=float)
    iterations = 0

    def count(_: npt.NDArray[np.float64]) -> None:
        nonlocal iterations
        iterations += 1

    max_iterations = config.cg_max_iter_factor * grid.n
    solution, info = scipy.sparse.linalg.cg(
        operator, rhs, rtol=config.cg_rtol, maxiter=max_iterations, callback=count
    )
    if info != 0:
        norm = float(np.linalg.norm(rhs)) or 1.0
        residual = float(np.linalg.norm(rhs - grid.apply(solution))) / norm
        raise OracleConvergenceError(residual, iterations)
    logger.debug(f"CG converged on a {grid.n}x{grid.n} grid in {iterations} iterations")
    return solution - solution.mean()


def oracle_effective_tensor(cell: UnitCell, n: int, config: SolverConfig | None = None) -> EffectiveTensor:
    """Full 2×2 tensor M_ij from a finite-difference solve on an n×n grid.

    The discrete effective modulus is μ_eff,ij = δ_ij⟨μ_face,i⟩ − ⟨hᵢ bⱼ⟩ with C₀hᵢ = bᵢ;
    the reported tensor is M_ij = δ_ij⟨μ⟩ − μ_eff,ij with the exact cell average ⟨μ⟩.
    Laminates are reproduced exactly at any n; other cells converge as O(1/n).

    Raises:
        TruncationError: If n < 64 or n is not a power of two.
        OracleConvergenceError: If CG does not reach the configured tolerance.
    """
    if n < MIN_GRID:
        raise TruncationError("n", n, minimum=MIN_GRID)
    if n & (n - 1):
        raise TruncationError("n", n, requirement="must be a power of two")
    if cell.dimension is not Dimension.SCALAR_2D:
        message = "the finite-difference oracle needs a 2D cell"
        raise InvalidCellError(message)
    config = config or SolverConfig()
    averages = cell_averages(cell)
    mu_mean, mu_harmonic = averages.moduli
    grid = GridField.sample(cell, n)
    sources = [grid.source(axis) for axis in (0, 1)]
    correctors = [_solve(grid, source, config) for source in sources]
    mu_eff = np.array(
        [
            [
                (float(grid.mu_faces[i].mean()) if i == j else 0.0) - float(np.mean(correctors[i] * sources[j]))
                for j in (0, 1)
            ]
            for i in (0, 1)
        ]
    )
    mu_eff = 0.5 * (mu_eff + mu_eff.T)
    m = mu_mean * np.eye(2) - mu_eff
    return EffectiveTensor(
        method=Method.ORACLE,
        m11=float(m[0, 0]),
        m22=float(m[1, 1]),
        m12=float(m[0, 1]),
        rho_mean=averages.rho_mean,
        mu_mean=mu_mean,
        mu_harmonic=mu_harmonic,
        truncation=n,
        matrix_dim=n * n,
    )


class RichardsonSpeed(BaseModel):
    """A speed extrapolated from a sequence of grids."""

    model_config = ConfigDict(frozen=True)

    speed: float = Field(description="Extrapolated speed in m/s")
    order: float = Field(description="Convergence order used for the extrapolation")
    observed: bool = Field(default=False, description="Whether the order was measured from three grids")
    grids: tuple[int, ...]
    speeds: tuple[float, ...] = Field(description="Speed on each grid")


def richardson_speed(
    cell: UnitCell, grids: Sequence[int], axis: int = 1, config: SolverConfig | None = None
) -> RichardsonSpeed:
    """Richardson-extrapolate the oracle speed along ``axis`` over increasing grids.

    Three or more grids give an observed order from the last three, used when it lies in
    [0.5, 4]; otherwise first order is assumed. Speeds that have stalled to within
    ``STALL_TOLERANCE`` are returned as they are.

    Raises:
        NonMonotoneRefinementError: If the last three speeds do not move in one direction.
    """
    if len(grids) < 2 or any(b <= a for a, b in zip(grids[:-1], grids[1:], strict=False)):
        message = f"richardson_speed needs at least two increasing grids, got {tuple(grids)}"
        raise ValueError(message)
    kappa = (1.0, 0.0) if axis == 1 else (0.0, 1.0)
    speeds = [oracle_effective_tensor(cell, n, config).speed(kappa) for n in grids]
    stall = STALL_TOLERANCE * abs(speeds[-1])
    middle = speeds[-2] - speeds[-1]
    if abs(middle) <= stall:
        return RichardsonSpeed(speed=speeds[-1], order=1.0, grids=tuple(grids), speeds=tuple(speeds))
    order, observed = 1.0, False
    if len(speeds) >= 3:
        coarse = speeds[-3] - speeds[-2]
        if coarse * middle <= 0.0 or abs(coarse) <= stall:
            raise NonMonotoneRefinementError(tuple(grids), tuple(speeds))
        measured = math.log(coarse / middle) / math.log(grids[-2] / grids[-3])
        if 0.5 <= measured <= 4.0:
            order, observed = measured, True
        else:
            logger.warning(f"Observed order {measured:.3g} outside [0.5, 4], extrapolating at first order")
    extrapolated = speeds[-1] + (speeds[-1] - speeds[-2]) / ((grids[-1] / grids[-2]) ** order - 1.0)
    logger.info(f"Richardson speed {extrapolated:.6g} m/s at order {order:.3g} from grids {tuple(grids)}")
    return RichardsonSpeed(
        speed=extrapolated, order=order, observed=observed, grids=tuple(grids), speeds=tuple(speeds)
    )


__all__ = ["MIN_GRID", "STALL_TOLERANCE", "GridField", "RichardsonSpeed", "oracle_effective_tensor", "richardson_speed"]
