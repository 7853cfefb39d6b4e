"""
This module contains the slab decomposition of a unit cell along x₁ and the closed-form
Fourier coefficients of piecewise-constant fields over slab cross-sections.

A slab is a maximal x₁-interval on which the material does not depend on x₁. Its
cross-section is a list of axis-aligned pieces (intervals in 2D, rectangles in 3D), each
carrying one phase.
"""

import logging
from collections.abc import Callable, Sequence
from functools import lru_cache
from typing import Self

import numpy as np
import numpy.typing as npt
from pydantic import BaseModel, ConfigDict, Field, model_validator

from monodromy_speed.api.exceptions import InvalidCellError, TruncationError
from monodromy_speed.api.materials import MaterialPhase, Phase
from monodromy_speed.api.unit_cell import EDGE_TOLERANCE, UnitCell

logger = logging.getLogger(__name__)

PhaseValue = Callable[[Phase], float | npt.NDArray[np.float64]]


class SlabPiece(BaseModel):
    """A constant piece of a slab cross-section."""

    model_config = ConfigDict(frozen=True)

    lower: tuple[float, ...] = Field(description="Lower transverse corner")
    upper: tuple[float, ...] = Field(description="Upper transverse corner")
    phase: Phase

    @property
    def measure(self) -> float:
        """Length (2D) or area (3D) of the piece."""
        measure = 1.0
        for lo, hi in zip(self.lower, self.upper, strict=True):
            measure *= hi - lo
        return measure


class Slab(BaseModel):
    """One x₁-interval [start, start + width) and its x₁-independent cross-section."""

    model_config = ConfigDict(frozen=True)

    start: float
    width: float = Field(gt=0.0)
    transverse_periods: tuple[float, ...]
    pieces: tuple[SlabPiece, ...]

    @property
    def stop(self) -> float:
        return self.start + self.width

    def transverse_average(self, value: PhaseValue) -> float | npt.NDArray[np.float64]:
        """Cross-section average of ``value(phase)``."""
        area = float(np.prod(self.transverse_periods))
        return sum(piece.measure * np.asarray(value(piece.phase), dtype=float) for piece in self.pieces) / area


class SlabPartition(BaseModel):
    """The ordered slabs of a cell along its first axis."""

    model_config = ConfigDict(frozen=True)

    periods: tuple[float, ...]
    breakpoints: tuple[float, ...]
    slabs: tuple[Slab, ...]

    @model_validator(mode="after")
    def validate_breakpoints(self) -> Self:
        points = np.asarray(self.breakpoints)
        if points[0] != 0.0 or points[-1] != self.periods[0] or np.any(np.diff(points) <= 0.0):
            message = f"breakpoints must increase strictly from 0 to {self.periods[0]}, got {self.breakpoints}"
            raise ValueError(message)
        if len(self.slabs) != len(points) - 1:
            message = f"{len(self.slabs)} slabs for {len(points)} breakpoints"
            raise ValueError(message)
        return self

    def __len__(self) -> int:
        return len(self.slabs)

    def average(self, value: PhaseValue) -> float | npt.NDArray[np.float64]:
        """Exact cell average of ``value(phase)``."""
        total = sum(slab.width * np.asarray(slab.transverse_average(value)) for slab in self.slabs)
        return total / self.periods[0]


def merged_breakpoints(points: Sequence[float], period: float) -> list[float]:
    """Sorted distinct points of [0, period] with 0 and period included; near-duplicates collapse."""
    tolerance = EDGE_TOLERANCE * period
    merged = [0.0]
    for point in sorted(min(max(p, 0.0), period) for p in points):
        if point - merged[-1] > tolerance:
            merged.append(point)
    if period - merged[-1] > tolerance:
        merged.append(period)
    else:
        merged[-1] = period
    return merged


def _cross_section(cell: UnitCell, x1: float) -> tuple[SlabPiece, ...]:
    """Cross-section pieces at ``x1`` resolved by the painter's rule."""
    transverse = cell.periods[1:]
    active = [inc for inc in cell.inclusions if inc.corner[0] <= x1 < inc.upper[0]]
    axes_points = [
        merged_breakpoints([edge for inc in active for edge in (inc.corner[a + 1], inc.upper[a + 1])], period)
        for a, period in enumerate(transverse)
    ]

    def phase_at(point: tuple[float, ...]) -> Phase:
        for inclusion in reversed(active):
            if all(lo <= p < hi for lo, p, hi in zip(inclusion.corner[1:], point, inclusion.upper[1:], strict=True)):
                return inclusion.phase
        return cell.background

    pieces: list[SlabPiece] = []
    if len(transverse) == 1:
        points = axes_points[0]
        for lo, hi in zip(points[:-1], points[1:], strict=True):
            phase = phase_at((0.5 * (lo + hi),))
            if pieces and pieces[-1].phase == phase:
                pieces[-1] = SlabPiece(lower=pieces[-1].lower, upper=(hi,), phase=phase)
            else:
                pieces.append(SlabPiece(lower=(lo,), upper=(hi,), phase=phase))
        return tuple(pieces)
    p2, p3 = axes_points
    for lo2, hi2 in zip(p2[:-1], p2[1:], strict=True):
        for lo3, hi3 in zip(p3[:-1], p3[1:], strict=True):
            phase = phase_at((0.5 * (lo2 + hi2), 0.5 * (lo3 + hi3)))
            pieces.append(SlabPiece(lower=(lo2, lo3), upper=(hi2, hi3), phase=phase))
    return tuple(pieces)


def slab_partition(cell: UnitCell) -> SlabPartition:
    """Split the cell along x₁ at every inclusion edge.

    The breakpoints are the distinct x₁-coordinates of inclusion edges together with 0 and
    T₁; the material on each interval does not depend on x₁.
    """
    period = cell.periods[0]
    edges = [edge for inc in cell.inclusions for edge in (inc.corner[0], inc.upper[0])]
    breakpoints = merged_breakpoints(edges, period)
    slabs = tuple(
        Slab(
            start=lo,
            width=hi - lo,
            transverse_periods=cell.periods[1:],
            pieces=_cross_section(cell, 0.5 * (lo + hi)),
        )
        for lo, hi in zip(breakpoints[:-1], breakpoints[1:], strict=True)
    )
    logger.debug(f"Partitioned cell {cell.periods} into {len(slabs)} slabs")
    return SlabPartition(periods=cell.periods, breakpoints=tuple(breakpoints), slabs=slabs)


def piece_coefficients(lower: float, upper: float, period: float, max_index: int) -> npt.NDArray[np.complex128]:
    """Fourier coefficients n = −max_index..max_index of the indicator of [lower, upper).

    f̂ₙ = (1/T)∫ e^{−2πinx/T} dx over the piece, in closed form.
    """
    n = np.arange(-max_index, max_index + 1)
    coefficients = np.empty(n.shape, dtype=complex)
    nonzero = n != 0
    k = -2j * np.pi * n[nonzero]
    if abs((upper - lower) - period) <= EDGE_TOLERANCE * period:
        coefficients[nonzero] = 0.0
    else:
        coefficients[nonzero] = (np.exp(k * upper / period) - np.exp(k * lower / period)) / k
    coefficients[~nonzero] = (upper - lower) / period
    return coefficients


def transverse_coefficients(
    pieces: Sequence[SlabPiece],
    transverse_periods: Sequence[float],
    max_indices: Sequence[int],
    value: PhaseValue,
) -> npt.NDArray[np.complex128]:
    """Fourier coefficients of ``value(phase)`` over a cross-section.

    The result has one axis of length 2K+1 per transverse axis (index n at offset K) followed
    by the shape of ``value``.
    """
    total: npt.NDArray[np.complex128] | None = None
    for piece in pieces:
        weight = piece_coefficients(piece.lower[0], piece.upper[0], transverse_periods[0], max_indices[0])
        for a in range(1, len(transverse_periods)):
            factor = piece_coefficients(piece.lower[a], piece.upper[a], transverse_periods[a], max_indices[a])
            weight = np.multiply.outer(weight, factor)
        term = np.multiply.outer(weight, np.asarray(value(piece.phase), dtype=float))
        total = term if total is None else total + term
    if total is None:
        message = "a slab cross-section has no pieces"
        raise InvalidCellError(message)
    return total


def cell_coefficients(
    partition: SlabPartition, max_indices: Sequence[int], value: PhaseValue
) -> npt.NDArray[np.complex128]:
    """Fourier coefficients over the whole cell, one axis of length 2K+1 per cell axis."""
    total: npt.NDArray[np.complex128] | None = None
    for slab in partition.slabs:
        along = piece_coefficients(slab.start, slab.stop, partition.periods[0], max_indices[0])
        across = transverse_coefficients(slab.pieces, slab.transverse_periods, max_indices[1:], value)
        term = np.multiply.outer(along, across)
        total = term if total is None else total + term
    if total is None:
        message = "the partition has no slabs"
        raise InvalidCellError(message)
    return total


class FourierSlab(BaseModel):
    """Truncated Fourier data of a 2D slab along x₂.

    ``mu_hat`` and ``inv_mu_hat`` hold n = −2N..2N at offset 2N so that (2N+1)×(2N+1)
    Toeplitz matrices of μ̂_{n−m} are exactly representable. Arrays are read-only.
    """

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    width: float = Field(description="Slab width Δ along x₁")
    period: float = Field(description="Transverse period T₂")
    truncation: int = Field(description="Half-width N", ge=0)
    mu_hat: np.ndarray = Field(description="Coefficients of μ, n = −2N..2N")
    inv_mu_hat: np.ndarray = Field(description="Coefficients of 1/μ, n = −2N..2N")
    rho_mean: float = Field(description="x₂-average of ρ on the slab")

    @property
    def mu_mean(self) -> float:
        """μ̂₀, the x₂-average of μ."""
        return float(self.mu_hat[2 * self.truncation].real)

    def coefficient(self, n: int) -> complex:
        return complex(self.mu_hat[n + 2 * self.truncation])


def scalar_modulus(phase: Phase) -> float:
    if not isinstance(phase, MaterialPhase):
        message = "scalar Fourier data needs a 2D cell"
        raise InvalidCellError(message)
    return phase.mu


@lru_cache(maxsize=4096)
def _profile_fourier(
    pieces: tuple[SlabPiece, ...], period: float, truncation: int
) -> tuple[npt.NDArray[np.complex128], npt.NDArray[np.complex128], float]:
    mu_hat = transverse_coefficients(pieces, (period,), (2 * truncation,), scalar_modulus)
    inv_mu_hat = transverse_coefficients(
        pieces, (period,), (2 * truncation,), lambda phase: 1.0 / scalar_modulus(phase)
    )
    mu_hat.setflags(write=False)
    inv_mu_hat.setflags(write=False)
    rho_mean = sum(piece.measure * piece.phase.rho for piece in pieces) / period
    return mu_hat, inv_mu_hat, float(rho_mean)


def slab_fourier(slab: Slab, truncation: int) -> FourierSlab:
    """Closed-form Fourier coefficients of μ and 1/μ across a 2D slab.

    Coefficients are cached per distinct cross-section, so repeated profiles cost nothing.

    Raises:
        TruncationError: If ``truncation`` is negative.
    """
    if truncation < 0:
        raise TruncationError("N", truncation)
    if len(slab.transverse_periods) != 1:
        message = "slab_fourier is defined for 2D slabs"
        raise InvalidCellError(message)
    mu_hat, inv_mu_hat, rho_mean = _profile_fourier(slab.pieces, slab.transverse_periods[0], truncation)
    return FourierSlab(
        width=slab.width,
        period=slab.transverse_periods[0],
        truncation=truncation,
        mu_hat=mu_hat,
        inv_mu_hat=inv_mu_hat,
        rho_mean=rho_mean,
    )


def _overlaps(lower: float, upper: float, edges: npt.NDArray[np.float64]) -> npt.NDArray[np.float64]:
    """Length of [lower, upper) inside each grid interval [edges[k], edges[k + 1])."""
    return np.clip(np.minimum(upper, edges[1:]) - np.maximum(lower, edges[:-1]), 0.0, None)


def _piece_at(slab: Slab, x2: float) -> SlabPiece:
    for piece in slab.pieces:
        if piece.lower[0] <= x2 < piece.upper[0]:
            return piece
    return slab.pieces[-1]


def grid_moduli(
    partition: SlabPartition, shape: tuple[int, int], value: PhaseValue
) -> tuple[npt.NDArray[np.float64], npt.NDArray[np.float64]]:
    """Per-cell values of a 2D cell on a regular ``shape`` grid, one array per flux axis.

    The slab and piece edges cut each grid cell into constant rectangles. The value for
    flux along axis i is the arithmetic mean, across the cell, of harmonic means taken
    along i. Interfaces need not lie on grid lines: laminates in either direction are
    represented exactly and the values move continuously with the geometry.
    Axis 0 of each array runs along x₁.
    """
    n1, n2 = shape
    t1, t2 = partition.periods
    edges1 = np.linspace(0.0, t1, n1 + 1)
    edges2 = np.linspace(0.0, t2, n2 + 1)
    h1, h2 = t1 / n1, t2 / n2
    along1 = np.zeros(shape)
    along2 = np.zeros(shape)
    for i in range(n1):
        lo, hi = edges1[i], edges1[i + 1]
        overlapping = [
            (slab, width) for slab in partition.slabs if (width := min(hi, slab.stop) - max(lo, slab.start)) > 0.0
        ]
        for slab, width in overlapping:
            resistance = sum(_overlaps(p.lower[0], p.upper[0], edges2) / float(value(p.phase)) for p in slab.pieces)
            along2[i] += (width / h1) * h2 / resistance
        cuts = merged_breakpoints(
            [edge for slab, _ in overlapping for piece in slab.pieces for edge in (piece.lower[0], piece.upper[0])], t2
        )
        for c, d in zip(cuts[:-1], cuts[1:], strict=True):
            middle = 0.5 * (c + d)
            resistance = sum(width / float(value(_piece_at(slab, middle).phase)) for slab, width in overlapping)
            along1[i] += _overlaps(c, d, edges2) / h2 * (h1 / resistance)
    logger.debug(f"Grid moduli on {n1}x{n2} cells from {len(partition)} slabs")
    return along1, along2


__all__ = [
    "FourierSlab",
    "PhaseValue",
    "Slab",
    "SlabPartition",
    "SlabPiece",
    "cell_coefficients",
    "grid_moduli",
    "merged_breakpoints",
    "piece_coefficients",
    "scalar_modulus",
    "slab_fourier",
    "slab_partition",
    "transverse_coefficients",
]
