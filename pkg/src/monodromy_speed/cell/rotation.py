"""
This module contains the 45° rotation of a square 2D cell, used by the rotation path for
the off-diagonal coefficient M_12.
"""

import logging

import numpy as np

from monodromy_speed.api.exceptions import InvalidCellError, NonSquareCellError
from monodromy_speed.api.materials import Phase
from monodromy_speed.api.unit_cell import Dimension, Inclusion, UnitCell
from monodromy_speed.cell.slabs import merged_breakpoints

logger = logging.getLogger(__name__)


def _edges(cell: UnitCell, axis: int) -> list[float]:
    return sorted({edge for inc in cell.inclusions for edge in (inc.corner[axis], inc.upper[axis])})


def rotate45(cell: UnitCell, slices: int) -> UnitCell:
    """The same crystal seen in axes turned by 45°, as a staircase of x₁-slabs.

    The square lattice of period T has a square sublattice spanned by T(1, 1) and T(−1, 1),
    whose cell holds two copies of the original cell. In normalized coordinates y ∈ [0, 1)²
    of that cell, x = T(y₁ − y₂, y₁ + y₂). The result has period (1, 1): a uniform scale does
    not change effective speeds.

    The rotated cell is cut into ``slices`` uniform y₁-slices plus a cut wherever two rotated
    edge lines meet, so chord lengths vary linearly within each slice. Each slice carries
    the exact y₂-profile at its midpoint, which preserves every phase's area.

    Raises:
        NonSquareCellError: If T₁ ≠ T₂.
        InvalidCellError: If the cell is not 2D or ``slices`` < 1.
    """
    if cell.dimension is not Dimension.SCALAR_2D:
        message = "rotate45 needs a 2D cell"
        raise InvalidCellError(message)
    if slices < 1:
        message = f"rotate45 needs at least one slice, got {slices}"
        raise InvalidCellError(message)
    t1, t2 = cell.periods
    if abs(t1 - t2) > 1e-12 * max(t1, t2):
        raise NonSquareCellError(cell.periods)
    period = t1
    if not cell.inclusions:
        return UnitCell(periods=(1.0, 1.0), background=cell.background)

    edges1 = np.asarray(_edges(cell, 0)) / period
    edges2 = np.asarray(_edges(cell, 1)) / period
    # Phase boundaries are lines y₂ = ±(y₁ − e); they meet where y₁ = (e₁ + e₂)/2 (mod ½).
    meets = (0.5 * np.add.outer(edges1, edges2)).ravel()
    cuts = [k / slices for k in range(slices + 1)]
    cuts.extend((meets % 1.0).tolist())
    cuts.extend(((meets + 0.5) % 1.0).tolist())
    y1_points = merged_breakpoints(cuts, 1.0)

    inclusions: list[Inclusion] = []
    for lo1, hi1 in zip(y1_points[:-1], y1_points[1:], strict=True):
        y1 = 0.5 * (lo1 + hi1)
        # x₁/T = y₁ − y₂ crosses an edge e at y₂ = y₁ − e; x₂/T = y₁ + y₂ at y₂ = e − y₁ (mod 1).
        crossings = np.concatenate(((y1 - edges1) % 1.0, (edges2 - y1) % 1.0))
        y2_points = merged_breakpoints(crossings.tolist(), 1.0)
        for lo2, hi2 in zip(y2_points[:-1], y2_points[1:], strict=True):
            y2 = 0.5 * (lo2 + hi2)
            phase = cell.phase_at((period * (y1 - y2), period * (y1 + y2)))
            if phase == cell.background:
                continue
            if inclusions and _extends(inclusions[-1], lo1, hi1, lo2, phase):
                last = inclusions[-1]
                inclusions[-1] = Inclusion(corner=last.corner, size=(last.size[0], hi2 - last.corner[1]), phase=phase)
            else:
                inclusions.append(Inclusion(corner=(lo1, lo2), size=(hi1 - lo1, hi2 - lo2), phase=phase))
    logger.debug(f"Rotated cell into {len(y1_points) - 1} slices with {len(inclusions)} inclusions")
    return UnitCell(periods=(1.0, 1.0), background=cell.background, inclusions=tuple(inclusions))


def _extends(last: Inclusion, lo1: float, hi1: float, lo2: float, phase: Phase) -> bool:
    """Whether a piece continues ``last`` along y₂ within the same slice."""
    return (
        last.phase == phase
        and last.corner[0] == lo1
        and last.size[0] == hi1 - lo1
        and abs(last.upper[1] - lo2) <= 1e-14
    )


__all__ = ["rotate45"]
