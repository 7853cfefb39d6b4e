"""
This module contains ready-made phases and cell families: steel and epoxy, the centred
square-rod crystal and two-phase laminates.
"""

import logging
import math

from monodromy_speed.api.materials import MaterialPhase, Phase
from monodromy_speed.api.unit_cell import EDGE_TOLERANCE, Inclusion, UnitCell

logger = logging.getLogger(__name__)

STEEL = MaterialPhase(rho=7.8e3, mu=80e9)

EPOXY = MaterialPhase(rho=1.14e3, mu=1.48e9)


def square_rod_cell(
    matrix: MaterialPhase, rod: MaterialPhase, f: float, period: float = 1.0
) -> tuple[UnitCell, str | None]:
    """A square cell with a centred square rod of side √f·T.

    A rod that reaches the cell boundary (or vanishes) within 1e-12 is replaced by the
    homogeneous limit, and the returned note says so.

    Returns:
        The cell and a note, None when no clamping was needed.
    """
    if not 0.0 <= f <= 1.0:
        message = f"volume fraction must lie in [0, 1], got {f}"
        raise ValueError(message)
    side = math.sqrt(f) * period
    if side >= period * (1.0 - EDGE_TOLERANCE):
        note = None if f == 1.0 else f"rod side {side!r} clamped to the cell period"
        return UnitCell(periods=(period, period), background=rod), note
    if side <= period * EDGE_TOLERANCE:
        note = None if f == 0.0 else f"rod side {side!r} clamped to zero"
        return UnitCell(periods=(period, period), background=matrix), note
    corner = 0.5 * (period - side)
    rod_inclusion = Inclusion(corner=(corner, corner), size=(side, side), phase=rod)
    return UnitCell(periods=(period, period), background=matrix, inclusions=(rod_inclusion,)), None


def laminate_cell(
    first: Phase, second: Phase, fraction: float, periods: tuple[float, ...] = (1.0, 1.0)
) -> UnitCell:
    """Layers stacked along x₁: ``second`` fills the last ``fraction`` of the period.

    Works for 2D and 3D ``periods``; the layer spans every transverse period.
    """
    if not 0.0 < fraction < 1.0:
        message = f"layer fraction must lie in (0, 1), got {fraction}"
        raise ValueError(message)
    width = fraction * periods[0]
    layer = Inclusion(
        corner=(periods[0] - width, *(0.0 for _ in periods[1:])),
        size=(width, *periods[1:]),
        phase=second,
    )
    return UnitCell(periods=periods, background=first, inclusions=(layer,))


__all__ = ["EPOXY", "STEEL", "laminate_cell", "square_rod_cell"]
