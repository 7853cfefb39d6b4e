"""
This module contains exact cell averages of piecewise-constant fields, computed from the
slab partition without quadrature.
"""

from pydantic import BaseModel, ConfigDict, Field, PositiveFloat

from monodromy_speed.api.exceptions import InvalidCellError
from monodromy_speed.api.materials import Phase
from monodromy_speed.api.unit_cell import Dimension, UnitCell
from monodromy_speed.cell.slabs import scalar_modulus, slab_partition


class CellAverages(BaseModel):
    """Cell averages ⟨ρ⟩, ⟨μ⟩ and ⟨μ⁻¹⟩⁻¹. The modulus averages are None for 3D cells."""

    model_config = ConfigDict(frozen=True)

    rho_mean: PositiveFloat = Field(description="⟨ρ⟩ in kg/m³")
    mu_mean: PositiveFloat | None = Field(default=None, description="⟨μ⟩ in Pa (Voigt)")
    mu_harmonic: PositiveFloat | None = Field(default=None, description="⟨μ⁻¹⟩⁻¹ in Pa (Reuss)")

    @property
    def moduli(self) -> tuple[float, float]:
        """(⟨μ⟩, ⟨μ⁻¹⟩⁻¹) of a 2D cell."""
        if self.mu_mean is None or self.mu_harmonic is None:
            message = "modulus averages exist only for 2D cells"
            raise InvalidCellError(message)
        return self.mu_mean, self.mu_harmonic


def cell_averages(cell: UnitCell) -> CellAverages:
    """Exact area-weighted averages of the cell's density and modulus."""
    partition = slab_partition(cell)
    rho_mean = float(partition.average(lambda phase: phase.rho))
    if cell.dimension is Dimension.ELASTIC_3D:
        return CellAverages(rho_mean=rho_mean)
    mu_mean = float(partition.average(scalar_modulus))
    mu_harmonic = 1.0 / float(partition.average(lambda phase: 1.0 / scalar_modulus(phase)))
    return CellAverages(rho_mean=rho_mean, mu_mean=mu_mean, mu_harmonic=mu_harmonic)


def volume_fraction(cell: UnitCell, phase: Phase) -> float:
    """Fraction of the cell occupied by ``phase`` after painting."""
    return float(slab_partition(cell).average(lambda p: 1.0 if p == phase else 0.0))


def layered_means(cell: UnitCell) -> tuple[float, float]:
    """The two mixed means of a 2D cell, ⟨⟨μ⁻¹⟩₁⁻¹⟩₂ and ⟨⟨μ⟩₂⁻¹⟩₁⁻¹.

    The first treats every x₂-line as a series laminate along x₁; the second treats every
    x₁-slab as a parallel laminate along x₂ and then stacks the slabs in series.
    """
    rows = slab_partition(cell.swapped())
    series_then_mean = (
        sum(slab.width / float(slab.transverse_average(lambda p: 1.0 / scalar_modulus(p))) for slab in rows.slabs)
        / rows.periods[0]
    )
    columns = slab_partition(cell)
    mean_then_series = columns.periods[0] / sum(
        slab.width / float(slab.transverse_average(scalar_modulus)) for slab in columns.slabs
    )
    return series_then_mean, mean_then_series


__all__ = ["CellAverages", "cell_averages", "layered_means", "volume_fraction"]
