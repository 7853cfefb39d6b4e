"""
This module contains the solver configuration. Values come from keyword arguments, then
``MONODROMY_SPEED_*`` environment variables, then the defaults below.
"""

from enum import StrEnum

from pydantic import Field, PositiveFloat, PositiveInt
from pydantic_settings import BaseSettings, SettingsConfigDict


class InverseRule(StrEnum):
    """How the truncated inverse-modulus block is built."""

    DIRECT = "direct"
    """Toeplitz matrix of the Fourier coefficients of 1/μ."""
    LAURENT = "laurent"
    """Inverse of the Toeplitz matrix of the Fourier coefficients of μ."""


class M12Path(StrEnum):
    """How the off-diagonal coefficient M_12 is computed."""

    DIRECT = "direct"
    ROTATION = "rotation"


class Quadrature(StrEnum):
    """x₁-integration of the direct M_12 path within a propagation step."""

    EXACT = "exact"
    GAUSS = "gauss"


class SolverConfig(BaseSettings):
    """Numerical settings shared by the solvers."""

    model_config = SettingsConfigDict(env_prefix="MONODROMY_SPEED_", frozen=True)

    inverse_rule: InverseRule = Field(
        default=InverseRule.LAURENT,
        description="Rule for the truncated inverse-modulus block; laurent is exact for laminates at every N",
    )
    m12_path: M12Path = Field(default=M12Path.DIRECT, description="Path used for M_12")
    m12_quadrature: Quadrature = Field(default=Quadrature.EXACT, description="x₁-integration of the direct M_12 path")
    gauss_order: PositiveInt = Field(default=8, description="Gauss-Legendre points per step when quadrature is gauss")
    rotation_slices: PositiveInt | None = Field(
        default=None, description="Slices of the 45° staircase, None for 16·(2N+1)"
    )
    max_log_growth: PositiveFloat = Field(
        default=6.0,
        description="Largest natural-log growth one propagation segment may carry in the periodic solve",
    )
    cg_rtol: PositiveFloat = Field(default=1e-10, description="Relative residual target of the FD oracle")
    cg_max_iter_factor: PositiveInt = Field(
        default=50, description="FD oracle iteration cap per grid point along an axis"
    )

    def slices_for(self, truncation: int) -> int:
        """Staircase slice count for a truncation N."""
        return self.rotation_slices if self.rotation_slices is not None else 16 * (2 * truncation + 1)


__all__ = ["InverseRule", "M12Path", "Quadrature", "SolverConfig"]
