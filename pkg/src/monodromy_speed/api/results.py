"""
This module contains the result models produced by the solvers and the CSV row schemas
written by the command-line front end.
"""

import csv
import math
from collections.abc import Iterable, Sequence
from enum import StrEnum
from pathlib import Path
from typing import IO, ClassVar

import numpy as np
import numpy.typing as npt
from pydantic import BaseModel, ConfigDict, Field, NonNegativeInt, PositiveFloat

from monodromy_speed.api.exceptions import NegativeSpeedSquaredError


class Method(StrEnum):
    """Solver methods that produce effective speeds."""

    MM = "mm"
    PWE = "pwe"
    ESTIMATE = "estimate"
    ORACLE = "oracle"
    ELASTIC3D = "elastic3d"


def _unit(kappa: Sequence[float]) -> npt.NDArray[np.float64]:
    vector = np.asarray(kappa, dtype=float)
    norm = float(np.linalg.norm(vector))
    if vector.shape != (2,) or norm == 0.0:
        message = f"kappa must be a non-zero 2-vector, got {tuple(kappa)}"
        raise ValueError(message)
    return vector / norm


class EffectiveTensor(BaseModel):
    """The homogenization correction M_ij of a 2D cell and the speeds it implies.

    The effective modulus along a unit direction κ is μ_eff(κ) = ⟨μ⟩ − Σ M_ij κ_i κ_j and the
    quasistatic speed is c(κ) = √(μ_eff(κ)/⟨ρ⟩).
    """

    model_config = ConfigDict(frozen=True)

    method: Method = Field(description="The method that produced the tensor")
    m11: float = Field(description="M_11 in Pa")
    m22: float = Field(description="M_22 in Pa")
    m12: float | None = Field(default=None, description="M_12 in Pa, None when the method does not compute it")
    rho_mean: PositiveFloat = Field(description="Cell-averaged density ⟨ρ⟩")
    mu_mean: PositiveFloat = Field(description="Cell-averaged modulus ⟨μ⟩ (Voigt)")
    mu_harmonic: PositiveFloat = Field(description="Harmonic mean ⟨μ⁻¹⟩⁻¹ (Reuss)")
    truncation: NonNegativeInt = Field(
        default=0, description="N for mm, G for pwe, grid size n for oracle, 0 for estimate"
    )
    d: NonNegativeInt | None = Field(default=None, description="2·truncation+1 for the Fourier methods")
    matrix_dim: NonNegativeInt | None = Field(default=None, description="Size of the dominant dense matrix")

    @property
    def matrix(self) -> npt.NDArray[np.float64]:
        """M as a symmetric 2×2 array (M_12 = 0 when unknown)."""
        m12 = 0.0 if self.m12 is None else self.m12
        return np.array([[self.m11, m12], [m12, self.m22]])

    @property
    def mu_eff_tensor(self) -> npt.NDArray[np.float64]:
        return self.mu_mean * np.eye(2) - self.matrix

    def quadratic_form(self, kappa: Sequence[float]) -> float:
        """M(κ) for a direction κ (normalized internally)."""
        unit = _unit(kappa)
        return float(unit @ self.matrix @ unit)

    def mu_eff(self, kappa: Sequence[float]) -> float:
        return self.mu_mean - self.quadratic_form(kappa)

    def speed_squared(self, kappa: Sequence[float]) -> float:
        return self.mu_eff(kappa) / self.rho_mean

    def speed(self, kappa: Sequence[float]) -> float:
        """Effective speed c(κ) in m/s.

        Raises:
            NegativeSpeedSquaredError: If μ_eff(κ) is not positive.
        """
        squared = self.speed_squared(kappa)
        if not math.isfinite(squared) or squared <= 0.0:
            raise NegativeSpeedSquaredError(squared, self.truncation)
        return math.sqrt(squared)

    @property
    def c_kappa1(self) -> float:
        """Speed along the first lattice vector."""
        return self.speed((1.0, 0.0))

    @property
    def c_kappa2(self) -> float:
        """Speed along the second lattice vector."""
        return self.speed((0.0, 1.0))

    def principal_axes(self) -> tuple[tuple[float, float], float]:
        """Principal speeds (fast, slow) and the angle in radians of the fast axis from a₁.

        These are the semi-axes of the slowness ellipse c⁻²(κ) = const.
        """
        eigenvalues, eigenvectors = np.linalg.eigh(self.mu_eff_tensor)
        if eigenvalues[0] <= 0.0:
            raise NegativeSpeedSquaredError(float(eigenvalues[0]) / self.rho_mean, self.truncation)
        fast, slow = (math.sqrt(value / self.rho_mean) for value in eigenvalues[::-1])
        vector = eigenvectors[:, 1]
        angle = math.atan2(vector[1], vector[0]) % math.pi
        return (fast, slow), angle

    @property
    def reuss_speed(self) -> float:
        """Lower bound √(⟨μ⁻¹⟩⁻¹/⟨ρ⟩)."""
        return math.sqrt(self.mu_harmonic / self.rho_mean)

    @property
    def voigt_speed(self) -> float:
        """Upper bound √(⟨μ⟩/⟨ρ⟩)."""
        return math.sqrt(self.mu_mean / self.rho_mean)

    @property
    def is_elliptic(self) -> bool:
        return bool(np.linalg.eigvalsh(self.mu_eff_tensor)[0] > 0.0)

    def within_bounds(self, rtol: float = 1e-8) -> bool:
        """Whether every μ_eff(κ) lies in [⟨μ⁻¹⟩⁻¹, ⟨μ⟩] up to ``rtol``·⟨μ⟩."""
        eigenvalues = np.linalg.eigvalsh(self.mu_eff_tensor)
        slack = rtol * self.mu_mean
        return bool(eigenvalues[0] >= self.mu_harmonic - slack and eigenvalues[-1] <= self.mu_mean + slack)


class ElasticSpeeds(BaseModel):
    """Principal-direction quasistatic speeds of a 3D elastic cell."""

    model_config = ConfigDict(frozen=True)

    axis: int = Field(description="Propagation axis (1, 2 or 3)", ge=1, le=3)
    speeds: tuple[float, float, float] = Field(description="The three speeds in m/s, sorted descending")
    eigenvalues: tuple[float, float, float] = Field(description="⟨ρ⟩c² values in Pa, sorted descending")
    rho_mean: PositiveFloat
    stiffness_bounds: tuple[float, float] = Field(description="Extreme eigenvalues over all phase stiffnesses")
    truncation: tuple[NonNegativeInt, NonNegativeInt] = Field(description="(N2, N3) over the transverse axes")
    matrix_dim: NonNegativeInt

    method: ClassVar[Method] = Method.ELASTIC3D

    def within_bounds(self, rtol: float = 1e-8) -> bool:
        """Whether every ⟨ρ⟩c² lies between the extreme phase stiffness eigenvalues."""
        low, high = self.stiffness_bounds
        return all(low * (1.0 - rtol) <= value <= high * (1.0 + rtol) for value in self.eigenvalues)


class ResultRow(BaseModel):
    """Base class of the CSV row schemas; the field order is the header order."""

    @classmethod
    def header(cls) -> list[str]:
        return list(cls.model_fields)

    def as_record(self) -> dict[str, str]:
        record: dict[str, str] = {}
        for name, value in self.model_dump().items():
            if value is None:
                record[name] = ""
            elif isinstance(value, float):
                record[name] = repr(value)
            else:
                record[name] = str(value)
        return record


class ComputeRow(ResultRow):
    """One method result of ``compute`` or ``compare``."""

    method: str
    truncation: int | None = None
    d: int | None = None
    m11: float | None = None
    m22: float | None = None
    m12: float | None = None
    c_kappa1: float | None = None
    c_kappa2: float | None = None
    c_alpha1: float | None = None
    c_alpha2: float | None = None
    c_alpha3: float | None = None
    rho_mean: float | None = None
    mu_mean: float | None = None
    c_reuss: float | None = None
    c_voigt: float | None = None
    wall_time_ms: float | None = None
    relative_gap: float | None = None
    error: str | None = None


class SweepRow(ResultRow):
    """One (f, method, d) point of a volume-fraction sweep."""

    f: float
    method: str
    d: int | None = None
    c: float | None = None
    c_reuss: float | None = None
    c_voigt: float | None = None
    note: str | None = None
    error: str | None = None


class ConvergenceRow(ResultRow):
    """A truncation point (kind ``point``) or a fitted decay record (kind ``fit``)."""

    kind: str
    method: str
    d: int | None = None
    relative_error: float | None = None
    wall_time_ms: float | None = None
    matrix_dim: int | None = None
    decay_per_d: float | None = None
    decay_loglog: float | None = None


def write_rows(rows: Iterable[ResultRow], row_type: type[ResultRow], stream: IO[str]) -> None:
    """Write rows as CSV with the fixed header of ``row_type``."""
    writer = csv.DictWriter(stream, fieldnames=row_type.header(), lineterminator="\n")
    writer.writeheader()
    for row in rows:
        writer.writerow(row.as_record())


def write_rows_to_path(rows: Iterable[ResultRow], row_type: type[ResultRow], path: str | Path) -> None:
    with Path(path).open("w", newline="", encoding="utf-8") as handle:
        write_rows(rows, row_type, handle)


__all__ = [
    "ComputeRow",
    "ConvergenceRow",
    "EffectiveTensor",
    "ElasticSpeeds",
    "Method",
    "ResultRow",
    "SweepRow",
    "write_rows",
    "write_rows_to_path",
]
