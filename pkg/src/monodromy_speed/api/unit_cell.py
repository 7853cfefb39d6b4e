"""
This module contains the unit cell model: a rectangular (2D) or box (3D) period filled with
a background phase and painted with axis-aligned inclusions, plus the TOML description
format cells are loaded from.
"""

import logging
import tomllib
from collections.abc import Mapping, Sequence
from enum import StrEnum
from pathlib import Path
from typing import Any, Self

from pydantic import BaseModel, ConfigDict, Field, PositiveFloat, ValidationError, model_validator

from monodromy_speed.api.exceptions import CellFileError, InvalidCellError
from monodromy_speed.api.materials import ElasticPhase, MaterialPhase, Phase

logger = logging.getLogger(__name__)

# Inclusions may overhang the period by this much (relative) before they are rejected.
EDGE_TOLERANCE = 1e-12


class Dimension(StrEnum):
    """The physical problem a cell describes."""

    SCALAR_2D = "2d"
    ELASTIC_3D = "3d"


class Inclusion(BaseModel):
    """An axis-aligned rectangle (2D) or box (3D) of a single phase."""

    model_config = ConfigDict(frozen=True)

    corner: tuple[float, ...] = Field(description="Lower corner in cell coordinates", examples=[(0.25, 0.25)])
    size: tuple[PositiveFloat, ...] = Field(description="Edge lengths along each axis", examples=[(0.5, 0.5)])
    phase: MaterialPhase | ElasticPhase = Field(description="The phase filling the inclusion")

    @model_validator(mode="after")
    def validate_shape(self) -> Self:
        if len(self.corner) != len(self.size):
            message = f"corner {self.corner} and size {self.size} have different lengths"
            raise ValueError(message)
        return self

    @property
    def upper(self) -> tuple[float, ...]:
        """Upper corner of the inclusion."""
        return tuple(c + s for c, s in zip(self.corner, self.size, strict=True))

    @property
    def volume(self) -> float:
        volume = 1.0
        for s in self.size:
            volume *= s
        return volume

    def contains(self, point: Sequence[float]) -> bool:
        """Half-open membership test: lower edges belong to the inclusion, upper edges do not."""
        return all(lo <= p < hi for lo, p, hi in zip(self.corner, point, self.upper, strict=True))

    def permuted(self, order: Sequence[int]) -> Self:
        """The inclusion with axes relabelled so that new axis ``a`` is old axis ``order[a]``."""
        phase = self.phase.permuted(order) if isinstance(self.phase, ElasticPhase) else self.phase
        return type(self)(
            corner=tuple(self.corner[a] for a in order),
            size=tuple(self.size[a] for a in order),
            phase=phase,
        )


class UnitCell(BaseModel):
    """A periodic cell with a background phase and inclusions painted in order.

    Later inclusions override earlier ones where they overlap. 2D cells carry
    ``MaterialPhase`` values (antiplane shear), 3D cells carry ``ElasticPhase`` values.
    """

    model_config = ConfigDict(frozen=True)

    periods: tuple[PositiveFloat, ...] = Field(description="Cell edge lengths T_i", examples=[(1.0, 1.0)])
    background: MaterialPhase | ElasticPhase = Field(description="The phase filling the cell outside inclusions")
    inclusions: tuple[Inclusion, ...] = Field(default=(), description="Inclusions in painting order")

    @model_validator(mode="after")
    def validate_cell(self) -> Self:
        """Check dimensions, bounds and that every phase belongs to the same problem."""
        if len(self.periods) not in (2, 3):
            message = f"periods must have 2 or 3 entries, got {len(self.periods)}"
            raise ValueError(message)
        expected = MaterialPhase if len(self.periods) == 2 else ElasticPhase
        for index, phase in enumerate((self.background, *(inc.phase for inc in self.inclusions))):
            if not isinstance(phase, expected):
                where = "background" if index == 0 else f"inclusion {index - 1}"
                message = f"{where} must be a {expected.__name__} in a {len(self.periods)}D cell"
                raise ValueError(message)
        for index, inclusion in enumerate(self.inclusions):
            if len(inclusion.corner) != len(self.periods):
                message = f"inclusion {index} has {len(inclusion.corner)} coordinates, expected {len(self.periods)}"
                raise ValueError(message)
            for lo, hi, period in zip(inclusion.corner, inclusion.upper, self.periods, strict=True):
                if lo < -EDGE_TOLERANCE * period or hi > period * (1.0 + EDGE_TOLERANCE):
                    message = f"inclusion {index} [{lo}, {hi}) leaves the period [0, {period}]"
                    raise ValueError(message)
        return self

    @property
    def dimension(self) -> Dimension:
        return Dimension.SCALAR_2D if len(self.periods) == 2 else Dimension.ELASTIC_3D

    @property
    def volume(self) -> float:
        """Cell area (2D) or volume (3D)."""
        volume = 1.0
        for period in self.periods:
            volume *= period
        return volume

    @property
    def is_homogeneous(self) -> bool:
        return all(inclusion.phase == self.background for inclusion in self.inclusions)

    @property
    def phases(self) -> tuple[Phase, ...]:
        """Distinct phases in order of first appearance."""
        seen: list[Phase] = []
        for phase in (self.background, *(inc.phase for inc in self.inclusions)):
            if phase not in seen:
                seen.append(phase)
        return tuple(seen)

    def phase_at(self, point: Sequence[float]) -> Phase:
        """The phase at ``point``, wrapped periodically, by the painter's rule."""
        if len(point) != len(self.periods):
            message = f"point {tuple(point)} does not match the cell dimension {len(self.periods)}"
            raise InvalidCellError(message)
        wrapped = [p % period for p, period in zip(point, self.periods, strict=True)]
        for inclusion in reversed(self.inclusions):
            if inclusion.contains(wrapped):
                return inclusion.phase
        return self.background

    def permuted(self, order: Sequence[int]) -> Self:
        """The same crystal described with axes relabelled, new axis ``a`` being old axis ``order[a]``."""
        if sorted(order) != list(range(len(self.periods))):
            message = f"{tuple(order)} is not a permutation of the cell axes"
            raise InvalidCellError(message)
        background = self.background.permuted(order) if isinstance(self.background, ElasticPhase) else self.background
        return type(self)(
            periods=tuple(self.periods[a] for a in order),
            background=background,
            inclusions=tuple(inclusion.permuted(order) for inclusion in self.inclusions),
        )

    def swapped(self) -> Self:
        """The 2D cell with x1 and x2 interchanged."""
        if self.dimension is not Dimension.SCALAR_2D:
            message = "swapped() is defined for 2D cells, use permuted() in 3D"
            raise InvalidCellError(message)
        return self.permuted((1, 0))

    def with_phases_exchanged(self, first: Phase, second: Phase) -> Self:
        """A copy in which every occurrence of ``first`` becomes ``second`` and vice versa."""

        def exchange(phase: Phase) -> Phase:
            if phase == first:
                return second
            if phase == second:
                return first
            return phase

        return type(self)(
            periods=self.periods,
            background=exchange(self.background),
            inclusions=tuple(
                inclusion.model_copy(update={"phase": exchange(inclusion.phase)}) for inclusion in self.inclusions
            ),
        )


class PhaseDescription(BaseModel):
    """A phase as written in a cell file.

    2D phases give ``rho`` and ``mu``. 3D phases give ``rho`` and either the Lamé pair
    (``lame_lambda``, ``mu``) or a full 6×6 Voigt ``stiffness``.
    """

    rho: PositiveFloat
    mu: PositiveFloat | None = None
    lame_lambda: float | None = None
    stiffness: list[list[float]] | None = None

    def to_phase(self, dimension: Dimension) -> Phase:
        if dimension is Dimension.SCALAR_2D:
            if self.mu is None:
                message = "2D phases need 'mu'"
                raise ValueError(message)
            return MaterialPhase(rho=self.rho, mu=self.mu)
        if self.stiffness is not None:
            return ElasticPhase(rho=self.rho, stiffness=tuple(tuple(row) for row in self.stiffness))
        if self.mu is None or self.lame_lambda is None:
            message = "3D phases need 'stiffness' or both 'lame_lambda' and 'mu'"
            raise ValueError(message)
        return ElasticPhase.isotropic(rho=self.rho, lame_lambda=self.lame_lambda, mu=self.mu)


class InclusionDescription(PhaseDescription):
    corner: list[float]
    size: list[PositiveFloat]


class CellSection(BaseModel):
    periods: list[PositiveFloat] = Field(default_factory=lambda: [1.0, 1.0])
    dimension: Dimension | None = None

    @model_validator(mode="after")
    def validate_dimension(self) -> Self:
        if self.dimension is not None and int(self.dimension.value[0]) != len(self.periods):
            message = f"dimension {self.dimension.value} does not match {len(self.periods)} periods"
            raise ValueError(message)
        return self


class CellDescription(BaseModel):
    """The structure of a TOML cell file.

    ```toml
    [cell]
    periods = [1.0, 1.0]

    [background]
    rho = 7.8e3
    mu = 80e9

    [[inclusion]]
    corner = [0.25, 0.25]
    size = [0.5, 0.5]
    rho = 1.14e3
    mu = 1.48e9
    ```
    """

    cell: CellSection = Field(default_factory=CellSection)
    background: PhaseDescription
    inclusion: list[InclusionDescription] = Field(default_factory=list)

    def to_cell(self) -> UnitCell:
        dimension = Dimension.SCALAR_2D if len(self.cell.periods) == 2 else Dimension.ELASTIC_3D
        return UnitCell(
            periods=tuple(self.cell.periods),
            background=self.background.to_phase(dimension),
            inclusions=tuple(
                Inclusion(corner=tuple(inc.corner), size=tuple(inc.size), phase=inc.to_phase(dimension))
                for inc in self.inclusion
            ),
        )


def build_cell(description: CellDescription | Mapping[str, Any]) -> UnitCell:
    """Validate a cell description and build the unit cell.

    Raises:
        InvalidCellError: If any field violates the cell invariants.
    """
    try:
        if not isinstance(description, CellDescription):
            description = CellDescription.model_validate(description)
        cell = description.to_cell()
    except (ValidationError, ValueError) as e:
        raise InvalidCellError(str(e)) from e
    logger.debug(f"Built {cell.dimension.value} cell with periods {cell.periods} and {len(cell.inclusions)} inclusions")
    return cell


def load_cell(path: str | Path) -> UnitCell:
    """Read a TOML cell file.

    Raises:
        CellFileError: If the file cannot be read, is not valid TOML, or describes an invalid cell.
    """
    try:
        with Path(path).open("rb") as handle:
            data = tomllib.load(handle)
    except (OSError, tomllib.TOMLDecodeError) as e:
        raise CellFileError(str(path), str(e)) from e
    try:
        return build_cell(data)
    except InvalidCellError as e:
        raise CellFileError(str(path), e.message) from e


__all__ = [
    "EDGE_TOLERANCE",
    "CellDescription",
    "Dimension",
    "Inclusion",
    "InclusionDescription",
    "PhaseDescription",
    "UnitCell",
    "build_cell",
    "load_cell",
]
