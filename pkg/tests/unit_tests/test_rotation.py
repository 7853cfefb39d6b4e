"""Unit tests for the 45° cell rotation."""

import pytest

from monodromy_speed.api.exceptions import InvalidCellError, NonSquareCellError
from monodromy_speed.api.materials import ElasticPhase
from monodromy_speed.api.unit_cell import Inclusion, UnitCell
from monodromy_speed.cell.averages import cell_averages, volume_fraction
from monodromy_speed.cell.rotation import rotate45
from monodromy_speed.integrations.presets import EPOXY, STEEL, square_rod_cell


def off_center_cell() -> UnitCell:
    return UnitCell(
        periods=(2.0, 2.0),
        background=EPOXY,
        inclusions=(
            Inclusion(corner=(0.2, 0.2), size=(0.8, 0.8), phase=STEEL),
            Inclusion(corner=(1.0, 1.0), size=(0.6, 0.6), phase=STEEL.scaled(mu_factor=0.5)),
        ),
    )


def test_rotate_homogeneous():
    """Test a homogeneous cell stays homogeneous with unit period."""
    rotated = rotate45(UnitCell(periods=(3.0, 3.0), background=EPOXY), 8)
    assert rotated.periods == (1.0, 1.0)
    assert rotated.inclusions == ()
    assert rotated.background == EPOXY


@pytest.mark.parametrize("slices", [1, 7, 32])
def test_rotation_preserves_volume_fractions(slices: int):
    """Test every phase keeps its area fraction regardless of the slice count."""
    cell = off_center_cell()
    rotated = rotate45(cell, slices)
    for phase in cell.phases:
        assert volume_fraction(rotated, phase) == pytest.approx(volume_fraction(cell, phase), abs=1e-12)
    assert cell_averages(rotated).mu_mean == pytest.approx(cell_averages(cell).mu_mean, rel=1e-12)


def test_rotated_rod_is_a_diamond():
    """Test the centred rod seen at 45° sits on the diagonal points of the doubled cell."""
    cell, _ = square_rod_cell(EPOXY, STEEL, 0.25)
    rotated = rotate45(cell, 16)
    assert rotated.phase_at((0.5, 0.0)) == STEEL
    assert rotated.phase_at((0.0, 0.5)) == STEEL
    assert rotated.phase_at((0.25, 0.25)) == EPOXY


def checkerboard_cell() -> UnitCell:
    return UnitCell(
        periods=(1.0, 1.0),
        background=EPOXY,
        inclusions=(
            Inclusion(corner=(0.0, 0.0), size=(0.5, 0.5), phase=STEEL),
            Inclusion(corner=(0.5, 0.5), size=(0.5, 0.5), phase=STEEL),
        ),
    )


@pytest.mark.parametrize(("slices", "expected"), [(4, 4), (6, 8), (8, 8), (10, 12)])
def test_rotated_checkerboard_slab_count(slices: int, expected: int):
    """Test the staircase holds the uniform slices plus the quarter-point corner cuts."""
    rotated = rotate45(checkerboard_cell(), slices)
    assert len({round(inclusion.corner[0], 12) for inclusion in rotated.inclusions}) == expected
    assert volume_fraction(rotated, STEEL) == pytest.approx(0.5, abs=1e-12)


def test_rotated_checkerboard_is_mirror_symmetric():
    """Test swapping the original axes maps to y₂ → −y₂ in the rotated cell."""
    rotated = rotate45(checkerboard_cell(), 10)
    samples = [(k + 0.37) / 23.0 for k in range(23)]
    for y1 in samples:
        for y2 in samples:
            assert rotated.phase_at((y1, y2)) == rotated.phase_at((y1, 1.0 - y2))


def test_rotate_rejects_rectangles():
    """Test a rectangular period is rejected."""
    with pytest.raises(NonSquareCellError):
        rotate45(UnitCell(periods=(1.0, 2.0), background=EPOXY), 4)


def test_rotate_rejects_3d_and_zero_slices():
    """Test invalid arguments."""
    elastic = ElasticPhase.isotropic(rho=1.0, lame_lambda=1.0, mu=1.0)
    with pytest.raises(InvalidCellError):
        rotate45(UnitCell(periods=(1.0, 1.0, 1.0), background=elastic), 4)
    with pytest.raises(InvalidCellError):
        rotate45(UnitCell(periods=(1.0, 1.0), background=EPOXY), 0)
