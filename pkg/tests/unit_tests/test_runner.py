"""Unit tests for the speed runner."""

import math
from unittest.mock import patch

import pytest

from monodromy_speed.api.exceptions import MethodFailedError, NonMonotoneRefinementError
from monodromy_speed.api.results import Method
from monodromy_speed.api.unit_cell import UnitCell
from monodromy_speed.config import SolverConfig
from monodromy_speed.integrations.presets import EPOXY, STEEL, square_rod_cell
from monodromy_speed.runner import Evaluation, SpeedRunner, Truncations, compute_row, evaluate, fit_decay

HOMOGENEOUS = UnitCell(periods=(1.0, 1.0), background=STEEL)


def small_runner(**truncations) -> SpeedRunner:
    return SpeedRunner(truncations=Truncations(**truncations), workers=2)


def test_truncations_for_method():
    """Test each method family reads its own truncation list."""
    truncations = Truncations(n_values=(1, 2), g_values=(3,), grids=(64, 128), transverse=(1, 2))
    assert truncations.for_method(Method.MM) == (1, 2)
    assert truncations.for_method(Method.PWE) == (3,)
    assert truncations.for_method(Method.ORACLE) == (64, 128)
    assert truncations.for_method(Method.ELASTIC3D) == (1,)
    assert truncations.for_method(Method.ESTIMATE) == (0,)


def test_evaluate_wraps_solver_errors():
    """Test solver errors come back as MethodFailedError tagged with the method."""
    with pytest.raises(MethodFailedError, match="Method 'pwe' failed: Invalid truncation: G=0"):
        evaluate(HOMOGENEOUS, Method.PWE, 0, Truncations(), SolverConfig())


def test_failed_evaluation_has_no_speed():
    """Test asking a failed evaluation for its speed raises."""
    evaluation = Evaluation(method=Method.MM, truncation=1, error="boom", wall_time_ms=1.0)
    assert evaluation.d == 3
    with pytest.raises(MethodFailedError, match="boom"):
        _ = evaluation.speed
    row = compute_row(evaluation)
    assert row.error == "boom"
    assert row.c_kappa1 is None


def test_fit_decay():
    """Test the log-linear and log-log decay exponents."""
    per_d, loglog = fit_decay([(3, 1e-2), (5, 1e-4)])
    assert per_d == pytest.approx(math.log(100.0) / 2.0)
    assert loglog == pytest.approx(math.log(100.0) / math.log(5.0 / 3.0))
    assert fit_decay([(3, 1e-2), (5, 0.0)]) == (None, None)
    assert fit_decay([]) == (None, None)


@pytest.mark.asyncio
async def test_compute_rows_in_request_order():
    """Test compute returns one row per method and truncation."""
    async with small_runner(n_values=(1, 2), g_values=(2,)) as runner:
        rows = await runner.compute(HOMOGENEOUS, [Method.MM, Method.PWE, Method.ESTIMATE])
    assert [(row.method, row.truncation) for row in rows] == [("mm", 1), ("mm", 2), ("pwe", 2), ("estimate", 0)]
    assert [row.d for row in rows] == [3, 5, 5, None]
    for row in rows:
        assert row.error is None
        assert row.c_kappa1 == pytest.approx(STEEL.speed, rel=1e-8)
        assert row.wall_time_ms is not None
        assert row.wall_time_ms >= 0.0


@pytest.mark.asyncio
async def test_compute_reports_failures_as_rows():
    """Test a failing method yields an error row without stopping the others."""
    async with small_runner(n_values=(1,), g_values=(0,)) as runner:
        rows = await runner.compute(HOMOGENEOUS, [Method.MM, Method.PWE])
    assert rows[0].error is None
    assert rows[1].error is not None
    assert "G=0" in rows[1].error
    assert rows[1].c_kappa1 is None


@pytest.mark.asyncio
async def test_compare_uses_first_success_as_reference():
    """Test the relative gap is measured against the first successful method."""
    cell, _ = square_rod_cell(EPOXY, STEEL, 0.5)
    async with small_runner(n_values=(3,), g_values=(3,)) as runner:
        rows = await runner.compare(cell, [Method.MM, Method.PWE, Method.ESTIMATE])
    assert rows[0].relative_gap == 0.0
    assert rows[1].relative_gap is not None
    assert rows[1].relative_gap > 0.0
    assert rows[2].relative_gap is not None


@pytest.mark.asyncio
async def test_sweep_endpoints_and_order():
    """Test f = 0 and f = 1 give the pure phases and rows are sorted by (f, method, d)."""
    async with small_runner(n_values=(2, 1)) as runner:
        rows = await runner.sweep(EPOXY, STEEL, [1.0, 0.0], [Method.MM, Method.ESTIMATE, Method.ELASTIC3D])
    assert [(row.f, row.method, row.d) for row in rows] == [
        (0.0, "estimate", None),
        (0.0, "mm", 3),
        (0.0, "mm", 5),
        (1.0, "estimate", None),
        (1.0, "mm", 3),
        (1.0, "mm", 5),
    ]
    for row in rows:
        expected = EPOXY.speed if row.f == 0.0 else STEEL.speed
        assert row.c == pytest.approx(expected, rel=1e-8)
        assert row.note is None


@pytest.mark.asyncio
async def test_sweep_notes_clamped_rods():
    """Test a rod within rounding of the cell edge is clamped and noted."""
    async with small_runner(n_values=(1,)) as runner:
        rows = await runner.sweep(EPOXY, STEEL, [1.0 - 1e-15], [Method.MM])
    assert rows[0].note is not None
    assert rows[0].c == pytest.approx(STEEL.speed, rel=1e-8)


@pytest.mark.asyncio
async def test_convergence_rows():
    """Test point rows are sorted by d per method and followed by one fit row per method."""
    cell, _ = square_rod_cell(EPOXY, STEEL, 0.25)
    async with small_runner(n_values=(2, 1), g_values=(2, 3)) as runner:
        rows = await runner.convergence(cell, [Method.MM, Method.PWE, Method.ESTIMATE])
    points = [row for row in rows if row.kind == "point"]
    fits = [row for row in rows if row.kind == "fit"]
    assert [(row.method, row.d, row.matrix_dim) for row in points] == [
        ("mm", 3, 6),
        ("mm", 5, 10),
        ("pwe", 5, 24),
        ("pwe", 7, 48),
    ]
    assert [row.method for row in fits] == ["mm", "pwe"]
    assert rows[-2:] == fits
    for row in points:
        assert row.relative_error is not None
        assert math.isfinite(row.relative_error)
        assert row.relative_error >= 0.0


@pytest.mark.asyncio
async def test_convergence_reference_failure():
    """Test a failing reference raises MethodFailedError."""
    async with small_runner(n_values=(1,), grids=(8,)) as runner:
        with pytest.raises(MethodFailedError):
            await runner.convergence(HOMOGENEOUS, [Method.MM, Method.ORACLE])


@pytest.mark.asyncio
async def test_convergence_rejects_a_non_monotone_oracle():
    """Test an oracle reference that swings between grids fails instead of being extrapolated."""
    swing = NonMonotoneRefinementError((64, 128, 256), (1772.0, 1673.6, 1721.3))
    with patch("monodromy_speed.runner.richardson_speed", side_effect=swing):
        async with small_runner(n_values=(1,), grids=(64, 128, 256)) as runner:
            with pytest.raises(MethodFailedError, match="Method 'reference' failed: Grid refinement is not monotone"):
                await runner.convergence(HOMOGENEOUS, [Method.MM, Method.ORACLE])
