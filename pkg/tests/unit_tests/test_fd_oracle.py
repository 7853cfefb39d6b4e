"""Unit tests for the finite-difference reference solver."""

from unittest.mock import MagicMock, patch

import numpy as np
import pytest

from monodromy_speed.api.exceptions import (
    InvalidCellError,
    NonMonotoneRefinementError,
    OracleConvergenceError,
    TruncationError,
)
from monodromy_speed.api.materials import ElasticPhase
from monodromy_speed.api.results import Method
from monodromy_speed.api.unit_cell import UnitCell
from monodromy_speed.cell.averages import cell_averages
from monodromy_speed.config import SolverConfig
from monodromy_speed.integrations.presets import EPOXY, STEEL, laminate_cell, square_rod_cell
from monodromy_speed.solvers.fd_oracle import GridField, oracle_effective_tensor, richardson_speed


def test_homogeneous_cell():
    """Test a homogeneous cell gives the pure-phase speed."""
    tensor = oracle_effective_tensor(UnitCell(periods=(1.0, 1.0), background=EPOXY), 64)
    assert tensor.method is Method.ORACLE
    assert tensor.matrix_dim == 64 * 64
    assert tensor.c_kappa1 == pytest.approx(EPOXY.speed, rel=1e-12)
    assert tensor.c_kappa2 == pytest.approx(EPOXY.speed, rel=1e-12)


def test_grid_aligned_laminate_is_exact():
    """Test harmonic face moduli reproduce both laminate limits on an aligned grid."""
    cell = laminate_cell(EPOXY, STEEL, 0.25)
    mu_mean, mu_harmonic = cell_averages(cell).moduli
    tensor = oracle_effective_tensor(cell, 64)
    assert tensor.mu_eff((1.0, 0.0)) == pytest.approx(mu_harmonic, rel=1e-6)
    assert tensor.mu_eff((0.0, 1.0)) == pytest.approx(mu_mean, rel=1e-9)
    assert abs(tensor.m12) <= 1e-6 * mu_mean


def test_off_grid_laminate_is_exact():
    """Test a layer interface between grid lines still gives both laminate limits."""
    cell = laminate_cell(EPOXY, STEEL, 0.3)
    mu_mean, mu_harmonic = cell_averages(cell).moduli
    tensor = oracle_effective_tensor(cell, 64)
    assert tensor.mu_eff((1.0, 0.0)) == pytest.approx(mu_harmonic, rel=1e-6)
    assert tensor.mu_eff((0.0, 1.0)) == pytest.approx(mu_mean, rel=1e-9)


def test_operator_is_symmetric():
    """Test ⟨Ax, y⟩ = ⟨x, Ay⟩ and that constants lie in the kernel."""
    cell, _ = square_rod_cell(EPOXY, STEEL, 0.4)
    grid = GridField.sample(cell, 64)
    rng = np.random.default_rng(7)
    x, y = rng.standard_normal((2, 64 * 64))
    assert grid.apply(x) @ y == pytest.approx(x @ grid.apply(y), rel=1e-10)
    np.testing.assert_allclose(grid.apply(np.ones(64 * 64)), 0.0, atol=1e-6)
    assert grid.apply(x) @ x > 0.0


def test_faces_are_harmonic_means():
    """Test face moduli between different phases are harmonic means."""
    grid = GridField.sample(laminate_cell(EPOXY, STEEL, 0.25), 64)
    expected = 2.0 * EPOXY.mu * STEEL.mu / (EPOXY.mu + STEEL.mu)
    assert grid.mu_faces[0][47, 0] == pytest.approx(expected, rel=1e-12)
    assert grid.mu_faces[0][63, 0] == pytest.approx(expected, rel=1e-12)
    assert grid.mu_faces[1][47, 0] == pytest.approx(EPOXY.mu, rel=1e-12)


def test_rod_within_bounds():
    """Test the oracle tensor of a rod is isotropic and bounded."""
    cell, _ = square_rod_cell(EPOXY, STEEL, 0.25)
    tensor = oracle_effective_tensor(cell, 64)
    assert tensor.within_bounds()
    assert tensor.m11 == pytest.approx(tensor.m22, rel=1e-6)


def test_convergence_failure():
    """Test an unreachable tolerance reports the residual and iteration count."""
    cell, _ = square_rod_cell(EPOXY, STEEL, 0.5)
    config = SolverConfig(cg_rtol=1e-14, cg_max_iter_factor=1)
    with pytest.raises(OracleConvergenceError) as e:
        oracle_effective_tensor(cell, 64, config)
    assert 0 < e.value.iterations <= 64


def test_invalid_arguments():
    """Test small grids, grids that are not powers of two and 3D cells are rejected."""
    cell, _ = square_rod_cell(EPOXY, STEEL, 0.5)
    with pytest.raises(TruncationError, match="n=32"):
        oracle_effective_tensor(cell, 32)
    with pytest.raises(TruncationError, match=r"n=96 \(must be a power of two\)"):
        oracle_effective_tensor(cell, 96)
    elastic = ElasticPhase.isotropic(rho=1.0, lame_lambda=1.0, mu=1.0)
    with pytest.raises(InvalidCellError):
        oracle_effective_tensor(UnitCell(periods=(1.0, 1.0, 1.0), background=elastic), 64)


def test_richardson_on_homogeneous_cell():
    """Test extrapolation of equal speeds returns that speed at first order."""
    result = richardson_speed(UnitCell(periods=(1.0, 1.0), background=STEEL), (64, 128))
    assert result.speed == pytest.approx(STEEL.speed, rel=1e-12)
    assert result.order == 1.0
    assert result.grids == (64, 128)
    assert len(result.speeds) == 2


def test_richardson_rejects_bad_grids():
    """Test fewer than two or non-increasing grids are rejected."""
    cell = UnitCell(periods=(1.0, 1.0), background=STEEL)
    with pytest.raises(ValueError, match="increasing"):
        richardson_speed(cell, (64,))
    with pytest.raises(ValueError, match="increasing"):
        richardson_speed(cell, (128, 64))


def grid_speeds(speeds: dict[int, float]):
    """Stand-in for the oracle returning a fixed speed per grid size."""

    def tensor(cell, n, config=None):
        result = MagicMock()
        result.speed.return_value = speeds[n]
        return result

    return tensor


def test_richardson_measures_the_order():
    """Test second-order convergence is detected and extrapolated away."""
    speeds = {n: 100.0 + 6400.0 / n**2 for n in (64, 128, 256)}
    cell = UnitCell(periods=(1.0, 1.0), background=STEEL)
    with patch("monodromy_speed.solvers.fd_oracle.oracle_effective_tensor", side_effect=grid_speeds(speeds)):
        result = richardson_speed(cell, (64, 128, 256))
    assert result.observed
    assert result.order == pytest.approx(2.0, rel=1e-12)
    assert result.speed == pytest.approx(100.0, rel=1e-12)


def test_richardson_rejects_non_monotone_grids():
    """Test speeds that swing between grids raise instead of being extrapolated."""
    speeds = {64: 1772.0, 128: 1673.6, 256: 1721.3}
    cell = UnitCell(periods=(1.0, 1.0), background=STEEL)
    with (
        patch("monodromy_speed.solvers.fd_oracle.oracle_effective_tensor", side_effect=grid_speeds(speeds)),
        pytest.raises(NonMonotoneRefinementError) as e,
    ):
        richardson_speed(cell, (64, 128, 256))
    assert e.value.speeds == (1772.0, 1673.6, 1721.3)


def test_richardson_falls_back_to_first_order():
    """Test an implausible observed order is replaced by first order."""
    speeds = {64: 110.0, 128: 100.001, 256: 100.0}
    cell = UnitCell(periods=(1.0, 1.0), background=STEEL)
    with patch("monodromy_speed.solvers.fd_oracle.oracle_effective_tensor", side_effect=grid_speeds(speeds)):
        result = richardson_speed(cell, (64, 128, 256))
    assert not result.observed
    assert result.order == 1.0
    assert result.speed == pytest.approx(99.999, rel=1e-12)
