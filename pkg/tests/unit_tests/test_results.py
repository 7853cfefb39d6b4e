"""Unit tests for result models and CSV rows."""

import io
import math

import pytest

from monodromy_speed.api.exceptions import NegativeSpeedSquaredError
from monodromy_speed.api.results import (
    ComputeRow,
    ConvergenceRow,
    EffectiveTensor,
    ElasticSpeeds,
    Method,
    SweepRow,
    write_rows,
)


def tensor(m11: float, m22: float, m12: float | None = 0.0) -> EffectiveTensor:
    return EffectiveTensor(
        method=Method.MM, m11=m11, m22=m22, m12=m12, rho_mean=2.0, mu_mean=10.0, mu_harmonic=4.0, truncation=3, d=7
    )


def test_speeds_along_axes():
    """Test c(κ) = √((⟨μ⟩ − M(κ))/⟨ρ⟩) along both lattice vectors and the diagonal."""
    result = tensor(2.0, 4.0, 1.0)
    assert result.c_kappa1 == pytest.approx(2.0)
    assert result.c_kappa2 == pytest.approx(math.sqrt(3.0))
    assert result.speed_squared((1.0, 1.0)) == pytest.approx((10.0 - 4.0) / 2.0)
    assert result.speed((3.0, 0.0)) == pytest.approx(2.0)


def test_bounds():
    """Test the Reuss and Voigt speeds and the bound check."""
    result = tensor(2.0, 4.0)
    assert result.reuss_speed == pytest.approx(math.sqrt(2.0))
    assert result.voigt_speed == pytest.approx(math.sqrt(5.0))
    assert result.within_bounds()
    assert not tensor(7.0, 1.0).within_bounds()
    assert not tensor(-1.0, 1.0).within_bounds()


def test_principal_axes():
    """Test the fast axis follows the smaller M(κ)."""
    (fast, slow), angle = tensor(3.0, 3.0, -1.0).principal_axes()
    assert fast == pytest.approx(math.sqrt(4.0))
    assert slow == pytest.approx(math.sqrt(3.0))
    assert angle == pytest.approx(math.pi / 4.0)
    (_, _), angle = tensor(1.0, 3.0, 0.0).principal_axes()
    assert angle == pytest.approx(0.0)


def test_missing_m12_counts_as_zero():
    """Test a tensor without M12 is treated as diagonal."""
    result = tensor(2.0, 2.0, None)
    assert result.matrix[0, 1] == 0.0
    assert result.speed((1.0, 1.0)) == pytest.approx(2.0)


def test_negative_speed_squared():
    """Test a non-positive μ_eff raises with the truncation."""
    result = tensor(12.0, 2.0)
    assert not result.is_elliptic
    with pytest.raises(NegativeSpeedSquaredError, match="truncation=3"):
        _ = result.c_kappa1


def test_invalid_direction():
    """Test zero and wrongly sized directions are rejected."""
    with pytest.raises(ValueError, match="non-zero 2-vector"):
        tensor(1.0, 1.0).speed((0.0, 0.0))
    with pytest.raises(ValueError, match="non-zero 2-vector"):
        tensor(1.0, 1.0).speed((1.0, 0.0, 0.0))


def test_elastic_speeds_bounds():
    """Test the 3D bound check uses the extreme phase stiffness eigenvalues."""
    speeds = ElasticSpeeds(
        axis=1,
        speeds=(3.0, 2.0, 1.0),
        eigenvalues=(9.0, 4.0, 1.0),
        rho_mean=1.0,
        stiffness_bounds=(1.0, 9.0),
        truncation=(1, 1),
        matrix_dim=54,
    )
    assert speeds.within_bounds()
    assert speeds.method is Method.ELASTIC3D
    assert not speeds.model_copy(update={"stiffness_bounds": (2.0, 9.0)}).within_bounds()


def test_row_headers():
    """Test the CSV headers follow the field order."""
    assert ComputeRow.header()[:4] == ["method", "truncation", "d", "m11"]
    assert ComputeRow.header()[-2:] == ["relative_gap", "error"]
    assert SweepRow.header() == ["f", "method", "d", "c", "c_reuss", "c_voigt", "note", "error"]
    assert ConvergenceRow.header() == [
        "kind",
        "method",
        "d",
        "relative_error",
        "wall_time_ms",
        "matrix_dim",
        "decay_per_d",
        "decay_loglog",
    ]


def test_write_rows():
    """Test rows are written with empty cells for missing values and repr floats."""
    stream = io.StringIO()
    rows = [SweepRow(f=0.1, method="mm", d=17, c=1234.5), SweepRow(f=0.2, method="mm", error="boom")]
    write_rows(rows, SweepRow, stream)
    lines = stream.getvalue().splitlines()
    assert lines == [
        "f,method,d,c,c_reuss,c_voigt,note,error",
        "0.1,mm,17,1234.5,,,,",
        "0.2,mm,,,,,,boom",
    ]
