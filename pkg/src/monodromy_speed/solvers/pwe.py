"""
This module contains the plane-wave expansion baseline: a Galerkin solve of the cell
problem over the plane waves |g₁|, |g₂| ≤ G with g ≠ 0.
"""

import logging

import numpy as np
import numpy.typing as npt
import scipy.linalg

from monodromy_speed.api.exceptions import SingularSystemError, TruncationError
from monodromy_speed.api.results import EffectiveTensor, Method
from monodromy_speed.api.unit_cell import UnitCell
from monodromy_speed.cell.averages import cell_averages
from monodromy_speed.cell.slabs import cell_coefficients, scalar_modulus, slab_partition

logger = logging.getLogger(__name__)


def plane_wave_indices(truncation: int) -> npt.NDArray[np.int64]:
    """Index pairs (g₁, g₂) with |gᵢ| ≤ G, g ≠ 0, in row-major order; shape ((2G+1)² − 1, 2)."""
    axis = np.arange(-truncation, truncation + 1)
    g1, g2 = np.meshgrid(axis, axis, indexing="ij")
    pairs = np.stack((g1.ravel(), g2.ravel()), axis=1)
    return pairs[np.any(pairs != 0, axis=1)]


def pwe_effective_tensor(cell: UnitCell, truncation: int) -> EffectiveTensor:
    """Full 2×2 tensor M_ij by plane-wave expansion at truncation G.

    With C₀[g, g′] = 4π²(g₁g₁′/T₁² + g₂g₂′/T₂²)μ̂_{g−g′} and bᵢ[g] = 2πi gᵢ/Tᵢ μ̂_g, the
    coefficients are M_ij = Re Σ_g (C₀⁻¹bᵢ)[g]·conj(bⱼ[g]). The Galerkin space is a subset
    of the monodromy space at N = G, so the speeds are never below the monodromy ones.

    Raises:
        TruncationError: If G < 1.
        SingularSystemError: If C₀ is numerically singular.
    """
    if truncation < 1:
        raise TruncationError("G", truncation, minimum=1)
    averages = cell_averages(cell)
    mu_mean, mu_harmonic = averages.moduli
    t1, t2 = cell.periods
    mu_hat = cell_coefficients(slab_partition(cell), (2 * truncation, 2 * truncation), scalar_modulus)
    offset = 2 * truncation

    g = plane_wave_indices(truncation)
    wave = 2.0 * np.pi * g / np.array([t1, t2])
    difference = g[:, None, :] - g[None, :, :] + offset
    operator = (wave @ wave.T) * mu_hat[difference[..., 0], difference[..., 1]]
    rhs = 1j * wave * mu_hat[g[:, 0] + offset, g[:, 1] + offset][:, None]

    try:
        solution = scipy.linalg.solve(operator, rhs, assume_a="her")
    except (scipy.linalg.LinAlgError, ValueError) as e:
        raise SingularSystemError(pivot=0.0, size=operator.shape[0]) from e
    m = (solution.T @ rhs.conj()).real
    m = 0.5 * (m + m.T)
    d = 2 * truncation + 1
    logger.debug(f"PWE tensor at G={truncation} with {operator.shape[0]} plane waves")
    return EffectiveTensor(
        method=Method.PWE,
        m11=float(m[0, 0]),
        m22=float(m[1, 1]),
        m12=float(m[0, 1]),
        rho_mean=averages.rho_mean,
        mu_mean=mu_mean,
        mu_harmonic=mu_harmonic,
        truncation=truncation,
        d=d,
        matrix_dim=d * d - 1,
    )


__all__ = ["plane_wave_indices", "pwe_effective_tensor"]
