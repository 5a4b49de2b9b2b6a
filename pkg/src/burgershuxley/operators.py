"""Drift operators for the Burgers-Huxley equation in the sine basis.

The abstract drift is F(u) = nu*A u + alpha*B(u) - beta*c(u) with

    A u  = -u_xx           (diagonal: lambda_k = k^2 pi^2),
    B(u) = u * u_x         (advection),
    c(u) = u(1-u)(u-gamma) (bistable reaction),

and the evolution equation reads du = -F(u) dt + noise.

Nonlinear terms are evaluated pseudo-spectrally but projected exactly:
u*u_x = (u^2)'/2 and the u^2 part of the cubic are handled through the
cosine expansion of u^2 (recovered by a type-I DCT, exact for the
bandwidth the grid resolves), while the pure-odd u^3 term is projected by
discrete sine quadrature, which is exact for odd-power products.  This
keeps identities such as (B(u), u) = 0 true to roundoff, which the
inequality checks below rely on.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Sequence

import numpy as np

from .params import ModelParams
from .spectral import (
    SpectralField,
    coeffs_to_grid,
    eigenvalues,
    interior_grid,
    norm_grid_size,
)


def _next_pow2(n: int) -> int:
    m = 1
    while m < n:
        m *= 2
    return m


def dealias_grid_size(n_modes: int) -> int:
    """Default evaluation grid: resolves cubic products without aliasing."""
    return _next_pow2(max(2 * n_modes, 8))


@lru_cache(maxsize=32)
def _tables(n_modes: int, grid_size: int):
    """Cached transform matrices for a given truncation / grid pair."""
    x = interior_grid(grid_size)
    k = np.arange(1, n_modes + 1)
    sin_mat = np.sin(np.pi * np.outer(x, k))  # (M, N)
    # Coupling <cos(m pi x), e_k> = sqrt(2) * 2k / (pi (k^2 - m^2)) for k+m odd.
    m = np.arange(0, grid_size + 2)
    kk = k[np.newaxis, :].astype(float)
    mm = m[:, np.newaxis].astype(float)
    with np.errstate(divide="ignore", invalid="ignore"):
        coupling = np.sqrt(2.0) * 2.0 * kk / (np.pi * (kk ** 2 - mm ** 2))
    coupling[(m[:, None] + k[None, :]) % 2 == 0] = 0.0
    # Cosine analysis on the interior grid (boundary samples of u^2 vanish):
    # d = vals^2 @ cos_mat recovers the plain cosine coefficients d_0..d_{M+1}.
    cos_mat = 2.0 * np.cos(np.pi * np.outer(x, m)) / (grid_size + 1)
    cos_mat[:, 0] *= 0.5
    cos_mat[:, -1] *= 0.5
    return sin_mat, coupling, cos_mat


def advection_coeffs(coeffs: np.ndarray, grid_size: int | None = None) -> np.ndarray:
    """Sine coefficients of B(u) = u*u_x, batched over leading axes.

    Uses u*u_x = (u^2)'/2: differentiating the cosine series of u^2 lands
    directly on the sine basis, so the projection is exact.
    """
    coeffs = np.asarray(coeffs, dtype=float)
    n_modes = coeffs.shape[-1]
    m = grid_size if grid_size is not None else dealias_grid_size(n_modes)
    sin_mat, _, cos_mat = _tables(n_modes, m)
    vals = np.sqrt(2.0) * coeffs @ sin_mat.T
    d = (vals ** 2) @ cos_mat
    k = np.arange(1, n_modes + 1)
    return -(np.sqrt(2.0) / 4.0) * np.pi * k * d[..., 1 : n_modes + 1]


def reaction_coeffs(
    coeffs: np.ndarray, gamma: float, grid_size: int | None = None
) -> np.ndarray:
    """Sine coefficients of c(u) = u(1-u)(u-gamma) = -gamma*u + (1+gamma)*u^2 - u^3."""
    coeffs = np.asarray(coeffs, dtype=float)
    n_modes = coeffs.shape[-1]
    m = grid_size if grid_size is not None else dealias_grid_size(n_modes)
    sin_mat, coupling, cos_mat = _tables(n_modes, m)
    vals = np.sqrt(2.0) * coeffs @ sin_mat.T
    d = (vals ** 2) @ cos_mat
    quad = d @ coupling
    cubic = (np.sqrt(2.0) / (m + 1)) * (vals ** 3) @ sin_mat
    return -gamma * coeffs + (1.0 + gamma) * quad - cubic


def nonlinear_drift_coeffs(
    coeffs: np.ndarray,
    alpha: float,
    beta: float,
    gamma: float,
    grid_size: int | None = None,
) -> np.ndarray:
    """-alpha*B(u) + beta*c(u) from a single grid evaluation (solver hot path)."""
    coeffs = np.asarray(coeffs, dtype=float)
    n_modes = coeffs.shape[-1]
    m = grid_size if grid_size is not None else dealias_grid_size(n_modes)
    sin_mat, coupling, cos_mat = _tables(n_modes, m)
    vals = np.sqrt(2.0) * coeffs @ sin_mat.T
    d = (vals ** 2) @ cos_mat
    out = np.zeros_like(coeffs)
    if alpha != 0.0:
        k = np.arange(1, n_modes + 1)
        out += alpha * (np.sqrt(2.0) / 4.0) * np.pi * k * d[..., 1 : n_modes + 1]
    if beta != 0.0:
        cubic = (np.sqrt(2.0) / (m + 1)) * (vals ** 3) @ sin_mat
        out += beta * (-gamma * coeffs + (1.0 + gamma) * (d @ coupling) - cubic)
    return out


def laplacian_coeffs(coeffs: np.ndarray) -> np.ndarray:
    """A u in coefficients: multiplication by lambda_k."""
    coeffs = np.asarray(coeffs, dtype=float)
    return eigenvalues(coeffs.shape[-1]) * coeffs


def drift_coeffs(
    coeffs: np.ndarray, p: ModelParams, grid_size: int | None = None
) -> np.ndarray:
    """-F(u) = -nu*A u - alpha*B(u) + beta*c(u): the full drift of the evolution."""
    out = -p.nu * laplacian_coeffs(coeffs)
    if p.alpha != 0.0:
        out = out - p.alpha * advection_coeffs(coeffs, grid_size)
    if p.beta != 0.0:
        out = out + p.beta * reaction_coeffs(coeffs, p.gamma, grid_size)
    return out


def apply_A(u: SpectralField) -> SpectralField:
    return SpectralField(laplacian_coeffs(u.coeffs))


def apply_B(u: SpectralField, grid_size: int | None = None) -> SpectralField:
    return SpectralField(advection_coeffs(u.coeffs, grid_size))


def apply_c(u: SpectralField, gamma: float, grid_size: int | None = None) -> SpectralField:
    return SpectralField(reaction_coeffs(u.coeffs, gamma, grid_size))


@dataclass(frozen=True)
class DriftEvaluation:
    """All parts of F(u): a_part = A u, b_part = B(u), c_part = c(u)."""

    a_part: SpectralField
    b_part: SpectralField
    c_part: SpectralField
    f_total: SpectralField


def apply_F(u: SpectralField, p: ModelParams, grid_size: int | None = None) -> DriftEvaluation:
    a = laplacian_coeffs(u.coeffs)
    b = advection_coeffs(u.coeffs, grid_size)
    c = reaction_coeffs(u.coeffs, p.gamma, grid_size)
    total = p.nu * a + p.alpha * b - p.beta * c
    return DriftEvaluation(
        a_part=SpectralField(a),
        b_part=SpectralField(b),
        c_part=SpectralField(c),
        f_total=SpectralField(total),
    )


def _f_coeffs(coeffs: np.ndarray, p: ModelParams, grid_size: int | None = None) -> np.ndarray:
    out = p.nu * laplacian_coeffs(coeffs)
    if p.alpha != 0.0:
        out = out + p.alpha * advection_coeffs(coeffs, grid_size)
    if p.beta != 0.0:
        out = out - p.beta * reaction_coeffs(coeffs, p.gamma, grid_size)
    return out


def sup_norm(u: SpectralField) -> float:
    vals = coeffs_to_grid(u.coeffs, norm_grid_size(u.n_modes))
    return float(np.max(np.abs(vals)))


def monotonicity_gap(u: SpectralField, v: SpectralField, p: ModelParams) -> dict:
    """One-sided Lipschitz check for F on an L-inf ball of radius r = sup|v|.

    Returns lhs = <F(u)-F(v), u-v> + shift(r)*||u-v||^2, rhs = (nu/2)*|u-v|_H1^2
    and gap = lhs - rhs, which is nonnegative up to roundoff.
    """
    if u.n_modes != v.n_modes:
        raise ValueError("fields must share a truncation")
    w = u.coeffs - v.coeffs
    df = _f_coeffs(u.coeffs, p) - _f_coeffs(v.coeffs, p)
    r = sup_norm(v)
    lhs = float(df @ w) + p.monotonicity_shift(r) * float(w @ w)
    rhs = 0.5 * p.nu * float(np.sum(eigenvalues(u.n_modes) * w ** 2))
    return {"lhs": lhs, "rhs": rhs, "gap": lhs - rhs, "radius": r}


def hemicontinuity_probe(
    u: SpectralField,
    w: SpectralField,
    y: SpectralField,
    p: ModelParams,
    lambdas: Sequence[float],
) -> np.ndarray:
    """<F(u + lam*y) - F(u), w> along a decreasing sequence of lambdas."""
    lams = np.asarray(lambdas, dtype=float)
    if np.any(lams <= 0) or np.any(np.diff(lams) >= 0):
        raise ValueError("lambdas must be positive and strictly decreasing")
    base = _f_coeffs(u.coeffs, p)
    out = np.empty(lams.size)
    for i, lam in enumerate(lams):
        out[i] = float((_f_coeffs(u.coeffs + lam * y.coeffs, p) - base) @ w.coeffs)
    return out
