"""Sine-basis representation of fields on (0,1) with Dirichlet boundaries.

Fields are expanded against the L2-orthonormal basis

    e_k(x) = sqrt(2) * sin(k*pi*x),   k = 1, 2, ...,

which are eigenfunctions of the (negative) Dirichlet Laplacian with
eigenvalues lambda_k = k^2 pi^2.  Transforms between coefficient space and
equispaced interior grids use the type-I discrete sine transform, which is
exact for sine polynomials that the grid resolves.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Mapping

import numpy as np
from scipy.fft import dst

PI2 = np.pi ** 2


class ResolutionError(ValueError):
    """Grid too coarse to represent the requested spectral content."""


def eigenvalue(k: int) -> float:
    """Eigenvalue k^2 pi^2 of the Dirichlet Laplacian for mode k >= 1."""
    if k < 1:
        raise ValueError(f"mode index must be >= 1, got {k}")
    return (k * np.pi) ** 2


def eigenvalues(n_modes: int) -> np.ndarray:
    """Vector (lambda_1, ..., lambda_N)."""
    if n_modes < 1:
        raise ValueError(f"n_modes must be >= 1, got {n_modes}")
    k = np.arange(1, n_modes + 1, dtype=float)
    return (k * np.pi) ** 2


def interior_grid(grid_size: int) -> np.ndarray:
    """Interior points x_j = j/(M+1), j = 1..M."""
    return np.arange(1, grid_size + 1, dtype=float) / (grid_size + 1)


def coeffs_to_grid(coeffs: np.ndarray, grid_size: int) -> np.ndarray:
    """Evaluate sine expansions on the interior grid (batched over leading axes)."""
    coeffs = np.asarray(coeffs, dtype=float)
    n_modes = coeffs.shape[-1]
    if grid_size < n_modes:
        raise ResolutionError(
            f"grid_size {grid_size} cannot resolve {n_modes} sine modes"
        )
    pad = np.zeros(coeffs.shape[:-1] + (grid_size,))
    pad[..., :n_modes] = coeffs
    # dst-I: y_j = 2 sum_k a_k sin(pi j k/(M+1)); basis carries sqrt(2).
    return 0.5 * np.sqrt(2.0) * dst(pad, type=1, axis=-1)


def grid_to_coeffs(values: np.ndarray, n_modes: int) -> np.ndarray:
    """Project grid samples onto the first n_modes sine coefficients.

    Exact whenever the samples come from a sine polynomial of bandwidth
    <= grid size; aliasing otherwise folds high modes back with sign flips.
    """
    values = np.asarray(values, dtype=float)
    grid_size = values.shape[-1]
    if n_modes > grid_size:
        raise ResolutionError(
            f"cannot extract {n_modes} modes from a {grid_size}-point grid"
        )
    full = dst(values, type=1, axis=-1) * (np.sqrt(2.0) / (2.0 * (grid_size + 1)))
    return full[..., :n_modes]


def norm_grid_size(n_modes: int) -> int:
    """Grid used for L4/L-inf evaluation: max(4N, 256) avoids quartic aliasing."""
    return max(4 * n_modes, 256)


@dataclass(frozen=True)
class SpectralField:
    """Immutable coefficient vector against the orthonormal sine basis."""

    coeffs: np.ndarray

    def __post_init__(self):
        arr = np.atleast_1d(np.asarray(self.coeffs, dtype=float)).copy()
        if arr.ndim != 1 or arr.size < 1:
            raise ValueError("coeffs must be a nonempty 1-d sequence")
        if not np.all(np.isfinite(arr)):
            raise ValueError("coefficients must be finite")
        arr.setflags(write=False)
        object.__setattr__(self, "coeffs", arr)

    @property
    def n_modes(self) -> int:
        return self.coeffs.size

    @classmethod
    def zeros(cls, n_modes: int) -> "SpectralField":
        return cls(np.zeros(n_modes))

    @classmethod
    def basis(cls, k: int, n_modes: int) -> "SpectralField":
        """The k-th basis field e_k, embedded in n_modes modes."""
        if not (1 <= k <= n_modes):
            raise ValueError(f"basis index {k} out of range 1..{n_modes}")
        c = np.zeros(n_modes)
        c[k - 1] = 1.0
        return cls(c)

    @classmethod
    def from_function(cls, f, n_modes: int, grid_size: int | None = None) -> "SpectralField":
        """Sample a closed-form profile on a fine grid and project to n_modes."""
        m = grid_size if grid_size is not None else max(4 * n_modes, 256)
        x = interior_grid(m)
        return cls(grid_to_coeffs(np.asarray(f(x), dtype=float), n_modes))

    def l2(self) -> float:
        return float(np.sqrt(np.sum(self.coeffs ** 2)))

    def h1(self) -> float:
        return float(np.sqrt(np.sum(eigenvalues(self.n_modes) * self.coeffs ** 2)))


@dataclass(frozen=True)
class PhysicalField:
    """Samples at interior grid points x_j = j/(M+1); boundary values are 0."""

    values: np.ndarray

    def __post_init__(self):
        arr = np.atleast_1d(np.asarray(self.values, dtype=float)).copy()
        if not np.all(np.isfinite(arr)):
            raise ValueError("grid values must be finite")
        arr.setflags(write=False)
        object.__setattr__(self, "values", arr)

    @property
    def grid_size(self) -> int:
        return self.values.size

    @property
    def grid(self) -> np.ndarray:
        return interior_grid(self.grid_size)


def to_physical(u: SpectralField, grid_size: int) -> PhysicalField:
    """Evaluate the sine expansion of ``u`` at ``grid_size`` interior points."""
    return PhysicalField(coeffs_to_grid(u.coeffs, grid_size))


def to_spectral(phys: PhysicalField, n_modes: int | None = None) -> SpectralField:
    """Recover sine coefficients from grid samples."""
    n = n_modes if n_modes is not None else phys.grid_size
    return SpectralField(grid_to_coeffs(phys.values, n))


def inner_product(u: SpectralField, v: SpectralField) -> float:
    """L2 inner product; the shorter coefficient vector is zero-padded."""
    n = min(u.n_modes, v.n_modes)
    return float(np.dot(u.coeffs[:n], v.coeffs[:n]))


def _l4_from_grid(values: np.ndarray) -> float:
    # Trapezoid quadrature of |u|^4 with implied zero boundary values.
    m = values.shape[-1]
    return float(np.sum(values ** 4) / (m + 1)) ** 0.25


def norms(u: SpectralField) -> Mapping[str, float]:
    """All norms the estimates use: L2 and H1 spectrally, L4 and sup on a grid."""
    vals = coeffs_to_grid(u.coeffs, norm_grid_size(u.n_modes))
    return {
        "l2": u.l2(),
        "h1": u.h1(),
        "l4": _l4_from_grid(vals),
        "linf": float(np.max(np.abs(vals))),
    }


def batch_l2(coeffs: np.ndarray) -> np.ndarray:
    return np.sqrt(np.sum(coeffs ** 2, axis=-1))


def batch_h1_sq(coeffs: np.ndarray) -> np.ndarray:
    lam = eigenvalues(coeffs.shape[-1])
    return np.sum(lam * coeffs ** 2, axis=-1)


@lru_cache(maxsize=32)
def _sine_matrix(n_modes: int, grid_size: int) -> np.ndarray:
    k = np.arange(1, n_modes + 1)
    return np.sqrt(2.0) * np.sin(np.pi * np.outer(interior_grid(grid_size), k))


def batch_l4_p4(coeffs: np.ndarray, grid_size: int | None = None) -> np.ndarray:
    """Quadrature of integral |u|^4 dx, batched over leading axes.

    u^4 is a cosine polynomial of bandwidth 4N, for which the interior
    trapezoid rule is exact once grid_size >= 2N, so the default small grid
    already gives the exact integral.
    """
    n = coeffs.shape[-1]
    m = grid_size if grid_size is not None else max(2 * n, 16)
    vals = coeffs @ _sine_matrix(n, m).T
    return np.sum(vals ** 4, axis=-1) / (m + 1)
