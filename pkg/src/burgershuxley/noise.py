"""Q-Wiener noise in the sine basis.

The driving noise is W(t) = sum_k sqrt(mu_k) beta_k(t) e_k with independent
scalar Brownian motions beta_k, so an increment over dt has mode-k
coefficient sqrt(mu_k * dt) * xi_k with xi_k standard normal.  The default
covariance is the power law mu_k = k^-2, which is trace class.

Diffusion coefficients act diagonally in the basis.  The additive case is
sigma(u) dW = a0 dW; the multiplicative case scales mode k of dW by
g_k(u) = c0 + c1 * tanh(<u, e_k>), which is bounded and Lipschitz so the
usual linear-growth / Lipschitz constants are explicit.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


def stream(base_seed: int, index: int) -> np.random.Generator:
    """Counter-based generator for trajectory `index` of a batch.

    Each trajectory owns its stream, keyed by (base_seed, index), so results
    do not depend on how trajectories are split across workers.
    """
    return np.random.Generator(np.random.Philox(key=(base_seed, index)))


@dataclass(frozen=True)
class CovarianceSpec:
    """Eigenvalues mu_k of the covariance Q, aligned with the sine basis."""

    mus: np.ndarray

    def __post_init__(self):
        mus = np.asarray(self.mus, dtype=float)
        if mus.ndim != 1 or mus.size == 0:
            raise ValueError("mus must be a nonempty 1-d array")
        if np.any(mus < 0) or not np.all(np.isfinite(mus)):
            raise ValueError("covariance eigenvalues must be finite and >= 0")
        object.__setattr__(self, "mus", mus)

    @classmethod
    def power_law(cls, n_modes: int, exponent: float = 2.0, scale: float = 1.0):
        k = np.arange(1, n_modes + 1, dtype=float)
        return cls(scale * k ** (-exponent))

    @property
    def n_modes(self) -> int:
        return self.mus.size

    @property
    def trace(self) -> float:
        return float(np.sum(self.mus))

    @property
    def op_norm(self) -> float:
        return float(np.max(self.mus))

    def sample_increment(
        self, dt: float, rng: np.random.Generator, n_paths: int | None = None
    ) -> np.ndarray:
        """Coefficients of a Q-Wiener increment over a step of length dt."""
        if dt <= 0:
            raise ValueError(f"dt must be positive, got {dt}")
        shape = (self.n_modes,) if n_paths is None else (n_paths, self.n_modes)
        return np.sqrt(self.mus * dt) * rng.standard_normal(shape)


@dataclass(frozen=True)
class AdditiveNoise:
    """sigma(u) dW = a0 dW, independent of the state."""

    a0: float = 1.0

    def gains(self, coeffs: np.ndarray) -> np.ndarray:
        return np.broadcast_to(self.a0, np.asarray(coeffs).shape)

    def apply(self, coeffs: np.ndarray, dw: np.ndarray) -> np.ndarray:
        return self.a0 * dw

    def hs_norm_sq(self, coeffs: np.ndarray, cov: CovarianceSpec) -> np.ndarray:
        base = self.a0 ** 2 * cov.trace
        return np.full(np.asarray(coeffs).shape[:-1], base)

    def growth_const(self, cov: CovarianceSpec) -> float:
        return self.a0 ** 2 * cov.trace

    def lipschitz_const(self, cov: CovarianceSpec) -> float:
        return 0.0


@dataclass(frozen=True)
class MultiplicativeNoise:
    """Diagonal gains g_k(u) = c0 + c1 * tanh(a_k) on the Wiener increment."""

    c0: float = 1.0
    c1: float = 0.0

    def gains(self, coeffs: np.ndarray) -> np.ndarray:
        return self.c0 + self.c1 * np.tanh(np.asarray(coeffs, dtype=float))

    def apply(self, coeffs: np.ndarray, dw: np.ndarray) -> np.ndarray:
        return self.gains(coeffs) * dw

    def hs_norm_sq(self, coeffs: np.ndarray, cov: CovarianceSpec) -> np.ndarray:
        g = self.gains(coeffs)
        return np.sum(cov.mus * g ** 2, axis=-1)

    def growth_const(self, cov: CovarianceSpec) -> float:
        # |g_k| <= |c0| + |c1| uniformly, so ||sigma(u)||_LQ^2 <= K (1 + |u|^2)
        # already with the constant term alone.
        return (abs(self.c0) + abs(self.c1)) ** 2 * cov.trace

    def lipschitz_const(self, cov: CovarianceSpec) -> float:
        # tanh is 1-Lipschitz mode by mode.
        return self.c1 ** 2 * cov.op_norm


NoiseCoefficient = AdditiveNoise | MultiplicativeNoise


def hypothesis_margins(
    coef: NoiseCoefficient, cov: CovarianceSpec, pairs: np.ndarray
) -> dict:
    """Empirical growth / Lipschitz constants over sampled field pairs.

    `pairs` has shape (n, 2, n_modes).  Returns K_emp and L_emp, the worst
    observed ratios ||sigma(u)||_LQ^2 / (1 + |u|^2) and
    ||sigma(u1)-sigma(u2)||_LQ^2 / |u1-u2|^2; both are dominated by the
    closed-form constants of the coefficient.  Coincident pairs are skipped
    in the Lipschitz ratio.
    """
    pairs = np.asarray(pairs, dtype=float)
    if pairs.ndim != 3 or pairs.shape[1] != 2 or pairs.shape[0] == 0:
        raise ValueError("pairs must have shape (n, 2, n_modes) with n >= 1")
    u1, u2 = pairs[:, 0, :], pairs[:, 1, :]
    k_emp = float(np.max(coef.hs_norm_sq(u1, cov) / (1.0 + np.sum(u1 ** 2, axis=-1))))
    dg = coef.gains(u1) - coef.gains(u2)
    num = np.sum(cov.mus * dg ** 2, axis=-1)
    den = np.sum((u1 - u2) ** 2, axis=-1)
    keep = den > 0
    l_emp = float(np.max(num[keep] / den[keep])) if np.any(keep) else 0.0
    return {
        "K_emp": k_emp,
        "L_emp": l_emp,
        "K": coef.growth_const(cov),
        "L": coef.lipschitz_const(cov),
    }
