"""Minimal Gaussian process regression for the Bayesian optimization baseline.

Matern 5/2 kernel, fixed jitter, signal variance set to the sample variance
of the targets, and the length scale picked from a small grid by maximum log
marginal likelihood. Deliberately no gradient-based hyperparameter tuning:
the baseline mirrors a standard sequential-model-based optimizer, not a GP
research stack.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

_SQRT5 = math.sqrt(5.0)

LENGTH_SCALE_GRID = (0.1, 0.3, 1.0, 3.0, 10.0)
JITTER = 1e-6


def matern52(r: np.ndarray, length_scale: float, signal_var: float) -> np.ndarray:
    """k(r) = s2 * (1 + sqrt5 r/l + 5 r^2/(3 l^2)) * exp(-sqrt5 r/l)."""
    q = _SQRT5 * np.asarray(r, dtype=float) / length_scale
    return signal_var * (1.0 + q + q**2 / 3.0) * np.exp(-q)


def _pairwise_dist(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    diff = a[:, None, :] - b[None, :, :]
    return np.sqrt(np.sum(diff**2, axis=-1))


@dataclass
class FittedGP:
    x: np.ndarray
    y_mean: float
    length_scale: float
    signal_var: float
    _chol: np.ndarray
    _alpha: np.ndarray

    def posterior(self, xq: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Posterior mean and variance at query points.

        Variance at (or numerically at) an evaluated input is jitter-limited
        noise, not information; anything at that scale is reported as zero.
        """
        xq = np.asarray(xq, dtype=float)
        k_star = matern52(_pairwise_dist(xq, self.x), self.length_scale, self.signal_var)
        mu = self.y_mean + k_star @ self._alpha
        v = np.linalg.solve(self._chol, k_star.T)
        var = matern52(np.zeros(len(xq)), self.length_scale, self.signal_var) - np.sum(v**2, axis=0)
        var[var < 3.0 * JITTER] = 0.0
        return mu, var


def _log_marginal_likelihood(y_centered: np.ndarray, chol: np.ndarray, alpha: np.ndarray) -> float:
    n = len(y_centered)
    return float(
        -0.5 * y_centered @ alpha - np.sum(np.log(np.diag(chol))) - 0.5 * n * math.log(2.0 * math.pi)
    )


def fit_gp(x: np.ndarray, y: np.ndarray) -> FittedGP:
    """Fit on centered targets; length scale by max marginal likelihood over the grid."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    y_mean = float(y.mean())
    yc = y - y_mean
    signal_var = max(float(np.var(y, ddof=1)), 1e-12)
    dists = _pairwise_dist(x, x)
    best = None
    for ls in LENGTH_SCALE_GRID:
        k = matern52(dists, ls, signal_var) + JITTER * np.eye(len(x))
        chol = np.linalg.cholesky(k)
        alpha = np.linalg.solve(chol.T, np.linalg.solve(chol, yc))
        lml = _log_marginal_likelihood(yc, chol, alpha)
        if best is None or lml > best[0]:
            best = (lml, ls, chol, alpha)
    _, ls, chol, alpha = best
    return FittedGP(x=x, y_mean=y_mean, length_scale=ls, signal_var=signal_var, _chol=chol, _alpha=alpha)


def _norm_cdf(z: np.ndarray) -> np.ndarray:
    return np.array([0.5 * (1.0 + math.erf(v / math.sqrt(2.0))) for v in np.atleast_1d(z)])


def _norm_pdf(z: np.ndarray) -> np.ndarray:
    return np.exp(-0.5 * np.asarray(z) ** 2) / math.sqrt(2.0 * math.pi)


def expected_improvement(mu: np.ndarray, sigma: np.ndarray, best: float) -> np.ndarray:
    """EI for minimization: (best - mu) Phi(z) + sigma phi(z), z = (best - mu)/sigma.

    Points with zero posterior uncertainty are already known; their EI is 0.
    """
    mu = np.asarray(mu, dtype=float)
    sigma = np.asarray(sigma, dtype=float)
    out = np.zeros_like(mu)
    active = sigma > 1e-12
    z = (best - mu[active]) / sigma[active]
    out[active] = (best - mu[active]) * _norm_cdf(z) + sigma[active] * _norm_pdf(z)
    return np.maximum(out, 0.0)
