"""Gaussian-process surrogate with a squared-exponential ARD kernel."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import cho_factor, cho_solve
from scipy.optimize import minimize
from scipy.stats import norm

LOG_SCALE_BOUNDS = (math.log(0.03), math.log(10.0))
N_RESTARTS = 32
N_REFINE = 3


def se_ard(A: np.ndarray, B: np.ndarray, length_scales: np.ndarray) -> np.ndarray:
    d = (A[:, None, :] - B[None, :, :]) / length_scales
    return np.exp(-0.5 * np.einsum("ijk,ijk->ij", d, d))


@dataclass
class GaussianProcess:
    length_scales: np.ndarray
    noise: float = 1e-6
    X: np.ndarray | None = None
    y_mean: float = 0.0
    y_std: float = 1.0
    _chol: tuple | None = None
    _alpha: np.ndarray | None = None

    def fit(self, X: np.ndarray, y: np.ndarray) -> GaussianProcess:
        self.X = np.asarray(X, dtype=float)
        y = np.asarray(y, dtype=float)
        self.y_mean = float(y.mean())
        std = float(y.std())
        self.y_std = std if std > 0 else 1.0
        z = (y - self.y_mean) / self.y_std
        K = se_ard(self.X, self.X, self.length_scales) + self.noise * np.eye(len(z))
        self._chol = _robust_cholesky(K)
        self._alpha = cho_solve(self._chol, z)
        return self

    def predict(self, Xs: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Posterior mean and standard deviation on the original y scale."""
        Ks = se_ard(np.asarray(Xs, dtype=float), self.X, self.length_scales)
        mu = Ks @ self._alpha
        v = cho_solve(self._chol, Ks.T)
        var = np.maximum(1.0 - np.einsum("ij,ji->i", Ks, v), 0.0)
        return mu * self.y_std + self.y_mean, np.sqrt(var) * self.y_std


def _robust_cholesky(K: np.ndarray):
    jitter = 0.0
    for _ in range(8):
        try:
            return cho_factor(K + jitter * np.eye(len(K)), lower=True)
        except np.linalg.LinAlgError:
            jitter = 1e-8 if jitter == 0 else jitter * 10
    raise np.linalg.LinAlgError("kernel matrix is not positive definite")


def log_marginal_likelihood(log_scales: np.ndarray, X: np.ndarray, z: np.ndarray, noise: float) -> float:
    K = se_ard(X, X, np.exp(log_scales)) + noise * np.eye(len(z))
    try:
        c, low = cho_factor(K, lower=True)
    except np.linalg.LinAlgError:
        return -np.inf
    alpha = cho_solve((c, low), z)
    return float(-0.5 * z @ alpha - np.log(np.diag(c)).sum() - 0.5 * len(z) * math.log(2 * math.pi))


def fit_gp(X: np.ndarray, y: np.ndarray, rng: np.random.Generator, noise: float = 1e-6) -> GaussianProcess:
    """Choose length-scales by maximizing the log marginal likelihood:
    score ``N_RESTARTS`` random log-scale vectors, then refine the best few
    with Nelder-Mead inside the box ``LOG_SCALE_BOUNDS``."""
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    std = y.std()
    z = (y - y.mean()) / (std if std > 0 else 1.0)
    d = X.shape[1]
    lo, hi = LOG_SCALE_BOUNDS

    def objective(theta):
        theta = np.clip(theta, lo, hi)
        return -log_marginal_likelihood(theta, X, z, noise)

    starts = rng.uniform(lo, hi, size=(N_RESTARTS, d))
    scores = np.array([objective(s) for s in starts])
    best_theta, best_val = starts[np.argmin(scores)], float(scores.min())
    for s in starts[np.argsort(scores, kind="stable")[:N_REFINE]]:
        res = minimize(objective, s, method="Nelder-Mead", options={"maxiter": 60 * d, "xatol": 1e-3, "fatol": 1e-6})
        if res.fun < best_val:
            best_theta, best_val = np.clip(res.x, lo, hi), float(res.fun)
    return GaussianProcess(np.exp(best_theta), noise).fit(X, y)


def expected_improvement(mu: np.ndarray, sigma: np.ndarray, best: float, xi: float = 0.0) -> np.ndarray:
    """EI for maximization."""
    imp = mu - best - xi
    with np.errstate(divide="ignore", invalid="ignore"):
        zscore = np.where(sigma > 0, imp / sigma, 0.0)
    ei = imp * norm.cdf(zscore) + sigma * norm.pdf(zscore)
    return np.where(sigma > 0, np.maximum(ei, 0.0), np.maximum(imp, 0.0))
