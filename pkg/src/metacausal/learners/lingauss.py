"""Multivariate Gaussian marginal and linear-Gaussian conditional modules.

Covariances are parameterized by their Cholesky factor with the diagonal
stored in log-space, so gradient steps cannot leave the SPD cone. The flip
operation computes the exact B -> A factorization of a linear-Gaussian SCM
by standard multivariate Gaussian conditioning.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.linalg import solve

from ..scm import LinearGaussianScm
from .base import ParamModule

LOG_2PI = float(np.log(2.0 * np.pi))


def _build_chol(lower: np.ndarray, log_diag: np.ndarray) -> np.ndarray:
    return np.tril(lower, k=-1) + np.diag(np.exp(log_diag))


def _chol_params(sigma: np.ndarray):
    L = np.linalg.cholesky(sigma)
    return np.tril(L, k=-1), np.log(np.diag(L))


def _gaussian_log_prob(resid: np.ndarray, L: np.ndarray) -> np.ndarray:
    """log N(resid; 0, L L^T), resid of shape (n, d)."""
    y = solve(L, resid.T).T
    d = resid.shape[1]
    log_det = np.sum(np.log(np.diag(L)))
    return -0.5 * d * LOG_2PI - log_det - 0.5 * np.sum(y * y, axis=1)


def _chol_grad(resid: np.ndarray, L: np.ndarray):
    """Mean gradients of log N(resid; 0, LL^T) wrt resid-mean and L params.

    Returns (d_mean, d_lower, d_log_diag) where d_mean is the gradient with
    respect to the mean (i.e. Sigma^{-1} resid averaged over the batch).
    """
    n, d = resid.shape
    y = solve(L, resid.T).T                     # (n, d), y = L^{-1} r
    sinv_r = solve(L.T, y.T).T                  # Sigma^{-1} r
    d_mean = sinv_r.mean(axis=0)
    # d/dL of -1/2 y^T y is L^{-T} y y^T; batch-mean it.
    g = solve(L.T, y.T) @ y / n                 # (d, d) = mean of L^{-T} y y^T
    g -= np.diag(1.0 / np.diag(L))              # from -sum log L_ii
    g = np.tril(g)
    d_lower = np.tril(g, k=-1)
    d_log_diag = np.diag(g) * np.diag(L)
    return d_mean, d_lower, d_log_diag


@dataclass
class GaussianMarginal(ParamModule):
    """N(mu, L L^T) with L = tril(chol_lower, -1) + diag(exp(chol_log_diag))."""

    mu: np.ndarray
    chol_lower: np.ndarray
    chol_log_diag: np.ndarray
    param_names = ("mu", "chol_lower", "chol_log_diag")

    def __post_init__(self):
        for name in self.param_names:
            setattr(self, name, np.asarray(getattr(self, name), dtype=float))

    @classmethod
    def from_moments(cls, mu, sigma) -> "GaussianMarginal":
        lower, log_diag = _chol_params(np.asarray(sigma, dtype=float))
        return cls(np.asarray(mu, dtype=float), lower, log_diag)

    def chol(self) -> np.ndarray:
        return _build_chol(self.chol_lower, self.chol_log_diag)

    def covariance(self) -> np.ndarray:
        L = self.chol()
        return L @ L.T

    def log_prob(self, x) -> np.ndarray:
        x = np.atleast_2d(np.asarray(x, dtype=float))
        return _gaussian_log_prob(x - self.mu, self.chol())

    def grad_log_prob(self, x):
        x = np.atleast_2d(np.asarray(x, dtype=float))
        d_mu, d_lower, d_log_diag = _chol_grad(x - self.mu, self.chol())
        return {"mu": d_mu, "chol_lower": d_lower,
                "chol_log_diag": d_log_diag}


@dataclass
class LinearGaussianConditional(ParamModule):
    """y | x ~ N(W1 x + W0, L L^T)."""

    W1: np.ndarray
    W0: np.ndarray
    chol_lower: np.ndarray
    chol_log_diag: np.ndarray
    param_names = ("W1", "W0", "chol_lower", "chol_log_diag")

    def __post_init__(self):
        for name in self.param_names:
            setattr(self, name, np.asarray(getattr(self, name), dtype=float))

    @classmethod
    def from_moments(cls, w1, w0, sigma) -> "LinearGaussianConditional":
        lower, log_diag = _chol_params(np.asarray(sigma, dtype=float))
        return cls(np.asarray(w1, dtype=float), np.asarray(w0, dtype=float),
                   lower, log_diag)

    def chol(self) -> np.ndarray:
        return _build_chol(self.chol_lower, self.chol_log_diag)

    def covariance(self) -> np.ndarray:
        L = self.chol()
        return L @ L.T

    def log_prob(self, y, x) -> np.ndarray:
        y = np.atleast_2d(np.asarray(y, dtype=float))
        x = np.atleast_2d(np.asarray(x, dtype=float))
        resid = y - (x @ self.W1.T + self.W0)
        return _gaussian_log_prob(resid, self.chol())

    def grad_log_prob(self, y, x):
        y = np.atleast_2d(np.asarray(y, dtype=float))
        x = np.atleast_2d(np.asarray(x, dtype=float))
        n = x.shape[0]
        resid = y - (x @ self.W1.T + self.W0)
        L = self.chol()
        yv = solve(L, resid.T).T
        sinv_r = solve(L.T, yv.T).T            # (n, d) Sigma^{-1} resid
        d_w0 = sinv_r.mean(axis=0)
        d_w1 = sinv_r.T @ x / n
        _, d_lower, d_log_diag = _chol_grad(resid, L)
        return {"W1": d_w1, "W0": d_w0, "chol_lower": d_lower,
                "chol_log_diag": d_log_diag}


def exact_forward_modules(scm: LinearGaussianScm):
    """The A -> B factorization read straight off the ground truth."""
    marg = GaussianMarginal.from_moments(scm.mu_A, scm.Sigma_A)
    cond = LinearGaussianConditional.from_moments(scm.beta_1, scm.beta_0,
                                                  scm.Sigma_B)
    return marg, cond


def flip_linear_gaussian(scm: LinearGaussianScm):
    """Exact B -> A factorization of the SCM's joint distribution.

    B ~ N(beta_1 mu_A + beta_0, beta_1 Sigma_A beta_1^T + Sigma_B) and
    A | B = b ~ N(V1 b + V0, Sigma_A - Sigma_A beta_1^T Sigma_Bm^{-1}
    beta_1 Sigma_A) with V1 = Sigma_A beta_1^T Sigma_Bm^{-1}.
    """
    mu_b = scm.beta_1 @ scm.mu_A + scm.beta_0
    sigma_b = scm.beta_1 @ scm.Sigma_A @ scm.beta_1.T + scm.Sigma_B
    np.linalg.cholesky(sigma_b)  # raises LinAlgError if not SPD
    cross = scm.Sigma_A @ scm.beta_1.T          # Cov(A, B)
    v1 = solve(sigma_b.T, cross.T).T            # cross @ sigma_b^{-1}
    v0 = scm.mu_A - v1 @ mu_b
    resid_sigma = scm.Sigma_A - v1 @ cross.T
    resid_sigma = 0.5 * (resid_sigma + resid_sigma.T)
    marg_b = GaussianMarginal.from_moments(mu_b, sigma_b)
    cond_ab = LinearGaussianConditional.from_moments(v1, v0, resid_sigma)
    return marg_b, cond_ab
