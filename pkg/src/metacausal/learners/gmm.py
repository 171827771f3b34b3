"""Scalar Gaussian mixture marginals, with an EM fitter for offline training."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..numkit import RngStream, log_softmax, log_sum_exp, softmax
from .base import ParamModule

VARIANCE_FLOOR = 1e-6
LOG_2PI = float(np.log(2.0 * np.pi))


@dataclass
class GaussianMixtureMarginal(ParamModule):
    """p(x) = sum_c w_c N(x; mu_c, var_c), w = softmax(weight_logits).

    Variances are stored in log-space; the effective variance is clamped at
    VARIANCE_FLOOR so repeated adaptation on near-constant data cannot make
    a component collapse.
    """

    weight_logits: np.ndarray
    means: np.ndarray
    log_vars: np.ndarray
    em_log_likelihoods: np.ndarray | None = field(default=None, compare=False)
    param_names = ("weight_logits", "means", "log_vars")

    def __post_init__(self):
        self.weight_logits = np.asarray(self.weight_logits, dtype=float)
        self.means = np.asarray(self.means, dtype=float)
        self.log_vars = np.asarray(self.log_vars, dtype=float)

    @property
    def n_components(self) -> int:
        return self.means.shape[0]

    def _variances(self) -> np.ndarray:
        return np.maximum(np.exp(self.log_vars), VARIANCE_FLOOR)

    def _component_log_probs(self, x) -> np.ndarray:
        """(n, C) log of w_c * N(x; mu_c, var_c)."""
        x = np.atleast_1d(np.asarray(x, dtype=float))
        var = self._variances()
        z2 = (x[:, None] - self.means) ** 2 / var
        log_norm = -0.5 * (LOG_2PI + np.log(var) + z2)
        return log_softmax(self.weight_logits) + log_norm

    def log_prob(self, x) -> np.ndarray:
        comp = self._component_log_probs(x)
        return log_sum_exp(comp, axis=1)

    def grad_log_prob(self, x):
        x = np.atleast_1d(np.asarray(x, dtype=float))
        n = x.shape[0]
        comp = self._component_log_probs(x)
        resp = softmax(comp, axis=1)                       # (n, C)
        var = self._variances()
        z = (x[:, None] - self.means) / np.sqrt(var)
        w = softmax(self.weight_logits)
        not_clamped = (np.exp(self.log_vars) > VARIANCE_FLOOR).astype(float)
        return {
            "weight_logits": resp.mean(axis=0) - w,
            "means": (resp * z / np.sqrt(var)).mean(axis=0),
            "log_vars": ((resp * (z * z - 1.0) / 2.0).mean(axis=0)
                         * not_clamped),
        }


def fit_gmm_em(samples, n_components: int, rng: RngStream,
               max_iter: int = 200, tol: float = 1e-6) -> GaussianMixtureMarginal:
    """Fit a scalar GMM by EM. The returned module carries the LL trace.

    The data log-likelihood is non-decreasing across iterations (up to a
    ~1e-9 numerical slack); iteration stops once the improvement drops
    below ``tol``.
    """
    x = np.asarray(samples, dtype=float)
    if np.unique(x).shape[0] < n_components:
        raise ValueError("need at least n_components distinct samples")

    means = rng.generator.choice(np.unique(x), size=n_components, replace=False)
    variances = np.full(n_components, max(x.var(), VARIANCE_FLOOR))
    weights = np.full(n_components, 1.0 / n_components)

    trace = []
    for _ in range(max_iter):
        # E-step in the log domain.
        z2 = (x[:, None] - means) ** 2 / variances
        comp = np.log(weights) - 0.5 * (LOG_2PI + np.log(variances) + z2)
        ll = float(np.sum(log_sum_exp(comp, axis=1)))
        trace.append(ll)
        if len(trace) > 1 and ll - trace[-2] < tol:
            break
        resp = softmax(comp, axis=1)
        # M-step.
        nk = resp.sum(axis=0)
        nk = np.maximum(nk, 1e-300)
        weights = nk / x.shape[0]
        means = (resp * x[:, None]).sum(axis=0) / nk
        variances = (resp * (x[:, None] - means) ** 2).sum(axis=0) / nk
        variances = np.maximum(variances, VARIANCE_FLOOR)

    with np.errstate(divide="ignore"):
        weight_logits = np.log(np.maximum(weights, 1e-300))
    return GaussianMixtureMarginal(weight_logits, means, np.log(variances),
                                   em_log_likelihoods=np.array(trace))
