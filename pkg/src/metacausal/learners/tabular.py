"""Tabular (softmax-parametrized) marginals and conditionals."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..numkit import log_softmax, softmax
from .base import ParamModule


@dataclass
class TabularMarginal(ParamModule):
    """P(X = i) = softmax(logits)_i over N discrete values."""

    logits: np.ndarray
    param_names = ("logits",)

    def __post_init__(self):
        self.logits = np.asarray(self.logits, dtype=float)

    @property
    def n_values(self) -> int:
        return self.logits.shape[0]

    def probs(self) -> np.ndarray:
        return softmax(self.logits)

    def log_prob(self, values) -> np.ndarray:
        values = np.asarray(values)
        if np.any(values < 0) or np.any(values >= self.n_values):
            raise ValueError("discrete value out of range")
        return log_softmax(self.logits)[values]

    def grad_log_prob(self, values):
        """Gradient of the mean log-likelihood: empirical freq - softmax."""
        values = np.asarray(values)
        counts = np.bincount(values, minlength=self.n_values).astype(float)
        return {"logits": counts / values.shape[0] - self.probs()}


@dataclass
class TabularConditional(ParamModule):
    """P(Y = j | X = i) = softmax(logits[i])_j; one logit row per condition."""

    logits: np.ndarray  # (N_cond, N_out)
    param_names = ("logits",)

    def __post_init__(self):
        self.logits = np.asarray(self.logits, dtype=float)

    def probs(self) -> np.ndarray:
        return softmax(self.logits, axis=1)

    def log_prob(self, values, cond) -> np.ndarray:
        values = np.asarray(values)
        cond = np.asarray(cond)
        n_cond, n_out = self.logits.shape
        if (np.any(values < 0) or np.any(values >= n_out)
                or np.any(cond < 0) or np.any(cond >= n_cond)):
            raise ValueError("discrete value out of range")
        return log_softmax(self.logits, axis=1)[cond, values]

    def grad_log_prob(self, values, cond):
        values = np.asarray(values)
        cond = np.asarray(cond)
        n = values.shape[0]
        counts = np.zeros_like(self.logits)
        np.add.at(counts, (cond, values), 1.0)
        row_n = np.bincount(cond, minlength=self.logits.shape[0]).astype(float)
        grad = (counts - row_n[:, None] * self.probs()) / n
        return {"logits": grad}


def fit_tabular_mle(cause, effect, n_values: int, laplace: float = 0.0):
    """Exact MLE of one factorization P(cause) P(effect | cause) from counts.

    Returns (marginal, conditional, info). Conditioning values never observed
    get a uniform row; their indices are listed in info["unseen_rows"].
    Logits are log-counts, so softmax reproduces the count ratios exactly.
    """
    cause = np.asarray(cause)
    effect = np.asarray(effect)
    counts = np.zeros((n_values, n_values))
    np.add.at(counts, (cause, effect), 1.0)
    counts += laplace
    row_tot = counts.sum(axis=1)

    with np.errstate(divide="ignore"):
        marg_logits = np.log(row_tot / row_tot.sum())
        cond_logits = np.where(row_tot[:, None] > 0, np.log(counts), 0.0)
    unseen = np.flatnonzero(row_tot == 0)
    cond_logits[unseen] = 0.0  # uniform fallback
    info = {"unseen_rows": unseen.tolist(), "counts": counts}
    return TabularMarginal(marg_logits), TabularConditional(cond_logits), info
