"""Mixture density network conditional for scalar variables.

One tanh hidden layer feeds three linear heads (mixture logits, means,
log-scales). Gradients are hand-derived backprop; the finite-difference
oracle in the test suite covers every parameter.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..numkit import RngStream, log_softmax, log_sum_exp, softmax
from .base import ParamModule

SCALE_FLOOR = 1e-3
LOG_2PI = float(np.log(2.0 * np.pi))


@dataclass
class MdnConditional(ParamModule):
    """p(y | x) = sum_c w_c(x) N(y; mu_c(x), s_c(x)^2) for scalar x, y."""

    W1: np.ndarray   # (H, 1)
    b1: np.ndarray   # (H,)
    Wp: np.ndarray   # (C, H) mixture-logit head
    bp: np.ndarray   # (C,)
    Wm: np.ndarray   # (C, H) mean head
    bm: np.ndarray   # (C,)
    Ws: np.ndarray   # (C, H) log-scale head
    bs: np.ndarray   # (C,)
    param_names = ("W1", "b1", "Wp", "bp", "Wm", "bm", "Ws", "bs")

    def __post_init__(self):
        for name in self.param_names:
            setattr(self, name, np.asarray(getattr(self, name), dtype=float))

    @classmethod
    def init(cls, rng: RngStream, n_hidden: int = 32, n_components: int = 10,
             scale: float = 0.1) -> "MdnConditional":
        gen = rng.generator
        def w(*shape):
            return scale * gen.standard_normal(shape)
        return cls(w(n_hidden, 1), np.zeros(n_hidden),
                   w(n_components, n_hidden), np.zeros(n_components),
                   w(n_components, n_hidden), gen.uniform(-4, 4, n_components),
                   w(n_components, n_hidden), np.zeros(n_components))

    def _forward(self, x):
        x = np.atleast_1d(np.asarray(x, dtype=float))
        h = np.tanh(x[:, None] @ self.W1.T + self.b1)       # (n, H)
        pi_logits = h @ self.Wp.T + self.bp                  # (n, C)
        mu = h @ self.Wm.T + self.bm
        log_s = h @ self.Ws.T + self.bs
        s = np.maximum(np.exp(log_s), SCALE_FLOOR)
        return h, pi_logits, mu, log_s, s

    def log_prob(self, y, x) -> np.ndarray:
        y = np.atleast_1d(np.asarray(y, dtype=float))
        _, pi_logits, mu, _, s = self._forward(x)
        z = (y[:, None] - mu) / s
        comp = log_softmax(pi_logits, axis=1) - 0.5 * (LOG_2PI + z * z) - np.log(s)
        return log_sum_exp(comp, axis=1)

    def grad_log_prob(self, y, x):
        x = np.atleast_1d(np.asarray(x, dtype=float))
        y = np.atleast_1d(np.asarray(y, dtype=float))
        n = x.shape[0]
        h, pi_logits, mu, log_s, s = self._forward(x)
        z = (y[:, None] - mu) / s
        comp = log_softmax(pi_logits, axis=1) - 0.5 * (LOG_2PI + z * z) - np.log(s)
        resp = softmax(comp, axis=1)                         # (n, C)
        w = softmax(pi_logits, axis=1)

        d_pi = (resp - w) / n                                # (n, C)
        d_mu = resp * z / s / n
        not_clamped = (np.exp(log_s) > SCALE_FLOOR).astype(float)
        d_ls = resp * (z * z - 1.0) * not_clamped / n

        d_h = d_pi @ self.Wp + d_mu @ self.Wm + d_ls @ self.Ws
        d_pre = d_h * (1.0 - h * h)
        return {
            "Wp": d_pi.T @ h, "bp": d_pi.sum(axis=0),
            "Wm": d_mu.T @ h, "bm": d_mu.sum(axis=0),
            "Ws": d_ls.T @ h, "bs": d_ls.sum(axis=0),
            "W1": d_pre.T @ x[:, None], "b1": d_pre.sum(axis=0),
        }
