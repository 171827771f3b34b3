"""Masked MLP conditional over discrete variables.

The module for node i maps the one-hot encodings of all M variables, with
each block multiplied by the binary parent mask (self always zero), through
one ReLU hidden layer of H = 4M units to a softmax over the node's N values.
A masked input block contributes exactly zero to the pre-activation, so its
incoming weights receive exactly zero gradient.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..numkit import RngStream, log_softmax, softmax
from .base import ParamModule


@dataclass
class MaskedMlpConditional(ParamModule):

    node: int
    mask: np.ndarray          # (M,) binary parent flags, mask[node] == 0
    W1: np.ndarray            # (H, M*N)
    b1: np.ndarray            # (H,)
    W2: np.ndarray            # (N, H)
    b2: np.ndarray            # (N,)
    param_names = ("W1", "b1", "W2", "b2")

    def __post_init__(self):
        self.mask = np.asarray(self.mask, dtype=float).copy()
        self.mask[self.node] = 0.0
        for name in self.param_names:
            setattr(self, name, np.asarray(getattr(self, name), dtype=float))

    @classmethod
    def init(cls, node: int, mask, n_variables: int, n_values: int,
             rng: RngStream, scale: float = 0.1) -> "MaskedMlpConditional":
        h = 4 * n_variables
        gen = rng.generator
        return cls(node, np.asarray(mask, dtype=float),
                   scale * gen.standard_normal((h, n_variables * n_values)),
                   np.zeros(h),
                   scale * gen.standard_normal((n_values, h)),
                   np.zeros(n_values))

    def with_mask(self, mask) -> "MaskedMlpConditional":
        out = self.copy()
        out.mask = np.asarray(mask, dtype=float).copy()
        out.mask[self.node] = 0.0
        return out

    @property
    def n_values(self) -> int:
        return self.b2.shape[0]

    @property
    def n_variables(self) -> int:
        return self.mask.shape[0]

    def _inputs(self, values) -> np.ndarray:
        """(n, M*N) concatenated masked one-hots."""
        values = np.atleast_2d(np.asarray(values))
        n, m = values.shape
        nv = self.n_values
        x = np.zeros((n, m * nv))
        cols = values + np.arange(m) * nv
        x[np.arange(n)[:, None], cols] = self.mask
        return x

    def _forward(self, values):
        x = self._inputs(values)
        pre = x @ self.W1.T + self.b1
        h = np.maximum(pre, 0.0)
        logits = h @ self.W2.T + self.b2
        return x, pre, h, logits

    def log_prob(self, values) -> np.ndarray:
        """Log-probability of the node's own column given its masked parents."""
        values = np.atleast_2d(np.asarray(values))
        if np.any(values < 0) or np.any(values >= self.n_values):
            raise ValueError("discrete value out of range")
        _, _, _, logits = self._forward(values)
        target = values[:, self.node]
        return log_softmax(logits, axis=1)[np.arange(values.shape[0]), target]

    def grad_log_prob(self, values):
        values = np.atleast_2d(np.asarray(values))
        n = values.shape[0]
        x, pre, h, logits = self._forward(values)
        p = softmax(logits, axis=1)
        target = values[:, self.node]
        d_logits = -p
        d_logits[np.arange(n), target] += 1.0
        d_logits /= n
        d_h = d_logits @ self.W2
        d_pre = d_h * (pre > 0)
        return {
            "W2": d_logits.T @ h, "b2": d_logits.sum(axis=0),
            "W1": d_pre.T @ x, "b1": d_pre.sum(axis=0),
        }
