"""Learnable rotation encoder mapping observations to candidate causal variables."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..scm import rotation_matrix


@dataclass
class RotationEncoder:
    """(U, V)^T = R(theta_E) (X, Y)^T; theta_E is a meta-parameter."""

    theta_E: float


def encode(encoder: RotationEncoder, x, y):
    r = rotation_matrix(encoder.theta_E)
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    u = r[0, 0] * x + r[0, 1] * y
    v = r[1, 0] * x + r[1, 1] * y
    return u, v
