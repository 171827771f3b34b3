"""Numerical substrate: stable special functions, seeded streams, optimizers.

Everything here is deterministic given its inputs. Random draws go through
:class:`RngStream`, a counter-based (Philox) stream keyed by (seed, stream_id),
so independent experiment runs can derive independent streams without
coordination.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

Params = dict[str, np.ndarray]


# ---------------------------------------------------------------------------
# RNG
# ---------------------------------------------------------------------------

_MIX_MULT = 0x9E3779B97F4A7C15  # splitmix64 increment, for child-id mixing


def _mix64(x: int) -> int:
    x &= 0xFFFFFFFFFFFFFFFF
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & 0xFFFFFFFFFFFFFFFF
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & 0xFFFFFFFFFFFFFFFF
    return x ^ (x >> 31)


@dataclass
class RngStream:
    """Counter-based random stream identified by (seed, stream_id).

    The same (seed, stream_id) always yields the same draw sequence.
    ``child(k)`` derives a new stream whose id is a mix of this stream's id
    and ``k``; distinct Philox keys give pairwise independent streams.
    """

    seed: int
    stream_id: int = 0

    def __post_init__(self):
        key = ((self.seed & 0xFFFFFFFFFFFFFFFF) << 64) | (
            self.stream_id & 0xFFFFFFFFFFFFFFFF
        )
        self._gen = np.random.Generator(np.random.Philox(key=key))

    @property
    def generator(self) -> np.random.Generator:
        return self._gen

    def child(self, k: int) -> "RngStream":
        new_id = _mix64(self.stream_id * _MIX_MULT + k + 1)
        return RngStream(self.seed, new_id)


# ---------------------------------------------------------------------------
# Stable special functions
# ---------------------------------------------------------------------------


def log_sum_exp(values, axis=None):
    """log(sum(exp(values))) without overflow; -inf entries are absorbing."""
    v = np.asarray(values, dtype=float)
    if v.size == 0:
        raise ValueError("empty reduction")
    m = np.max(v, axis=axis, keepdims=True)
    m = np.where(np.isfinite(m), m, 0.0)
    out = np.squeeze(m, axis=axis) if axis is not None else m.reshape(())
    res = out + np.log(np.sum(np.exp(v - m), axis=axis))
    return float(res) if res.ndim == 0 else res


def softmax(logits, axis=-1):
    z = np.asarray(logits, dtype=float)
    z = z - np.max(z, axis=axis, keepdims=True)
    e = np.exp(z)
    return e / np.sum(e, axis=axis, keepdims=True)


def log_softmax(logits, axis=-1):
    z = np.asarray(logits, dtype=float)
    z = z - np.max(z, axis=axis, keepdims=True)
    return z - np.log(np.sum(np.exp(z), axis=axis, keepdims=True))


def sigmoid(x):
    x = np.asarray(x, dtype=float)
    out = np.where(x >= 0, 1.0 / (1.0 + np.exp(-np.abs(x))),
                   np.exp(-np.abs(x)) / (1.0 + np.exp(-np.abs(x))))
    return float(out) if out.ndim == 0 else out


def log_sigmoid(x):
    x = np.asarray(x, dtype=float)
    out = np.where(x >= 0, -np.log1p(np.exp(-np.abs(x))),
                   x - np.log1p(np.exp(-np.abs(x))))
    return float(out) if out.ndim == 0 else out


def logit(p):
    p = np.asarray(p, dtype=float)
    out = np.log(p) - np.log1p(-p)
    return float(out) if out.ndim == 0 else out


# ---------------------------------------------------------------------------
# Samplers
# ---------------------------------------------------------------------------


def sample_dirichlet(alpha, rng: RngStream) -> np.ndarray:
    alpha = np.asarray(alpha, dtype=float)
    if np.any(alpha <= 0):
        raise ValueError("Dirichlet concentration must be positive")
    g = rng.generator.gamma(alpha)
    # Gamma draws of 0 are possible for tiny alpha; renormalize defensively.
    while g.sum() == 0:
        g = rng.generator.gamma(alpha)
    return g / g.sum()


def sample_categorical(probs, n: int, rng: RngStream) -> np.ndarray:
    probs = np.asarray(probs, dtype=float)
    return rng.generator.choice(len(probs), size=n, p=probs / probs.sum())


def sample_gaussian(mean, chol, n: int, rng: RngStream) -> np.ndarray:
    """Draw n samples from N(mean, L L^T) given the Cholesky factor L."""
    mean = np.asarray(mean, dtype=float)
    chol = np.asarray(chol, dtype=float)
    z = rng.generator.standard_normal((n, mean.shape[0]))
    return mean + z @ chol.T


# ---------------------------------------------------------------------------
# Optimizers
# ---------------------------------------------------------------------------


@dataclass
class OptimizerState:
    """SGD or RMSprop over a dict of named parameter arrays."""

    kind: str = "rmsprop"  # "sgd" | "rmsprop"
    learning_rate: float = 0.1
    rho: float = 0.9
    epsilon: float = 1e-8
    accumulator: Params = field(default_factory=dict)

    def copy(self) -> "OptimizerState":
        return OptimizerState(self.kind, self.learning_rate, self.rho,
                              self.epsilon,
                              {k: v.copy() for k, v in self.accumulator.items()})


def _check_shapes(params: Params, grads: Params):
    for name, g in grads.items():
        if name not in params or params[name].shape != np.asarray(g).shape:
            raise ValueError(f"gradient shape mismatch for '{name}'")


def sgd_step(state: OptimizerState, params: Params, grads: Params):
    """One descent step: param <- param - lr * grad. Pure in its inputs."""
    _check_shapes(params, grads)
    new_params = {k: v.copy() for k, v in params.items()}
    for name, g in grads.items():
        new_params[name] = params[name] - state.learning_rate * np.asarray(g)
    return new_params, state.copy()


def rmsprop_step(state: OptimizerState, params: Params, grads: Params):
    """RMSprop: acc <- rho*acc + (1-rho)*g^2; param <- param - lr*g/(sqrt(acc)+eps)."""
    _check_shapes(params, grads)
    new_state = state.copy()
    new_params = {k: v.copy() for k, v in params.items()}
    for name, g in grads.items():
        g = np.asarray(g, dtype=float)
        acc = new_state.accumulator.get(name, np.zeros_like(g))
        acc = state.rho * acc + (1.0 - state.rho) * g * g
        new_state.accumulator[name] = acc
        new_params[name] = params[name] - state.learning_rate * g / (
            np.sqrt(acc) + state.epsilon)
    return new_params, new_state


def optimizer_step(state: OptimizerState, params: Params, grads: Params):
    if state.kind == "sgd":
        return sgd_step(state, params, grads)
    if state.kind == "rmsprop":
        return rmsprop_step(state, params, grads)
    raise ValueError(f"unknown optimizer kind: {state.kind!r}")


# ---------------------------------------------------------------------------
# Finite-difference gradient oracle
# ---------------------------------------------------------------------------


def finite_diff_grad(f, x, h: float = 1e-5) -> np.ndarray:
    """Central-difference gradient of a scalar function of a flat vector."""
    x = np.asarray(x, dtype=float)
    grad = np.zeros_like(x)
    for i in range(x.size):
        xp = x.copy()
        xm = x.copy()
        xp.flat[i] += h
        xm.flat[i] -= h
        fp, fm = f(xp), f(xm)
        if not (np.isfinite(fp) and np.isfinite(fm)):
            raise ValueError("non-finite function evaluation in finite_diff_grad")
        grad.flat[i] = (fp - fm) / (2.0 * h)
    return grad
