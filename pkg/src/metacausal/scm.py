"""Ground-truth structural causal models and soft interventions on the cause.

Every SCM here has a designated cause mechanism (the marginal of A) which a
soft intervention replaces, leaving the cause->effect mechanism untouched.
The ground-truth direction is always A -> B; experiments needing the reverse
presentation simply relabel the sampled pairs.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .numkit import RngStream, sample_categorical, sample_dirichlet


# ---------------------------------------------------------------------------
# Categorical
# ---------------------------------------------------------------------------


@dataclass
class CategoricalScm:
    """A ~ Cat(pi_A); B | A=a ~ Cat(pi_B_given_A[a])."""

    pi_A: np.ndarray                 # (N,)
    pi_B_given_A: np.ndarray         # (N, N), row = value of A

    def __post_init__(self):
        self.pi_A = np.asarray(self.pi_A, dtype=float)
        self.pi_B_given_A = np.asarray(self.pi_B_given_A, dtype=float)
        if self.n_values < 2:
            raise ValueError("categorical SCM needs N >= 2")
        if abs(self.pi_A.sum() - 1.0) > 1e-9:
            raise ValueError("pi_A must be a simplex vector")
        if np.max(np.abs(self.pi_B_given_A.sum(axis=1) - 1.0)) > 1e-9:
            raise ValueError("every conditional row must be a simplex vector")

    @property
    def n_values(self) -> int:
        return self.pi_A.shape[0]

    def joint(self) -> np.ndarray:
        """(N, N) table with entry [i, j] = P(A=i, B=j)."""
        return self.pi_A[:, None] * self.pi_B_given_A


def sample_categorical_scm(n_values: int, rng: RngStream) -> CategoricalScm:
    if n_values < 2:
        raise ValueError("categorical SCM needs N >= 2")
    ones = np.ones(n_values)
    pi_a = sample_dirichlet(ones, rng.child(0))
    rows = np.stack([sample_dirichlet(ones, rng.child(1 + a))
                     for a in range(n_values)])
    return CategoricalScm(pi_a, rows)


# ---------------------------------------------------------------------------
# Spline (continuous multimodal)
# ---------------------------------------------------------------------------


@dataclass
class SplineScm:
    """A ~ N(cause_mean, 4); B = f(A) + N(0, 1) where f is a quadratic spline."""

    knots_x: np.ndarray
    knots_y: np.ndarray
    cause_mean: float = 0.0
    cause_variance: float = 4.0
    noise_variance: float = 1.0
    _coeffs: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        self.knots_x = np.asarray(self.knots_x, dtype=float)
        self.knots_y = np.asarray(self.knots_y, dtype=float)
        if self.knots_x.shape[0] < 3:
            raise ValueError("quadratic spline needs at least 3 knots")
        if np.any(np.diff(self.knots_x) <= 0):
            raise ValueError("knot abscissae must be strictly increasing")
        self._coeffs = _quadratic_spline_coeffs(self.knots_x, self.knots_y)


def _quadratic_spline_coeffs(xs: np.ndarray, ys: np.ndarray) -> np.ndarray:
    """Per-segment (a, b, c) with s_k(x) = a*(x-x_k)^2 + b*(x-x_k) + c.

    C1 interpolant through all knots, natural at the left end (the first
    segment's quadratic coefficient is zero).
    """
    n_seg = xs.shape[0] - 1
    coeffs = np.zeros((n_seg, 3))
    slope = 0.0
    # Natural left end: first segment is linear, so its entry slope is the
    # secant slope of the first interval.
    slope = (ys[1] - ys[0]) / (xs[1] - xs[0])
    for k in range(n_seg):
        h = xs[k + 1] - xs[k]
        dy = ys[k + 1] - ys[k]
        b = slope
        a = (dy - b * h) / (h * h)
        coeffs[k] = (a, b, ys[k])
        slope = 2.0 * a * h + b  # derivative at the right end of the segment
    return coeffs


def eval_spline(scm: SplineScm, x) -> np.ndarray:
    """Piecewise-quadratic interpolant; linear extrapolation past the knots."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    xs, coeffs = scm.knots_x, scm._coeffs
    idx = np.clip(np.searchsorted(xs, x, side="right") - 1, 0, len(xs) - 2)
    a, b, c = coeffs[idx, 0], coeffs[idx, 1], coeffs[idx, 2]
    t = x - xs[idx]
    y = a * t * t + b * t + c
    # Left extrapolation: tangent of the first segment at x_0.
    left = x < xs[0]
    if np.any(left):
        y[left] = coeffs[0, 2] + coeffs[0, 1] * (x[left] - xs[0])
    # Right extrapolation: tangent of the last segment at x_{K-1}.
    right = x > xs[-1]
    if np.any(right):
        a_l, b_l, c_l = coeffs[-1]
        h = xs[-1] - xs[-2]
        y_end = a_l * h * h + b_l * h + c_l
        s_end = 2.0 * a_l * h + b_l
        y[right] = y_end + s_end * (x[right] - xs[-1])
    return y


def sample_spline_scm(rng: RngStream, n_knots: int = 8,
                      range_a: float = 8.0, range_b: float = 8.0) -> SplineScm:
    xs = np.linspace(-range_a, range_a, n_knots)
    ys = rng.generator.uniform(-range_b, range_b, size=n_knots)
    return SplineScm(xs, ys)


# ---------------------------------------------------------------------------
# Linear Gaussian
# ---------------------------------------------------------------------------


@dataclass
class LinearGaussianScm:
    """A ~ N(mu_A, Sigma_A); B = beta_1 A + beta_0 + N(0, Sigma_B)."""

    mu_A: np.ndarray
    Sigma_A: np.ndarray
    beta_0: np.ndarray
    beta_1: np.ndarray
    Sigma_B: np.ndarray

    def __post_init__(self):
        for name in ("mu_A", "Sigma_A", "beta_0", "beta_1", "Sigma_B"):
            setattr(self, name, np.asarray(getattr(self, name), dtype=float))
        self.chol_A = np.linalg.cholesky(self.Sigma_A)
        self.chol_B = np.linalg.cholesky(self.Sigma_B)

    @property
    def dim(self) -> int:
        return self.mu_A.shape[0]


def _sample_inverse_wishart(dim: int, dof: int, rng: RngStream) -> np.ndarray:
    """Inverse-Wishart with identity scale via the Bartlett decomposition."""
    gen = rng.generator
    a = np.zeros((dim, dim))
    for i in range(dim):
        a[i, i] = np.sqrt(gen.chisquare(dof - i))
    a[np.tril_indices(dim, k=-1)] = gen.standard_normal(dim * (dim - 1) // 2)
    w = a @ a.T  # Wishart(I, dof)
    return np.linalg.inv(w)


def sample_linear_gaussian_scm(dim: int, rng: RngStream) -> LinearGaussianScm:
    gen = rng.child(0).generator
    mu_a = gen.standard_normal(dim)
    beta_0 = gen.standard_normal(dim)
    beta_1 = gen.standard_normal((dim, dim))
    sigma_a = _sample_inverse_wishart(dim, dim + 2, rng.child(1))
    sigma_b = _sample_inverse_wishart(dim, dim + 2, rng.child(2))
    return LinearGaussianScm(mu_a, sigma_a, beta_0, beta_1, sigma_b)


# ---------------------------------------------------------------------------
# Rotation decoder (representation experiments)
# ---------------------------------------------------------------------------


def rotation_matrix(theta: float) -> np.ndarray:
    c, s = np.cos(theta), np.sin(theta)
    return np.array([[c, -s], [s, c]])


@dataclass
class RotationDecoder:
    """(X, Y)^T = R(theta_D) (A, B)^T."""

    theta_D: float


def decode_observations(decoder: RotationDecoder, a, b):
    r = rotation_matrix(decoder.theta_D)
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    x = r[0, 0] * a + r[0, 1] * b
    y = r[1, 0] * a + r[1, 1] * b
    return x, y


# ---------------------------------------------------------------------------
# Sampling and interventions
# ---------------------------------------------------------------------------


def ancestral_sample(scm, n: int, rng: RngStream):
    """Draw n pairs (a, b), cause first, then effect given cause."""
    if n < 1:
        raise ValueError("need n >= 1 samples")
    if isinstance(scm, CategoricalScm):
        a = sample_categorical(scm.pi_A, n, rng.child(0))
        u = rng.child(1).generator.random(n)
        cdf = np.cumsum(scm.pi_B_given_A, axis=1)
        b = (u[:, None] > cdf[a]).sum(axis=1)
        return a, b
    if isinstance(scm, SplineScm):
        gen_a = rng.child(0).generator
        gen_b = rng.child(1).generator
        a = scm.cause_mean + np.sqrt(scm.cause_variance) * gen_a.standard_normal(n)
        b = eval_spline(scm, a) + np.sqrt(scm.noise_variance) * gen_b.standard_normal(n)
        return a, b
    if isinstance(scm, LinearGaussianScm):
        gen_a = rng.child(0).generator
        gen_b = rng.child(1).generator
        a = scm.mu_A + gen_a.standard_normal((n, scm.dim)) @ scm.chol_A.T
        noise = gen_b.standard_normal((n, scm.dim)) @ scm.chol_B.T
        b = a @ scm.beta_1.T + scm.beta_0 + noise
        return a, b
    raise TypeError(f"cannot sample from {type(scm).__name__}")


def intervene_on_cause(scm, rng: RngStream):
    """Replace the cause's marginal; the cause->effect mechanism is untouched."""
    if isinstance(scm, CategoricalScm):
        new_pi = sample_dirichlet(np.ones(scm.n_values), rng)
        return CategoricalScm(new_pi, scm.pi_B_given_A)
    if isinstance(scm, SplineScm):
        mu = rng.generator.uniform(-4.0, 4.0)
        return SplineScm(scm.knots_x, scm.knots_y, cause_mean=float(mu),
                         cause_variance=scm.cause_variance,
                         noise_variance=scm.noise_variance)
    if isinstance(scm, LinearGaussianScm):
        mu = rng.generator.standard_normal(scm.dim)
        return LinearGaussianScm(mu, scm.Sigma_A, scm.beta_0, scm.beta_1,
                                 scm.Sigma_B)
    raise TypeError(f"cannot intervene on {type(scm).__name__}")


# ---------------------------------------------------------------------------
# JSON round-trip, so experiments can pin ground truths
# ---------------------------------------------------------------------------

_SCM_KINDS = {
    "categorical": CategoricalScm,
    "spline": SplineScm,
    "linear_gaussian": LinearGaussianScm,
    "rotation_decoder": RotationDecoder,
}


def scm_to_json(scm) -> str:
    if isinstance(scm, CategoricalScm):
        doc = {"kind": "categorical", "pi_A": scm.pi_A.tolist(),
               "pi_B_given_A": scm.pi_B_given_A.tolist()}
    elif isinstance(scm, SplineScm):
        doc = {"kind": "spline", "knots_x": scm.knots_x.tolist(),
               "knots_y": scm.knots_y.tolist(), "cause_mean": scm.cause_mean,
               "cause_variance": scm.cause_variance,
               "noise_variance": scm.noise_variance}
    elif isinstance(scm, LinearGaussianScm):
        doc = {"kind": "linear_gaussian", "mu_A": scm.mu_A.tolist(),
               "Sigma_A": scm.Sigma_A.tolist(), "beta_0": scm.beta_0.tolist(),
               "beta_1": scm.beta_1.tolist(), "Sigma_B": scm.Sigma_B.tolist()}
    elif isinstance(scm, RotationDecoder):
        doc = {"kind": "rotation_decoder", "theta_D": scm.theta_D}
    else:
        raise TypeError(f"cannot serialize {type(scm).__name__}")
    return json.dumps(doc)


def scm_from_json(text: str):
    doc = json.loads(text)
    kind = doc.pop("kind")
    cls = _SCM_KINDS[kind]
    return cls(**doc)
