"""Meta-learning engine: online regret and structural-parameter gradients.

A transfer episode feeds the SAME minibatch stream to every competing
hypothesis, accumulates each hypothesis's online log-likelihood (recorded
*before* each adaptation step), and turns the resulting regret into
gradients for the structural belief: the scalar direction logit gamma,
per-edge logits gamma_ij, or the encoder angle.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .numkit import (OptimizerState, RngStream, log_sigmoid, log_sum_exp,
                     optimizer_step, sigmoid)
from .learners.base import adapt_step
from .scm import ancestral_sample, intervene_on_cause


# ---------------------------------------------------------------------------
# Structural belief and episode bookkeeping
# ---------------------------------------------------------------------------


@dataclass
class StructuralBelief:
    """Meta-parameters: p(A->B) = sigmoid(gamma); edge beliefs sigmoid(gamma_ij)."""

    gamma: float = 0.0
    gamma_matrix: np.ndarray | None = None     # (M, M), diagonal ignored
    theta_E: float | None = None

    def edge_probs(self) -> np.ndarray:
        p = sigmoid(self.gamma_matrix)
        np.fill_diagonal(p, 0.0)
        return p


@dataclass
class EpisodeConfig:
    T: int = 2                 # adaptation steps per episode
    batch_size: int = 10
    m: int = 20                # transfer examples drawn per episode
    K: int = 16                # structure samples (multi-edge case)
    J: int = 500               # number of episodes
    reset_to_pretrained: bool = True
    adapt_marginal: bool = True
    optimizer_kind: str = "rmsprop"        # adaptation steps
    meta_optimizer_kind: str = "rmsprop"   # gamma updates
    learning_rate: float = 0.1
    meta_learning_rate: float = 0.01
    regret_variant: str = "mixture"   # "mixture" (likelihoods) | "exp_regret"

    def __post_init__(self):
        if self.T < 1 or self.K < 1:
            raise ValueError("need T >= 1 and K >= 1")


@dataclass
class EpisodeTrace:
    """Per-step online log-likelihoods and the episode's regret summary."""

    step_log_lik_ab: list = field(default_factory=list)
    step_log_lik_ba: list = field(default_factory=list)
    delta: float = 0.0
    regret: float = 0.0
    meta_gradient: float = 0.0
    sigma_gamma: float = 0.5

    @property
    def log_lik_ab(self) -> float:
        return float(np.sum(self.step_log_lik_ab))

    @property
    def log_lik_ba(self) -> float:
        return float(np.sum(self.step_log_lik_ba))

    def csv_rows(self, episode: int):
        """One row per step: the CSV schema of the EpisodeTrace interface."""
        cum_ab = np.cumsum(self.step_log_lik_ab)
        cum_ba = np.cumsum(self.step_log_lik_ba)
        rows = []
        for t in range(len(self.step_log_lik_ab)):
            rows.append({
                "episode": episode, "step": t,
                "logL_ab_step": self.step_log_lik_ab[t],
                "logL_ba_step": self.step_log_lik_ba[t],
                "logL_ab_cum": float(cum_ab[t]),
                "logL_ba_cum": float(cum_ba[t]),
                "delta": self.delta, "regret": self.regret,
                "sigma_gamma": self.sigma_gamma,
            })
        return rows


# ---------------------------------------------------------------------------
# Hypothesis model: one factorization of the bivariate joint
# ---------------------------------------------------------------------------


@dataclass
class HypothesisModel:
    """A factorization P(cause) P(effect | cause) of the observed pair.

    ``cause_is_first`` says whether the cause side is the first element of an
    observed pair (the A -> B reading) or the second (B -> A).
    """

    marginal: object
    conditional: object
    cause_is_first: bool = True

    def split(self, a, b):
        return (a, b) if self.cause_is_first else (b, a)

    def log_joint(self, a, b) -> np.ndarray:
        c, e = self.split(a, b)
        return self.marginal.log_prob(c) + self.conditional.log_prob(e, c)

    def copy(self) -> "HypothesisModel":
        return HypothesisModel(self.marginal.copy(), self.conditional.copy(),
                               self.cause_is_first)


def online_log_likelihood(model: HypothesisModel, batches,
                          opt_marginal: OptimizerState,
                          opt_conditional: OptimizerState,
                          adapt_marginal: bool = True):
    """Accumulate log P(batch_t; theta_t) along an adaptation trajectory.

    The likelihood of each batch is recorded *before* the adaptation step
    that produces theta_{t+1}. Returns (total, adapted model, per-step list).
    """
    model = model.copy()
    steps = []
    for a, b in batches:
        steps.append(float(np.sum(model.log_joint(a, b))))
        c, e = model.split(a, b)
        if adapt_marginal:
            model.marginal, opt_marginal = adapt_step(
                model.marginal, c, opt_state=opt_marginal)
        model.conditional, opt_conditional = adapt_step(
            model.conditional, e, c, opt_state=opt_conditional)
    return float(np.sum(steps)), model, steps


def minibatch_stream(scm, config: EpisodeConfig, rng: RngStream):
    """T minibatches drawn from the transfer distribution, shared by hypotheses."""
    n = config.T * config.batch_size
    if config.m > 0 and n > config.m:
        raise ValueError("T * batch_size exceeds the m transfer examples")
    a, b = ancestral_sample(scm, n, rng)
    batches = []
    for t in range(config.T):
        sl = slice(t * config.batch_size, (t + 1) * config.batch_size)
        batches.append((a[sl], b[sl]))
    return batches


# ---------------------------------------------------------------------------
# Regret and the gamma gradient (two-hypothesis case)
# ---------------------------------------------------------------------------


def mixture_regret(gamma: float, log_lik_ab: float, log_lik_ba: float) -> float:
    """-log[ sigma(g) L_ab + (1 - sigma(g)) L_ba ], in the log domain."""
    return -log_sum_exp([log_sigmoid(gamma) + log_lik_ab,
                         log_sigmoid(-gamma) + log_lik_ba])


def gamma_gradient(gamma: float, log_lik_ab: float, log_lik_ba: float) -> float:
    """d regret / d gamma = sigma(gamma) - sigma(gamma + delta)."""
    delta = log_lik_ab - log_lik_ba
    return float(sigmoid(gamma) - sigmoid(gamma + delta))


def exp_regret_objective(gamma: float, regret_ab: float, regret_ba: float) -> float:
    """log[ sigma(g) e^{R_ab} + (1 - sigma(g)) e^{R_ba} ] (regret-mixing variant)."""
    return log_sum_exp([log_sigmoid(gamma) + regret_ab,
                        log_sigmoid(-gamma) + regret_ba])


def exp_regret_gradient(gamma: float, regret_ab: float, regret_ba: float) -> float:
    """Gradient of the regret-mixing variant; descent still favors the
    lower-regret hypothesis."""
    delta = regret_ab - regret_ba
    return float(sigmoid(gamma + delta) - sigmoid(gamma))


# ---------------------------------------------------------------------------
# Bivariate meta-training loop
# ---------------------------------------------------------------------------


def run_bivariate_meta_training(scm, model_ab: HypothesisModel,
                                model_ba: HypothesisModel,
                                config: EpisodeConfig, rng: RngStream,
                                gamma0: float = 0.0):
    """Algorithm loop for the two-hypothesis case.

    Per episode: intervene on the cause, feed both hypotheses the same
    transfer minibatches, update gamma by one optimizer step on the regret.
    Returns (sigma(gamma) trajectory including the initial point, traces).
    """
    gamma = float(gamma0)
    meta_opt = OptimizerState(kind=config.meta_optimizer_kind,
                              learning_rate=config.meta_learning_rate)
    pre_ab, pre_ba = model_ab.copy(), model_ba.copy()
    cur_ab, cur_ba = model_ab.copy(), model_ba.copy()
    trajectory = [sigmoid(gamma)]
    traces = []
    for j in range(config.J):
        ep_rng = rng.child(j)
        transfer = intervene_on_cause(scm, ep_rng.child(0))
        batches = minibatch_stream(transfer, config, ep_rng.child(1))
        if config.reset_to_pretrained:
            cur_ab, cur_ba = pre_ab.copy(), pre_ba.copy()
        opt = OptimizerState(kind=config.optimizer_kind,
                             learning_rate=config.learning_rate)
        ll_ab, cur_ab, steps_ab = online_log_likelihood(
            cur_ab, batches, opt.copy(), opt.copy(), config.adapt_marginal)
        ll_ba, cur_ba, steps_ba = online_log_likelihood(
            cur_ba, batches, opt.copy(), opt.copy(), config.adapt_marginal)
        grad = gamma_gradient(gamma, ll_ab, ll_ba)
        regret = mixture_regret(gamma, ll_ab, ll_ba)
        params, meta_opt = optimizer_step(
            meta_opt, {"gamma": np.array([gamma])},
            {"gamma": np.array([grad])})
        gamma = float(params["gamma"][0])
        trajectory.append(sigmoid(gamma))
        traces.append(EpisodeTrace(steps_ab, steps_ba, ll_ab - ll_ba,
                                   regret, grad, sigmoid(gamma)))
    return np.array(trajectory), traces


# ---------------------------------------------------------------------------
# Multi-edge (Bernoulli mask) case
# ---------------------------------------------------------------------------


def sample_structures(gamma_matrix, k: int, rng: RngStream) -> np.ndarray:
    """K binary structure masks with entries ~ Bernoulli(sigmoid(gamma_ij))."""
    if k < 1:
        raise ValueError("need K >= 1")
    gamma_matrix = np.asarray(gamma_matrix, dtype=float)
    p = sigmoid(gamma_matrix)
    u = rng.generator.random((k,) + gamma_matrix.shape)
    masks = (u < p).astype(float)
    for mask in masks:
        np.fill_diagonal(mask, 0.0)
    return masks


def edge_gradient_ksample(gamma_matrix, masks, node_log_liks) -> np.ndarray:
    """Self-normalized K-sample estimator of the edge-belief gradient.

    ``masks`` is (K, M, M); ``node_log_liks`` is (K, M) with entry [k, i] the
    accumulated log-likelihood of node i under mask sample k. Weights are a
    per-node softmax over the K log-likelihoods, so g_ij depends only on
    node i's own samples.
    """
    gamma_matrix = np.asarray(gamma_matrix, dtype=float)
    masks = np.asarray(masks, dtype=float)
    node_log_liks = np.asarray(node_log_liks, dtype=float)
    k, m = node_log_liks.shape
    # Per-node self-normalized weights over the K samples, in the log domain.
    shifted = node_log_liks - node_log_liks.max(axis=0, keepdims=True)
    w = np.exp(shifted)
    w /= w.sum(axis=0, keepdims=True)                      # (K, M)
    p = sigmoid(gamma_matrix)
    g = np.einsum("ki,kij->ij", w, p[None, :, :] - masks)
    np.fill_diagonal(g, 0.0)
    return g


def edge_gradient_unbiased(gamma_matrix, mask, node_log_liks) -> np.ndarray:
    """Single-draw unbiased estimator for the additive regret decomposition:
    g_ij = (sigmoid(gamma_ij) - B_ij) * (node i's accumulated log-likelihood)."""
    gamma_matrix = np.asarray(gamma_matrix, dtype=float)
    mask = np.asarray(mask, dtype=float)
    node_log_liks = np.asarray(node_log_liks, dtype=float)
    g = (sigmoid(gamma_matrix) - mask) * node_log_liks[:, None]
    np.fill_diagonal(g, 0.0)
    return g


def _enumerate_masks(m: int):
    """All 2^(m-1) parent masks per node, as (node, list of (M,) rows)."""
    if m - 1 > 20:
        raise ValueError("enumeration infeasible")
    out = []
    for i in range(m):
        others = [j for j in range(m) if j != i]
        rows = []
        for bits in range(2 ** (m - 1)):
            row = np.zeros(m)
            for pos, j in enumerate(others):
                row[j] = (bits >> pos) & 1
            rows.append(row)
        out.append((i, rows))
    return out


def exact_edge_gradient(gamma_matrix, node_mask_log_liks) -> np.ndarray:
    """Exact gradient of -sum_i log sum_{B_i} P(B_i) L_{B_i} by enumeration.

    ``node_mask_log_liks`` is a list of M callables or dicts mapping a parent
    mask row (as a tuple of 0/1) to the node's accumulated log-likelihood.
    """
    gamma_matrix = np.asarray(gamma_matrix, dtype=float)
    m = gamma_matrix.shape[0]
    p = sigmoid(gamma_matrix)
    grad = np.zeros_like(gamma_matrix)
    for i, rows in _enumerate_masks(m):
        # log P(B_i) L_{B_i} per enumerated row.
        log_terms = []
        for row in rows:
            lp = 0.0
            for j in range(m):
                if j == i:
                    continue
                lp += np.log(p[i, j]) if row[j] else np.log1p(-p[i, j])
            log_terms.append(lp + _lookup(node_mask_log_liks[i], row))
        log_terms = np.array(log_terms)
        denom = log_sum_exp(log_terms)
        post = np.exp(log_terms - denom)       # posterior over masks for node i
        for j in range(m):
            if j == i:
                continue
            b_j = np.array([row[j] for row in rows])
            grad[i, j] = p[i, j] - float(np.sum(post * b_j))
    return grad


def exact_additive_edge_gradient(gamma_matrix, node_mask_log_liks) -> np.ndarray:
    """Exact gradient of the additive regret -sum_i sum_{B_i} P(B_i) logL_{B_i}."""
    gamma_matrix = np.asarray(gamma_matrix, dtype=float)
    m = gamma_matrix.shape[0]
    p = sigmoid(gamma_matrix)
    grad = np.zeros_like(gamma_matrix)
    for i, rows in _enumerate_masks(m):
        for row in rows:
            prob = 1.0
            for j in range(m):
                if j == i:
                    continue
                prob *= p[i, j] if row[j] else 1.0 - p[i, j]
            ll = _lookup(node_mask_log_liks[i], row)
            for j in range(m):
                if j == i:
                    continue
                # d prob / d gamma_ij = prob * (B_ij - p_ij); regret has a
                # leading minus sign.
                grad[i, j] += -prob * (row[j] - p[i, j]) * ll
    return grad


def _lookup(table, row):
    key = tuple(int(v) for v in row)
    return table(key) if callable(table) else table[key]


# ---------------------------------------------------------------------------
# Encoder meta-gradient
# ---------------------------------------------------------------------------


def encoder_meta_gradient(theta_E: float, episode_evaluator,
                          h: float = 1e-3) -> float:
    """Central finite difference of the episode regret in the encoder angle.

    ``episode_evaluator`` must hold the episode randomness fixed (common
    random numbers) across the two evaluations.
    """
    rp = episode_evaluator(theta_E + h)
    rm = episode_evaluator(theta_E - h)
    if not (np.isfinite(rp) and np.isfinite(rm)):
        raise ValueError("non-finite episode evaluation")
    return float((rp - rm) / (2.0 * h))
