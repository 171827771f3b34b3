"""Discrete-variable experiment drivers.

Four studies on categorical ground truth: the non-identifiability of the
two factorizations from observational data, the adaptation-speed advantage
of the causal factorization after an intervention, meta-learning the
direction logit gamma, and meta-learning per-edge beliefs with masked MLPs.
"""

from __future__ import annotations

import os

import numpy as np

from ..learners import (MaskedMlpConditional, TabularConditional,
                        TabularMarginal, fit_tabular_mle)
from ..learners.base import adapt_step
from ..meta import (EpisodeConfig, HypothesisModel, edge_gradient_ksample,
                    minibatch_stream, run_bivariate_meta_training,
                    sample_structures)
from ..numkit import (OptimizerState, RngStream, log_sigmoid, log_softmax,
                      optimizer_step, sigmoid)
from ..scm import ancestral_sample, intervene_on_cause, sample_categorical_scm
from .io import NumericalError, write_csv, write_manifest


# ---------------------------------------------------------------------------
# Shared tabular helpers
# ---------------------------------------------------------------------------


def exact_tabular_hypotheses(scm):
    """Both factorizations with logits set to the exact ground-truth logs."""
    joint = scm.joint()
    model_ab = HypothesisModel(
        TabularMarginal(np.log(joint.sum(axis=1))),
        TabularConditional(np.log(joint / joint.sum(axis=1, keepdims=True))),
        cause_is_first=True)
    joint_t = joint.T
    model_ba = HypothesisModel(
        TabularMarginal(np.log(joint_t.sum(axis=1))),
        TabularConditional(np.log(joint_t / joint_t.sum(axis=1,
                                                        keepdims=True))),
        cause_is_first=False)
    return model_ab, model_ba


def random_tabular_hypotheses(n_values: int, rng: RngStream, scale=0.01):
    gen = rng.generator
    def model(first):
        return HypothesisModel(
            TabularMarginal(scale * gen.standard_normal(n_values)),
            TabularConditional(scale * gen.standard_normal((n_values,
                                                            n_values))),
            cause_is_first=first)
    return model(True), model(False)


def tabular_log_joint_table(model: HypothesisModel) -> np.ndarray:
    """(N, N) table of log P(a, b) in (a, b) orientation."""
    table = (log_softmax(model.marginal.logits)[:, None]
             + log_softmax(model.conditional.logits, axis=1))
    return table if model.cause_is_first else table.T


def pair_counts(a, b, n_values: int) -> np.ndarray:
    counts = np.zeros((n_values, n_values))
    np.add.at(counts, (a, b), 1.0)
    return counts


def mean_log_lik(model: HypothesisModel, counts: np.ndarray) -> float:
    return float(np.sum(counts * tabular_log_joint_table(model))
                 / counts.sum())


def _adapt_model(model: HypothesisModel, a, b, opts):
    """One optimizer step on both modules of one factorization, in place."""
    c, e = model.split(a, b)
    model.marginal, opts[0] = adapt_step(model.marginal, c, opt_state=opts[0])
    model.conditional, opts[1] = adapt_step(model.conditional, e, c,
                                            opt_state=opts[1])


def _fresh_opts(config):
    return [OptimizerState(kind=config.optimizer_kind,
                           learning_rate=config.learning_rate)
            for _ in range(2)]


# ---------------------------------------------------------------------------
# Non-identifiability from observational data
# ---------------------------------------------------------------------------


def run_nonidentifiability(config, seed: int):
    """Exact-MLE equality check plus a full-batch training race.

    Both factorizations are trained on one fixed observational sample; the
    per-step rows track the train/test mean log-likelihood of each and
    their differences, which shrink toward zero as both reach the shared
    maximum-likelihood joint.
    """
    root = RngStream(seed)
    scm = sample_categorical_scm(config.n_values, root.child(0))
    a_tr, b_tr = ancestral_sample(scm, config.n_train, root.child(1))
    a_te, b_te = ancestral_sample(scm, config.n_test, root.child(2))
    counts_tr = pair_counts(a_tr, b_tr, config.n_values)
    counts_te = pair_counts(a_te, b_te, config.n_values)

    marg_ab, cond_ab, _ = fit_tabular_mle(a_tr, b_tr, config.n_values)
    marg_ba, cond_ba, _ = fit_tabular_mle(b_tr, a_tr, config.n_values)
    joint_ab = marg_ab.probs()[:, None] * cond_ab.probs()
    joint_ba = (marg_ba.probs()[:, None] * cond_ba.probs()).T
    exact_gap = float(np.max(np.abs(joint_ab - joint_ba)))

    model_ab, model_ba = random_tabular_hypotheses(config.n_values,
                                                   root.child(3))
    opts_ab, opts_ba = _fresh_opts(config), _fresh_opts(config)
    rows = []
    for step in range(config.n_steps + 1):
        row = {
            "step": step,
            "logl_ab_train": mean_log_lik(model_ab, counts_tr),
            "logl_ba_train": mean_log_lik(model_ba, counts_tr),
            "logl_ab_test": mean_log_lik(model_ab, counts_te),
            "logl_ba_test": mean_log_lik(model_ba, counts_te),
        }
        row["diff_train"] = row["logl_ab_train"] - row["logl_ba_train"]
        row["diff_test"] = row["logl_ab_test"] - row["logl_ba_test"]
        rows.append(row)
        if step < config.n_steps:
            _adapt_model(model_ab, a_tr, b_tr, opts_ab)
            _adapt_model(model_ba, a_tr, b_tr, opts_ba)
    summary = {"exact_max_joint_gap": exact_gap,
               "final_test_diff": rows[-1]["diff_test"]}
    return rows, summary


def exp_nonidentifiability(config, seed: int, out_dir: str,
                           profile: str = "desk"):
    config.validate()
    rows, summary = run_nonidentifiability(config, seed)
    header = ["step", "logl_ab_train", "logl_ba_train", "logl_ab_test",
              "logl_ba_test", "diff_train", "diff_test"]
    csv_path = write_csv(os.path.join(out_dir, "nonident.csv"), header, rows)
    write_manifest(out_dir, "nonident", config, seed, profile, [csv_path],
                   summary=summary)
    return summary


# ---------------------------------------------------------------------------
# Adaptation speed after an intervention
# ---------------------------------------------------------------------------


def run_adaptation_speed(config, seed: int):
    """Test log-likelihood curves while adapting one example per step.

    Both factorizations start exactly at the training distribution, the
    cause marginal is replaced, and each adaptation step consumes a single
    transfer example. Curves are summarized by median and quartiles over
    all (training distribution, transfer distribution) pairs.
    """
    root = RngStream(seed)
    n_steps = config.n_steps
    runs = config.n_train_dists * config.n_transfer_dists
    causal = np.zeros((runs, n_steps + 1))
    anticausal = np.zeros((runs, n_steps + 1))
    r = 0
    for i in range(config.n_train_dists):
        scm = sample_categorical_scm(config.n_values, root.child(i))
        pre_ab, pre_ba = exact_tabular_hypotheses(scm)
        for j in range(config.n_transfer_dists):
            ep = root.child(10_000 + i * config.n_transfer_dists + j)
            transfer = intervene_on_cause(scm, ep.child(0))
            counts = pair_counts(
                *ancestral_sample(transfer, config.test_size, ep.child(1)),
                config.n_values)
            a, b = ancestral_sample(transfer, n_steps, ep.child(2))
            model_ab, model_ba = pre_ab.copy(), pre_ba.copy()
            opts_ab, opts_ba = _fresh_opts(config), _fresh_opts(config)
            causal[r, 0] = mean_log_lik(model_ab, counts)
            anticausal[r, 0] = mean_log_lik(model_ba, counts)
            for t in range(n_steps):
                _adapt_model(model_ab, a[t:t + 1], b[t:t + 1], opts_ab)
                _adapt_model(model_ba, a[t:t + 1], b[t:t + 1], opts_ba)
                causal[r, t + 1] = mean_log_lik(model_ab, counts)
                anticausal[r, t + 1] = mean_log_lik(model_ba, counts)
            r += 1

    rows = []
    for t in range(n_steps + 1):
        rows.append({
            "step": t,
            "causal_median": float(np.median(causal[:, t])),
            "causal_q25": float(np.percentile(causal[:, t], 25)),
            "causal_q75": float(np.percentile(causal[:, t], 75)),
            "anticausal_median": float(np.median(anticausal[:, t])),
            "anticausal_q25": float(np.percentile(anticausal[:, t], 25)),
            "anticausal_q75": float(np.percentile(anticausal[:, t], 75)),
        })
    gaps = np.array([row["causal_median"] - row["anticausal_median"]
                     for row in rows])
    summary = {
        "causal_leads_first_20": bool(np.all(gaps[1:21] >= 0)),
        "argmax_median_gap": int(np.argmax(gaps)),
        "gap_step_10": float(gaps[min(10, n_steps)]),
        "gap_final": float(gaps[-1]),
    }
    return rows, summary


def exp_adaptation_speed(config, seed: int, out_dir: str,
                         profile: str = "desk"):
    config.validate()
    rows, summary = run_adaptation_speed(config, seed)
    header = ["step", "causal_median", "causal_q25", "causal_q75",
              "anticausal_median", "anticausal_q25", "anticausal_q75"]
    csv_path = write_csv(os.path.join(out_dir, "adapt_speed.csv"), header,
                         rows)
    write_manifest(out_dir, "adapt-speed", config, seed, profile, [csv_path],
                   summary=summary)
    return summary


# ---------------------------------------------------------------------------
# Bivariate direction learning with tabular modules
# ---------------------------------------------------------------------------


def run_bivariate_discrete(config, seed: int):
    """sigma(gamma) trajectories across table sizes and seeds."""
    root = RngStream(seed)
    traj_rows, trace_rows = [], []
    finals = {}
    for n_values in config.n_values_list:
        for s in range(config.n_seeds):
            sub = root.child(n_values).child(s)
            scm = sample_categorical_scm(n_values, sub.child(0))
            model_ab, model_ba = exact_tabular_hypotheses(scm)
            ep_config = EpisodeConfig(
                T=config.T, batch_size=config.batch_size, m=config.m,
                J=config.episodes, learning_rate=config.learning_rate,
                meta_learning_rate=config.meta_learning_rate)
            trajectory, traces = run_bivariate_meta_training(
                scm, model_ab, model_ba, ep_config, sub.child(1))
            for episode, value in enumerate(trajectory):
                traj_rows.append({"n_values": n_values, "seed": s,
                                  "episode": episode,
                                  "sigma_gamma": float(value)})
            for episode, trace in enumerate(traces):
                for row in trace.csv_rows(episode):
                    trace_rows.append({"n_values": n_values, "seed": s,
                                       **row})
            finals[f"n{n_values}_seed{s}"] = float(trajectory[-1])
    return traj_rows, trace_rows, finals


def exp_bivariate_discrete(config, seed: int, out_dir: str,
                           profile: str = "desk"):
    config.validate()
    traj_rows, trace_rows, finals = run_bivariate_discrete(config, seed)
    traj_path = write_csv(
        os.path.join(out_dir, "bivariate_discrete.csv"),
        ["n_values", "seed", "episode", "sigma_gamma"], traj_rows)
    trace_path = write_csv(
        os.path.join(out_dir, "bivariate_traces.csv"),
        ["n_values", "seed", "episode", "step", "logL_ab_step",
         "logL_ba_step", "logL_ab_cum", "logL_ba_cum", "delta", "regret",
         "sigma_gamma"], trace_rows)
    summary = {"final_sigma_gamma": finals}
    write_manifest(out_dir, "bivariate-discrete", config, seed, profile,
                   [traj_path, trace_path], summary=summary)
    return summary


# ---------------------------------------------------------------------------
# Edge-belief learning with masked MLP mechanisms
# ---------------------------------------------------------------------------


def structure_cross_entropy(gamma_matrix, true_edges) -> float:
    """Sum over off-diagonal entries of CE(true edge, sigmoid(gamma_ij))."""
    gamma_matrix = np.asarray(gamma_matrix, dtype=float)
    true_edges = np.asarray(true_edges, dtype=float)
    m = gamma_matrix.shape[0]
    off = ~np.eye(m, dtype=bool)
    ce = -(true_edges * log_sigmoid(gamma_matrix)
           + (1.0 - true_edges) * log_sigmoid(-gamma_matrix))
    return float(ce[off].sum())


def pretrain_mlp_nodes(scm, config, rng: RngStream):
    """Fully connected node mechanisms fit to the training distribution.

    Training uses a fresh minibatch per step rather than a small fixed
    dataset; reusing one tiny dataset memorizes it, which makes every
    parent-conditioned model look worse than its no-parent counterpart on
    held-out transfer data and drives all edge beliefs to zero.
    """
    n_vars = config.n_variables
    n_values = scm.n_values
    nodes = [MaskedMlpConditional.init(i, np.ones(n_vars), n_vars, n_values,
                                       rng.child(1 + i))
             for i in range(n_vars)]
    opts = [OptimizerState(learning_rate=config.pretrain_lr)
            for _ in nodes]
    for t in range(config.pretrain_steps):
        a, b = ancestral_sample(scm, config.pretrain_batch,
                                rng.child(100 + t))
        values = np.column_stack([a, b])
        for i, node in enumerate(nodes):
            nodes[i], opts[i] = adapt_step(node, values, opt_state=opts[i])
    return nodes


def run_mlp_structure(config, seed: int):
    """Edge-belief cross-entropy trajectories for the two-node MLP model.

    Per meta-example: intervene on the cause, sample parent masks from the
    current beliefs, adapt per-mask copies of the pretrained mechanisms on
    the shared transfer minibatches, and take one optimizer step on the
    gamma matrix along the K-sample gradient estimate.
    """
    root = RngStream(seed)
    true_edges = np.zeros((config.n_variables, config.n_variables))
    true_edges[1, 0] = 1.0        # the cause is node 0, the effect node 1
    stream_config = EpisodeConfig(T=config.T, batch_size=config.batch_size,
                                  m=config.T * config.batch_size)
    rows = []
    finals = {}
    for n_values in config.n_values_list:
        for s in range(config.n_seeds):
            sub = root.child(n_values).child(s)
            scm = sample_categorical_scm(n_values, sub.child(0))
            nodes = pretrain_mlp_nodes(scm, config, sub.child(1))
            gamma = np.zeros((config.n_variables, config.n_variables))
            meta_opt = OptimizerState(
                learning_rate=config.meta_learning_rate)
            rows.append({"n_values": n_values, "seed": s, "meta_example": 0,
                         "cross_entropy": structure_cross_entropy(
                             gamma, true_edges),
                         "sigma_effect_edge": 0.5, "sigma_reverse_edge": 0.5})
            for e in range(config.meta_examples):
                ep = sub.child(100 + e)
                transfer = intervene_on_cause(scm, ep.child(0))
                batches = minibatch_stream(transfer, stream_config,
                                           ep.child(1))
                masks = sample_structures(gamma, config.n_structures,
                                          ep.child(2))
                node_ll = np.zeros((config.n_structures,
                                    config.n_variables))
                for k in range(config.n_structures):
                    models = [node.with_mask(masks[k, i])
                              for i, node in enumerate(nodes)]
                    opts = [OptimizerState(kind=config.adapt_optimizer,
                                           learning_rate=config.learning_rate)
                            for _ in models]
                    for a, b in batches:
                        values = np.column_stack([a, b])
                        for i, model in enumerate(models):
                            node_ll[k, i] += float(
                                np.sum(model.log_prob(values)))
                            models[i], opts[i] = adapt_step(
                                model, values, opt_state=opts[i])
                grad = edge_gradient_ksample(gamma, masks, node_ll)
                params, meta_opt = optimizer_step(meta_opt, {"gamma": gamma},
                                                  {"gamma": grad})
                gamma = params["gamma"]
                rows.append({
                    "n_values": n_values, "seed": s, "meta_example": e + 1,
                    "cross_entropy": structure_cross_entropy(gamma,
                                                             true_edges),
                    "sigma_effect_edge": float(sigmoid(gamma[1, 0])),
                    "sigma_reverse_edge": float(sigmoid(gamma[0, 1])),
                })
            finals[f"n{n_values}_seed{s}"] = rows[-1]["cross_entropy"]
    return rows, finals


def exp_mlp_structure(config, seed: int, out_dir: str,
                      profile: str = "desk"):
    config.validate()
    rows, finals = run_mlp_structure(config, seed)
    csv_path = write_csv(
        os.path.join(out_dir, "mlp_structure.csv"),
        ["n_values", "seed", "meta_example", "cross_entropy",
         "sigma_effect_edge", "sigma_reverse_edge"], rows)
    summary = {"final_cross_entropy": finals}
    write_manifest(out_dir, "mlp-structure", config, seed, profile,
                   [csv_path], summary=summary)
    return summary
