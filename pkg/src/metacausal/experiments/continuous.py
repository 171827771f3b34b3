"""Continuous-variable experiment drivers.

Three studies: direction learning on a spline mechanism with mixture
density models, direction learning on vector linear-Gaussian pairs with
exactly initialized models, and joint learning of a rotation encoder with
the direction logit.
"""

from __future__ import annotations

import math
import os
from dataclasses import replace

import numpy as np

from ..learners import (GaussianMixtureMarginal, MdnConditional,
                        RotationEncoder, encode, exact_forward_modules,
                        fit_gmm_em, flip_linear_gaussian)
from ..learners.base import adapt_step
from ..meta import (EpisodeConfig, HypothesisModel, exp_regret_gradient,
                    exp_regret_objective, run_bivariate_meta_training)
from ..numkit import OptimizerState, RngStream, optimizer_step, sigmoid
from ..scm import (RotationDecoder, ancestral_sample, decode_observations,
                   intervene_on_cause, sample_linear_gaussian_scm,
                   sample_spline_scm)
from .io import NumericalError, write_csv, write_manifest


# ---------------------------------------------------------------------------
# Spline mechanism with mixture density models
# ---------------------------------------------------------------------------


def pretrain_mdn(values, cond, config, rng: RngStream) -> MdnConditional:
    """Full-batch fit of a mixture density conditional to (cond -> values)."""
    module = MdnConditional.init(rng, n_hidden=config.mdn_hidden,
                                 n_components=config.mdn_components)
    opt = OptimizerState(learning_rate=config.pretrain_lr)
    for _ in range(config.pretrain_steps):
        module, opt = adapt_step(module, values, cond, opt_state=opt)
    return module


def _mixture_episode_regret(marginal, conditional, batches, learning_rate):
    """Area under the conditional's adaptation curve plus the frozen
    marginal's score; the conditional takes one step per minibatch."""
    conditional = conditional.copy()
    opt = OptimizerState(learning_rate=learning_rate)
    regret = 0.0
    for cause, effect in batches:
        regret -= float(np.sum(conditional.log_prob(effect, cause)))
        regret -= float(np.sum(marginal.log_prob(cause)))
        conditional, opt = adapt_step(conditional, effect, cause,
                                      opt_state=opt)
    return regret


def run_continuous_multimodal(config, seed: int):
    """sigma(gamma) trajectories for the spline SCM with multimodal models.

    Conditionals are mixture density networks pretrained on the training
    distribution and re-adapted from that state on every transfer
    distribution. Marginals are mixture models learned offline by EM on
    each episode's transfer sample (not adapted inside the episode loop);
    scoring a train-distribution marginal fit instead makes the shifted
    cause marginal pay a penalty the folded effect marginal never pays,
    and the belief then converges to the wrong direction. gamma descends
    the log-mixture of exponentiated regrets.
    """
    root = RngStream(seed)
    rows, finals = [], {}
    scatter_rows = []
    for s in range(config.n_seeds):
        sub = root.child(s)
        scm = sample_spline_scm(sub.child(0), config.n_knots,
                                config.knot_range, config.knot_range)
        a, b = ancestral_sample(scm, config.n_train, sub.child(1))
        cond_b_given_a = pretrain_mdn(b, a, config, sub.child(4))
        cond_a_given_b = pretrain_mdn(a, b, config, sub.child(5))
        if s == 0:
            for mu in (-4.0, 0.0, 4.0):
                shifted = replace(scm, cause_mean=mu)
                xs, ys = ancestral_sample(shifted, config.scatter_size,
                                          sub.child(6))
                scatter_rows.extend(
                    {"mu": mu, "a": float(x), "b": float(y)}
                    for x, y in zip(xs, ys))

        gamma = 0.0
        meta_opt = OptimizerState(learning_rate=config.meta_learning_rate)
        rows.append({"seed": s, "iteration": 0, "sigma_gamma": 0.5,
                     "regret_ab": 0.0, "regret_ba": 0.0})
        for j in range(config.meta_iterations):
            ep = sub.child(100 + j)
            transfer = intervene_on_cause(scm, ep.child(0))
            ta, tb = ancestral_sample(transfer, config.T * config.batch_size,
                                      ep.child(1))
            batches = [(ta[t * config.batch_size:(t + 1) * config.batch_size],
                        tb[t * config.batch_size:(t + 1) * config.batch_size])
                       for t in range(config.T)]
            gmm_a = fit_gmm_em(ta, config.gmm_components, ep.child(2),
                                   max_iter=60, tol=1e-4)
            gmm_b = fit_gmm_em(tb, config.gmm_components, ep.child(3),
                                   max_iter=60, tol=1e-4)
            regret_ab = _mixture_episode_regret(
                gmm_a, cond_b_given_a, batches, config.adapt_lr)
            regret_ba = _mixture_episode_regret(
                gmm_b, cond_a_given_b, [(e, c) for c, e in batches],
                config.adapt_lr)
            if not (math.isfinite(regret_ab) and math.isfinite(regret_ba)):
                raise NumericalError("non-finite episode regret")
            grad = exp_regret_gradient(gamma, regret_ab, regret_ba)
            params, meta_opt = optimizer_step(
                meta_opt, {"gamma": np.array([gamma])},
                {"gamma": np.array([grad])})
            gamma = float(params["gamma"][0])
            rows.append({"seed": s, "iteration": j + 1,
                         "sigma_gamma": float(sigmoid(gamma)),
                         "regret_ab": regret_ab, "regret_ba": regret_ba})
        finals[f"seed{s}"] = rows[-1]["sigma_gamma"]
    return rows, scatter_rows, finals


def exp_continuous_multimodal(config, seed: int, out_dir: str,
                              profile: str = "desk"):
    config.validate()
    rows, scatter_rows, finals = run_continuous_multimodal(config, seed)
    traj_path = write_csv(
        os.path.join(out_dir, "continuous.csv"),
        ["seed", "iteration", "sigma_gamma", "regret_ab", "regret_ba"], rows)
    scatter_path = write_csv(
        os.path.join(out_dir, "continuous_scatter.csv"), ["mu", "a", "b"],
        scatter_rows)
    summary = {"final_sigma_gamma": finals}
    write_manifest(out_dir, "continuous", config, seed, profile,
                   [traj_path, scatter_path], summary=summary)
    return summary


# ---------------------------------------------------------------------------
# Vector linear-Gaussian pairs
# ---------------------------------------------------------------------------


def run_linear_gaussian(config, seed: int):
    """sigma(gamma) trajectories with exactly initialized Gaussian models.

    No pretraining: the forward modules take the ground-truth parameters
    and the reverse modules their analytic flip, so both factorizations
    score every point identically before the first intervention.
    """
    root = RngStream(seed)
    rows, finals = [], {}
    joint_gaps = {}
    for s in range(config.n_seeds):
        sub = root.child(s)
        scm = sample_linear_gaussian_scm(config.dim, sub.child(0))
        marg_a, cond_b_given_a = exact_forward_modules(scm)
        marg_b, cond_a_given_b = flip_linear_gaussian(scm)
        model_ab = HypothesisModel(marg_a, cond_b_given_a,
                                   cause_is_first=True)
        model_ba = HypothesisModel(marg_b, cond_a_given_b,
                                   cause_is_first=False)
        a, b = ancestral_sample(scm, config.check_points, sub.child(1))
        joint_gaps[f"seed{s}"] = float(np.max(np.abs(
            model_ab.log_joint(a, b) - model_ba.log_joint(a, b))))
        ep_config = EpisodeConfig(
            T=config.T, batch_size=config.batch_size,
            m=config.T * config.batch_size, J=config.episodes,
            optimizer_kind=config.adapt_optimizer,
            learning_rate=config.learning_rate,
            meta_learning_rate=config.meta_learning_rate)
        trajectory, _ = run_bivariate_meta_training(
            scm, model_ab, model_ba, ep_config, sub.child(2))
        rows.extend({"seed": s, "episode": episode,
                     "sigma_gamma": float(value)}
                    for episode, value in enumerate(trajectory))
        finals[f"seed{s}"] = float(trajectory[-1])
    return rows, finals, joint_gaps


def exp_linear_gaussian(config, seed: int, out_dir: str,
                        profile: str = "desk"):
    config.validate()
    rows, finals, joint_gaps = run_linear_gaussian(config, seed)
    csv_path = write_csv(os.path.join(out_dir, "linear_gaussian.csv"),
                         ["seed", "episode", "sigma_gamma"], rows)
    summary = {"final_sigma_gamma": finals,
               "initial_log_joint_gap": joint_gaps}
    write_manifest(out_dir, "linear-gaussian", config, seed, profile,
                   [csv_path], summary=summary)
    return summary


# ---------------------------------------------------------------------------
# Joint encoder and direction learning
# ---------------------------------------------------------------------------


def _init_mixture_marginal(config) -> GaussianMixtureMarginal:
    k = config.gmm_components
    return GaussianMixtureMarginal(
        weight_logits=np.zeros(k),
        means=np.linspace(-config.knot_range, config.knot_range, k),
        log_vars=np.full(k, np.log(4.0)))


def _split_batches(u, v, batch_size):
    n = u.shape[0] // batch_size
    return [(u[t * batch_size:(t + 1) * batch_size],
             v[t * batch_size:(t + 1) * batch_size]) for t in range(n)]


class _EncoderEpisode:
    """One meta-iteration's data, shared across encoder-angle evaluations.

    Holding the observations fixed makes the finite-difference gradient a
    common-random-numbers estimate: the two evaluations differ only through
    the encoder angle.
    """

    def __init__(self, modules, gamma, train_xy, transfer_xy, config,
                 em_rng, theta_center: float):
        self.modules = modules        # marg_u, cond_v_given_u, marg_v, cond_u_given_v
        self.gamma = gamma
        self.train_xy = train_xy
        self.transfer_xy = transfer_xy
        self.config = config
        # The scored marginals are EM fits to the transfer sample encoded
        # at the centre angle, shared by every evaluation in the episode.
        # Refitting per evaluation makes the objective discontinuous in
        # theta (EM lands in different local optima for theta +/- h) and
        # drowns the finite-difference signal; holding the fit fixed only
        # drops a second-order term, since EM leaves the fit at a
        # stationary point of the scored log-likelihood.
        tu, tv = encode(RotationEncoder(theta_center), *transfer_xy)
        self.gmm_u = fit_gmm_em(tu, config.gmm_components,
                                em_rng.child(0), max_iter=60, tol=1e-4)
        self.gmm_v = fit_gmm_em(tv, config.gmm_components,
                                em_rng.child(1), max_iter=60, tol=1e-4)
        # The continued training of the four modules is likewise computed
        # once at the centre angle: re-running twenty optimizer steps at
        # theta +/- h amplifies the encoding perturbation chaotically and
        # buries the finite-difference signal, while the omitted
        # theta-derivative is second-order (the trained modules sit near a
        # stationary point of their fit).
        u, v = encode(RotationEncoder(theta_center), *train_xy)
        marg_u, cond_vu, marg_v, cond_uv = [m.copy() for m in modules]
        opts = [OptimizerState(learning_rate=config.model_lr)
                for _ in range(4)]
        for bu, bv in _split_batches(u, v, config.batch_size):
            marg_u, opts[0] = adapt_step(marg_u, bu, opt_state=opts[0])
            cond_vu, opts[1] = adapt_step(cond_vu, bv, bu, opt_state=opts[1])
            marg_v, opts[2] = adapt_step(marg_v, bv, opt_state=opts[2])
            cond_uv, opts[3] = adapt_step(cond_uv, bu, bv, opt_state=opts[3])
        self.trained = [marg_u, cond_vu, marg_v, cond_uv]

    def evaluate(self, theta: float):
        config = self.config
        tu, tv = encode(RotationEncoder(theta), *self.transfer_xy)
        cond_vu, cond_uv = self.trained[1], self.trained[3]
        gmm_u, gmm_v = self.gmm_u, self.gmm_v
        adapt_uv, adapt_vu = cond_vu.copy(), cond_uv.copy()
        a_opts = [OptimizerState(learning_rate=config.model_lr)
                  for _ in range(2)]
        regret_uv = regret_vu = 0.0
        for bu, bv in _split_batches(tu, tv, config.batch_size):
            regret_uv -= float(np.sum(adapt_uv.log_prob(bv, bu)))
            regret_uv -= float(np.sum(gmm_u.log_prob(bu)))
            adapt_uv, a_opts[0] = adapt_step(adapt_uv, bv, bu,
                                             opt_state=a_opts[0])
            regret_vu -= float(np.sum(adapt_vu.log_prob(bu, bv)))
            regret_vu -= float(np.sum(gmm_v.log_prob(bv)))
            adapt_vu, a_opts[1] = adapt_step(adapt_vu, bu, bv,
                                             opt_state=a_opts[1])
        objective = exp_regret_objective(self.gamma, regret_uv, regret_vu)
        return objective, regret_uv, regret_vu, self.trained

    def objective(self, theta: float) -> float:
        return self.evaluate(theta)[0]


def run_encoder(config, seed: int, theta_init: float | None = None):
    """theta_E and gamma trajectories for the rotation encoder study.

    Observations come from the spline SCM through a hidden rotation by
    theta_D; the encoder rotates them back by theta_E. Per meta-iteration
    the four modules continue training on freshly encoded training data,
    then the conditionals adapt on an encoded transfer distribution to
    produce regrets; gamma steps on the regret mixture and theta_E on its
    common-random-numbers finite difference.
    """
    from ..meta import encoder_meta_gradient

    root = RngStream(seed)
    rows, finals = [], {}
    for s in range(config.n_seeds):
        sub = root.child(s)
        scm = sample_spline_scm(sub.child(0), config.n_knots,
                                config.knot_range, config.knot_range)
        decoder = RotationDecoder(config.theta_D)
        if theta_init is None:
            theta = float(sub.child(1).generator.uniform(
                -config.init_scale, config.init_scale))
        else:
            theta = theta_init
        gamma = 0.0
        modules = [_init_mixture_marginal(config),
                   MdnConditional.init(sub.child(2),
                                       n_hidden=config.mdn_hidden,
                                       n_components=config.mdn_components),
                   _init_mixture_marginal(config),
                   MdnConditional.init(sub.child(3),
                                       n_hidden=config.mdn_hidden,
                                       n_components=config.mdn_components)]
        theta_opt = OptimizerState(learning_rate=config.theta_lr)
        gamma_opt = OptimizerState(learning_rate=config.meta_learning_rate)
        rows.append({"seed": s, "iteration": 0, "theta_E": theta,
                     "gamma": gamma, "sigma_gamma": 0.5,
                     "regret_uv": 0.0, "regret_vu": 0.0})
        for j in range(config.meta_iterations):
            ep = sub.child(100 + j)
            a, b = ancestral_sample(scm, config.T_train * config.batch_size,
                                    ep.child(0))
            transfer = intervene_on_cause(scm, ep.child(1))
            ta, tb = ancestral_sample(transfer, config.T * config.batch_size,
                                      ep.child(2))
            episode = _EncoderEpisode(
                modules, gamma, decode_observations(decoder, a, b),
                decode_observations(decoder, ta, tb), config, ep.child(9),
                theta_center=theta)
            theta_grad = encoder_meta_gradient(theta, episode.objective,
                                               h=config.fd_step)
            _, regret_uv, regret_vu, trained = episode.evaluate(theta)
            if not (math.isfinite(regret_uv) and math.isfinite(regret_vu)):
                raise NumericalError("non-finite episode regret")
            modules = trained
            gamma_grad = exp_regret_gradient(gamma, regret_uv, regret_vu)
            params, gamma_opt = optimizer_step(
                gamma_opt, {"gamma": np.array([gamma])},
                {"gamma": np.array([gamma_grad])})
            gamma = float(params["gamma"][0])
            # The angle step holds its full size for the first half of the
            # run (crossing the flat entangled shoulder is partly
            # diffusive and needs large steps), then decays exponentially
            # to a tenth of it so theta settles instead of jittering
            # around the recovered angle (RMSprop-normalised steps never
            # shrink on their own; the random-walk component of the final
            # angle scales with the final step size).
            frac = j / config.meta_iterations
            theta_opt.learning_rate = config.theta_lr * (
                1.0 if frac < 0.5 else 0.1 ** (2.0 * (frac - 0.5)))
            params, theta_opt = optimizer_step(
                theta_opt, {"theta": np.array([theta])},
                {"theta": np.array([theta_grad])})
            theta = float(params["theta"][0])
            rows.append({"seed": s, "iteration": j + 1, "theta_E": theta,
                         "gamma": gamma,
                         "sigma_gamma": float(sigmoid(gamma)),
                         "regret_uv": regret_uv, "regret_vu": regret_vu})
        finals[f"seed{s}"] = {"theta_E": theta, "sigma_gamma":
                              float(sigmoid(gamma))}
    return rows, finals


def exp_encoder(config, seed: int, out_dir: str, profile: str = "desk"):
    config.validate()
    rows, finals = run_encoder(config, seed)
    csv_path = write_csv(
        os.path.join(out_dir, "encoder.csv"),
        ["seed", "iteration", "theta_E", "gamma", "sigma_gamma",
         "regret_uv", "regret_vu"], rows)
    summary = {"final": finals}
    write_manifest(out_dir, "encoder", config, seed, profile, [csv_path],
                   summary=summary)
    return summary
