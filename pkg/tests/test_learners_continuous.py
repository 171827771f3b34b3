import numpy as np
import pytest

from helpers import check_gradients
from metacausal.learners import (GaussianMixtureMarginal, MdnConditional,
                                 adapt_step, fit_gmm_em)
from metacausal.numkit import OptimizerState, RngStream


class TestGmmLogProb:
    def test_single_dominant_component(self):
        # one component with weight ~1 at N(0, 1): logp(0) = -0.5*log(2*pi)
        m = GaussianMixtureMarginal(np.array([20.0, -20.0]),
                                    np.array([0.0, 5.0]),
                                    np.array([0.0, 0.0]))
        assert m.log_prob([0.0])[0] == pytest.approx(-0.918938533, abs=1e-6)

    def test_gradient_finite_diff(self):
        rng = RngStream(0)
        for i in range(10):
            gen = rng.child(i).generator
            m = GaussianMixtureMarginal(gen.standard_normal(4),
                                        gen.uniform(-3, 3, 4),
                                        gen.uniform(-1, 1, 4))
            x = gen.uniform(-4, 4, 8)
            check_gradients(m, x)


class TestGmmEm:
    def test_single_component_closed_form(self):
        x = RngStream(1).generator.standard_normal(500) * 2.0 + 3.0
        m = fit_gmm_em(x, 1, RngStream(2))
        assert m.means[0] == pytest.approx(x.mean(), abs=1e-9)
        assert np.exp(m.log_vars[0]) == pytest.approx(x.var(), abs=1e-9)

    def test_two_clusters(self):
        gen = RngStream(3).generator
        x = np.concatenate([gen.normal(-10, 0.5, 500),
                            gen.normal(10, 0.5, 500)])
        m = fit_gmm_em(x, 2, RngStream(4))
        means = np.sort(m.means)
        assert abs(means[0] + 10) < 0.2
        assert abs(means[1] - 10) < 0.2

    def test_monotone_log_likelihood(self):
        gen = RngStream(5).generator
        x = gen.standard_normal(300) * 1.5
        m = fit_gmm_em(x, 5, RngStream(6))
        trace = m.em_log_likelihoods
        assert np.all(np.diff(trace) >= -1e-9)

    def test_needs_distinct_samples(self):
        with pytest.raises(ValueError):
            fit_gmm_em(np.zeros(10), 2, RngStream(0))

    def test_variance_floor_clamped(self):
        x = np.array([0.0, 0.0, 0.0, 0.0, 1.0, 2.0])
        m = fit_gmm_em(x, 2, RngStream(7), max_iter=500)
        assert np.all(np.exp(m.log_vars) >= 1e-6 - 1e-15)


class TestMdn:
    def test_dominant_component_log_prob(self):
        rng = RngStream(8)
        m = MdnConditional.init(rng, n_hidden=4, n_components=2, scale=0.0)
        # zero weights: heads produce b* only; force one dominant component
        m = m.with_params({**m.get_params(),
                           "bp": np.array([20.0, -20.0]),
                           "bm": np.array([0.0, 3.0]),
                           "bs": np.array([0.0, 0.0])})
        lp = m.log_prob([0.0], [1.0])[0]
        assert lp == pytest.approx(-0.918938533, abs=1e-6)

    def test_gradient_finite_diff(self):
        rng = RngStream(9)
        for i in range(10):
            m = MdnConditional.init(rng.child(i), n_hidden=6, n_components=3,
                                    scale=0.3)
            gen = rng.child(100 + i).generator
            x = gen.uniform(-3, 3, 8)
            y = gen.uniform(-3, 3, 8)
            check_gradients(m, y, x)

    def test_adapt_improves_fit(self):
        rng = RngStream(10)
        m = MdnConditional.init(rng, n_hidden=8, n_components=3)
        gen = rng.child(1).generator
        x = gen.uniform(-2, 2, 256)
        y = 2.0 * x + gen.standard_normal(256) * 0.3
        opt = OptimizerState(learning_rate=0.01)
        before = m.log_prob(y, x).mean()
        for _ in range(200):
            m, opt = adapt_step(m, y, x, opt)
        assert m.log_prob(y, x).mean() > before + 0.5
