import numpy as np
import pytest

from helpers import check_gradients
from metacausal.learners import (GaussianMarginal, LinearGaussianConditional,
                                 exact_forward_modules, flip_linear_gaussian)
from metacausal.numkit import RngStream
from metacausal.scm import (LinearGaussianScm, ancestral_sample,
                            sample_linear_gaussian_scm)


class TestGaussianModules:
    def test_standard_normal_log_prob(self):
        m = GaussianMarginal.from_moments(np.zeros(1), np.eye(1))
        assert m.log_prob([[0.0]])[0] == pytest.approx(-0.918938533, abs=1e-9)

    def test_marginal_gradient_finite_diff(self):
        rng = RngStream(0)
        for i in range(5):
            gen = rng.child(i).generator
            d = 3
            a = gen.standard_normal((d, d))
            m = GaussianMarginal.from_moments(gen.standard_normal(d),
                                              a @ a.T + d * np.eye(d))
            x = gen.standard_normal((8, d))
            check_gradients(m, x)

    def test_conditional_gradient_finite_diff(self):
        rng = RngStream(1)
        for i in range(5):
            gen = rng.child(i).generator
            d = 3
            a = gen.standard_normal((d, d))
            m = LinearGaussianConditional.from_moments(
                gen.standard_normal((d, d)), gen.standard_normal(d),
                a @ a.T + d * np.eye(d))
            x = gen.standard_normal((8, d))
            y = gen.standard_normal((8, d))
            check_gradients(m, y, x)


class TestFlip:
    def test_scalar_case(self):
        scm = LinearGaussianScm([0.0], [[1.0]], [0.0], [[1.0]], [[1.0]])
        marg_b, cond_ab = flip_linear_gaussian(scm)
        assert marg_b.mu[0] == pytest.approx(0.0, abs=1e-12)
        assert marg_b.covariance()[0, 0] == pytest.approx(2.0, abs=1e-12)
        assert cond_ab.W1[0, 0] == pytest.approx(0.5, abs=1e-12)
        assert cond_ab.covariance()[0, 0] == pytest.approx(0.5, abs=1e-12)

    def test_scalar_case_monte_carlo(self):
        scm = LinearGaussianScm([0.0], [[1.0]], [0.0], [[1.0]], [[1.0]])
        a, b = ancestral_sample(scm, 200_000, RngStream(2))
        slope = np.cov(a[:, 0], b[:, 0])[0, 1] / np.var(b[:, 0])
        assert slope == pytest.approx(0.5, abs=0.01)

    def test_no_coupling(self):
        scm = LinearGaussianScm([1.0, 0.0], np.eye(2), [0.5, 0.5],
                                np.zeros((2, 2)), np.eye(2))
        _, cond_ab = flip_linear_gaussian(scm)
        np.testing.assert_allclose(cond_ab.W1, 0.0, atol=1e-12)

    def test_joint_density_agreement(self):
        scm = sample_linear_gaussian_scm(5, RngStream(3))
        marg_a, cond_ba = exact_forward_modules(scm)
        marg_b, cond_ab = flip_linear_gaussian(scm)
        a, b = ancestral_sample(scm, 100, RngStream(4))
        log_ab = marg_a.log_prob(a) + cond_ba.log_prob(b, a)
        log_ba = marg_b.log_prob(b) + cond_ab.log_prob(a, b)
        np.testing.assert_allclose(log_ab, log_ba, atol=1e-8)

    def test_rejects_non_spd(self):
        with pytest.raises(np.linalg.LinAlgError):
            LinearGaussianScm([0.0], [[-1.0]], [0.0], [[1.0]], [[1.0]])
