import numpy as np
import pytest

from metacausal.numkit import RngStream
from metacausal.scm import (CategoricalScm, LinearGaussianScm, RotationDecoder,
                            SplineScm, ancestral_sample, decode_observations,
                            eval_spline, intervene_on_cause, rotation_matrix,
                            sample_categorical_scm, sample_linear_gaussian_scm,
                            sample_spline_scm, scm_from_json, scm_to_json)


class TestCategoricalScm:
    def test_sample_scm_simplexes(self):
        scm = sample_categorical_scm(10, RngStream(0))
        assert scm.pi_A.sum() == pytest.approx(1.0, abs=1e-12)
        np.testing.assert_allclose(scm.pi_B_given_A.sum(axis=1), 1.0,
                                   atol=1e-12)

    def test_rejects_small_n(self):
        with pytest.raises(ValueError):
            sample_categorical_scm(1, RngStream(0))

    def test_determinism(self):
        a = sample_categorical_scm(2, RngStream(42, 7))
        b = sample_categorical_scm(2, RngStream(42, 7))
        np.testing.assert_array_equal(a.pi_A, b.pi_A)
        np.testing.assert_array_equal(a.pi_B_given_A, b.pi_B_given_A)

    def test_marginal_mean_uniform(self):
        root = RngStream(3)
        draws = np.array([sample_categorical_scm(2, root.child(i)).pi_A[0]
                          for i in range(10_000)])
        se = np.sqrt(1.0 / 12.0 / draws.size)
        assert abs(draws.mean() - 0.5) < 3 * se

    def test_degenerate_marginal_sampling(self):
        pi_a = np.zeros(5)
        pi_a[3] = 1.0
        scm = CategoricalScm(pi_a, np.full((5, 5), 0.2))
        a, _ = ancestral_sample(scm, 200, RngStream(0))
        assert np.all(a == 3)

    def test_empirical_joint(self):
        scm = sample_categorical_scm(10, RngStream(1))
        n = 100_000
        a, b = ancestral_sample(scm, n, RngStream(2))
        counts = np.zeros((10, 10))
        np.add.at(counts, (a, b), 1.0)
        joint = scm.joint()
        se = np.sqrt(joint * (1 - joint) / n)
        assert np.all(np.abs(counts / n - joint) <= 3 * se + 1e-12)

    def test_marginal_chi_square(self):
        # chi-square GOF of the empirical A marginal, alpha = 0.001
        scm = sample_categorical_scm(10, RngStream(9))
        a, _ = ancestral_sample(scm, 100_000, RngStream(10))
        obs = np.bincount(a, minlength=10)
        exp = scm.pi_A * 100_000
        stat = np.sum((obs - exp) ** 2 / exp)
        assert stat < 27.88  # chi2.ppf(0.999, df=9)

    def test_intervention_keeps_mechanism(self):
        scm = sample_categorical_scm(10, RngStream(4))
        new = intervene_on_cause(scm, RngStream(5))
        assert new.pi_B_given_A is scm.pi_B_given_A or np.array_equal(
            new.pi_B_given_A, scm.pi_B_given_A)
        assert not np.allclose(new.pi_A, scm.pi_A)


class TestSpline:
    def test_interpolates_knots(self):
        scm = sample_spline_scm(RngStream(0))
        y = eval_spline(scm, scm.knots_x)
        np.testing.assert_allclose(y, scm.knots_y, atol=1e-10)

    def test_constant_data(self):
        scm = SplineScm(np.linspace(-8, 8, 8), np.full(8, 2.5))
        x = np.linspace(-8, 8, 100)
        np.testing.assert_allclose(eval_spline(scm, x), 2.5, atol=1e-12)

    def test_c1_at_interior_knots(self):
        scm = sample_spline_scm(RngStream(6))
        h = 1e-7
        for xk in scm.knots_x[1:-1]:
            left = (eval_spline(scm, [xk])[0] - eval_spline(scm, [xk - h])[0]) / h
            right = (eval_spline(scm, [xk + h])[0] - eval_spline(scm, [xk])[0]) / h
            assert abs(left - right) < 1e-5

    def test_against_independent_solver(self):
        # Independent construction: solve for each segment's quadratic from
        # interpolation + left-derivative continuity, sequentially.
        scm = sample_spline_scm(RngStream(12))
        xs, ys = scm.knots_x, scm.knots_y
        mids = 0.5 * (xs[:-1] + xs[1:])

        def oracle(x):
            # natural left end: s'' = 0 on first segment
            deriv = (ys[1] - ys[0]) / (xs[1] - xs[0])
            for k in range(len(xs) - 1):
                # s(t) = a t^2 + b t + c on [x_k, x_{k+1}], t = x - x_k
                h = xs[k + 1] - xs[k]
                c = ys[k]
                b = deriv
                a = (ys[k + 1] - c - b * h) / h ** 2
                if xs[k] <= x <= xs[k + 1]:
                    t = x - xs[k]
                    return a * t * t + b * t + c
                deriv = 2 * a * h + b
            raise AssertionError("x out of range")

        for x in mids:
            assert eval_spline(scm, [x])[0] == pytest.approx(oracle(x),
                                                             abs=1e-8)

    def test_zero_noise_limit(self):
        scm = sample_spline_scm(RngStream(2))
        quiet = SplineScm(scm.knots_x, scm.knots_y, noise_variance=1e-20)
        a, b = ancestral_sample(quiet, 500, RngStream(3))
        np.testing.assert_allclose(b, eval_spline(quiet, a), atol=1e-6)

    def test_intervention_keeps_knots(self):
        scm = sample_spline_scm(RngStream(7))
        new = intervene_on_cause(scm, RngStream(8))
        np.testing.assert_array_equal(new.knots_x, scm.knots_x)
        np.testing.assert_array_equal(new.knots_y, scm.knots_y)
        assert -4.0 <= new.cause_mean <= 4.0


class TestLinearGaussian:
    def test_sample_valid(self):
        scm = sample_linear_gaussian_scm(5, RngStream(0))
        np.linalg.cholesky(scm.Sigma_A)
        np.linalg.cholesky(scm.Sigma_B)

    def test_intervention_mean_distribution(self):
        scm = sample_linear_gaussian_scm(3, RngStream(1))
        root = RngStream(2)
        mus = np.array([intervene_on_cause(scm, root.child(i)).mu_A
                        for i in range(10_000)])
        se = 1.0 / np.sqrt(mus.shape[0])
        assert np.all(np.abs(mus.mean(axis=0)) < 3 * se)
        np.testing.assert_array_equal(
            intervene_on_cause(scm, root.child(0)).beta_1, scm.beta_1)

    def test_ancestral_sample_moments(self):
        scm = sample_linear_gaussian_scm(2, RngStream(3))
        a, b = ancestral_sample(scm, 200_000, RngStream(4))
        np.testing.assert_allclose(a.mean(axis=0), scm.mu_A, atol=0.05)
        expect_b = scm.beta_1 @ scm.mu_A + scm.beta_0
        np.testing.assert_allclose(b.mean(axis=0), expect_b, atol=0.05)


class TestRotationDecoder:
    def test_identity(self):
        x, y = decode_observations(RotationDecoder(0.0), [1.0, 2.0], [3.0, -1.0])
        np.testing.assert_allclose(x, [1.0, 2.0], atol=1e-15)
        np.testing.assert_allclose(y, [3.0, -1.0], atol=1e-15)

    def test_quarter_turn(self):
        x, y = decode_observations(RotationDecoder(-np.pi / 4), [1.0], [0.0])
        assert x[0] == pytest.approx(np.sqrt(2) / 2, abs=1e-12)
        assert y[0] == pytest.approx(-np.sqrt(2) / 2, abs=1e-12)

    def test_norm_preserved_and_invertible(self):
        rng = RngStream(5)
        a = rng.child(0).generator.standard_normal(100)
        b = rng.child(1).generator.standard_normal(100)
        theta = 0.77
        x, y = decode_observations(RotationDecoder(theta), a, b)
        np.testing.assert_allclose(x * x + y * y, a * a + b * b, atol=1e-12)
        a2, b2 = decode_observations(RotationDecoder(-theta), x, y)
        np.testing.assert_allclose(a2, a, atol=1e-10)
        np.testing.assert_allclose(b2, b, atol=1e-10)

    def test_orthogonal_det_one(self):
        r = rotation_matrix(1.3)
        np.testing.assert_allclose(r @ r.T, np.eye(2), atol=1e-12)
        assert np.linalg.det(r) == pytest.approx(1.0, abs=1e-12)


class TestJsonRoundTrip:
    @pytest.mark.parametrize("maker", [
        lambda: sample_categorical_scm(4, RngStream(0)),
        lambda: sample_spline_scm(RngStream(1)),
        lambda: sample_linear_gaussian_scm(3, RngStream(2)),
        lambda: RotationDecoder(-np.pi / 4),
    ])
    def test_round_trip(self, maker):
        scm = maker()
        clone = scm_from_json(scm_to_json(scm))
        assert scm_to_json(clone) == scm_to_json(scm)
