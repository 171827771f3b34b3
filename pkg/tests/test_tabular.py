import numpy as np
import pytest

from helpers import check_gradients
from metacausal.learners import (TabularConditional, TabularMarginal,
                                 adapt_step, fit_tabular_mle,
                                 module_from_json, module_to_json)
from metacausal.numkit import OptimizerState, RngStream


class TestLogProb:
    def test_uniform_marginal(self):
        m = TabularMarginal(np.zeros(10))
        np.testing.assert_allclose(m.log_prob([0, 5, 9]), np.log(0.1),
                                   atol=1e-12)

    def test_out_of_range(self):
        m = TabularMarginal(np.zeros(4))
        with pytest.raises(ValueError):
            m.log_prob([4])

    def test_conditional_rows(self):
        logits = np.array([[0.0, 1.0], [2.0, -1.0]])
        c = TabularConditional(logits)
        expected = logits[1, 0] - np.log(np.exp(2.0) + np.exp(-1.0))
        assert c.log_prob([0], [1])[0] == pytest.approx(expected, abs=1e-12)


class TestGradients:
    def test_marginal_stationary_at_match(self):
        # batch whose empirical distribution equals softmax(logits)
        m = TabularMarginal(np.log([0.25, 0.5, 0.25]))
        batch = np.array([0] + [1, 1] + [2])
        g = m.grad_log_prob(batch)["logits"]
        np.testing.assert_allclose(g, 0.0, atol=1e-10)

    def test_marginal_finite_diff(self):
        rng = RngStream(0)
        for i in range(5):
            logits = rng.child(i).generator.standard_normal(6)
            batch = rng.child(100 + i).generator.integers(0, 6, size=8)
            check_gradients(TabularMarginal(logits), batch)

    def test_conditional_finite_diff(self):
        rng = RngStream(1)
        for i in range(5):
            logits = rng.child(i).generator.standard_normal((4, 4))
            vals = rng.child(50 + i).generator.integers(0, 4, size=8)
            cond = rng.child(90 + i).generator.integers(0, 4, size=8)
            check_gradients(TabularConditional(logits), vals, cond)


class TestAdaptStep:
    def test_stationary_point_unchanged(self):
        m = TabularMarginal(np.log([0.5, 0.5]))
        new, _ = adapt_step(m, np.array([0, 1]), opt_state=OptimizerState())
        np.testing.assert_allclose(new.logits, m.logits, atol=1e-12)

    def test_descent_property(self):
        rng = RngStream(2)
        wins = 0
        for i in range(100):
            gen = rng.child(i).generator
            m = TabularMarginal(gen.standard_normal(5))
            batch = gen.integers(0, 5, size=12)
            opt = OptimizerState(kind="sgd", learning_rate=1e-3)
            new, _ = adapt_step(m, batch, opt_state=opt)
            if new.log_prob(batch).mean() >= m.log_prob(batch).mean():
                wins += 1
        assert wins == 100

    def test_determinism(self):
        m = TabularConditional(np.ones((3, 3)))
        vals = np.array([0, 2, 1])
        cond = np.array([1, 1, 0])
        a, _ = adapt_step(m, vals, cond, OptimizerState())
        b, _ = adapt_step(m, vals, cond, OptimizerState())
        np.testing.assert_array_equal(a.logits, b.logits)


class TestMle:
    def test_counts_example(self):
        # counts [[3,1],[2,2]]: P(A=0)=0.5, P(B=0|A=0)=0.75, joint[0,0]=0.375
        a = np.array([0, 0, 0, 0, 1, 1, 1, 1])
        b = np.array([0, 0, 0, 1, 0, 0, 1, 1])
        marg, cond, info = fit_tabular_mle(a, b, 2)
        assert marg.probs()[0] == pytest.approx(0.5, abs=1e-12)
        assert cond.probs()[0, 0] == pytest.approx(0.75, abs=1e-12)
        joint_ab = marg.probs()[:, None] * cond.probs()
        marg2, cond2, _ = fit_tabular_mle(b, a, 2)
        joint_ba = (marg2.probs()[:, None] * cond2.probs()).T
        np.testing.assert_allclose(joint_ab, joint_ba, atol=1e-12)
        assert joint_ab[0, 0] == pytest.approx(0.375, abs=1e-12)

    def test_uniform_counts(self):
        a = np.repeat([0, 1, 2], 3)
        b = np.tile([0, 1, 2], 3)
        marg, cond, _ = fit_tabular_mle(a, b, 3)
        np.testing.assert_allclose(marg.probs(), 1 / 3, atol=1e-12)
        np.testing.assert_allclose(cond.probs(), 1 / 3, atol=1e-12)

    def test_both_orders_equal_joint(self):
        rng = RngStream(3)
        for i in range(10):
            gen = rng.child(i).generator
            n = 200
            a = gen.integers(0, 5, size=n)
            b = gen.integers(0, 5, size=n)
            m1, c1, _ = fit_tabular_mle(a, b, 5)
            m2, c2, _ = fit_tabular_mle(b, a, 5)
            j1 = m1.probs()[:, None] * c1.probs()
            j2 = (m2.probs()[:, None] * c2.probs()).T
            np.testing.assert_allclose(j1, j2, atol=1e-10)

    def test_unseen_row_uniform(self):
        a = np.array([0, 0, 0])
        b = np.array([1, 0, 1])
        marg, cond, info = fit_tabular_mle(a, b, 2)
        assert info["unseen_rows"] == [1]
        np.testing.assert_allclose(cond.probs()[1], 0.5, atol=1e-12)


def test_json_round_trip():
    m = TabularConditional(np.arange(9.0).reshape(3, 3))
    clone = module_from_json(module_to_json(m))
    np.testing.assert_array_equal(clone.logits, m.logits)
