import numpy as np
import pytest

from helpers import check_gradients
from metacausal.learners import MaskedMlpConditional
from metacausal.numkit import RngStream


def make_mlp(seed, mask=(0.0, 1.0), node=0, n_vars=2, n_values=5):
    m = MaskedMlpConditional.init(node, np.array(mask), n_vars, n_values,
                                  RngStream(seed), scale=0.4)
    # random biases keep ReLU pre-activations away from the kink, where the
    # finite-difference oracle is ill-defined
    gen = RngStream(seed, 999).generator
    return m.with_params({**m.get_params(),
                          "b1": 0.3 * gen.standard_normal(m.b1.shape)})


class TestMaskedMlp:
    def test_self_mask_forced_zero(self):
        m = make_mlp(0, mask=(1.0, 1.0))
        assert m.mask[0] == 0.0

    def test_masked_parent_invariance(self):
        m = make_mlp(1, mask=(0.0, 0.0))
        gen = RngStream(2).generator
        v = gen.integers(0, 5, size=(10, 2))
        v2 = v.copy()
        v2[:, 1] = gen.integers(0, 5, size=10)
        lp1 = m.log_prob(np.column_stack([v[:, 0], v[:, 1]]))
        lp2 = m.log_prob(np.column_stack([v[:, 0], v2[:, 1]]))
        np.testing.assert_array_equal(lp1, lp2)

    def test_masked_weights_zero_gradient(self):
        m = make_mlp(3, mask=(0.0, 0.0), node=0)
        v = RngStream(4).generator.integers(0, 5, size=(12, 2))
        g = m.grad_log_prob(v)["W1"]
        # every input column is masked, so all W1 gradients vanish
        np.testing.assert_array_equal(g, np.zeros_like(g))

    def test_unmasked_parent_matters(self):
        m = make_mlp(5, mask=(0.0, 1.0))
        v1 = np.array([[0, 0]])
        v2 = np.array([[0, 3]])
        assert m.log_prob(v1)[0] != m.log_prob(v2)[0]

    def test_gradient_finite_diff(self):
        rng = RngStream(6)
        for i, mask in enumerate([(0.0, 1.0), (0.0, 0.0), (1.0, 1.0)]):
            m = make_mlp(20 + i, mask=mask, node=1)
            v = rng.child(i).generator.integers(0, 5, size=(8, 2))
            check_gradients(m, v)

    def test_gradient_finite_diff_three_vars(self):
        m = MaskedMlpConditional.init(1, np.array([1.0, 0.0, 1.0]), 3, 4,
                                      RngStream(7), scale=0.4)
        v = RngStream(8).generator.integers(0, 4, size=(6, 3))
        check_gradients(m, v)

    def test_out_of_range(self):
        m = make_mlp(9)
        with pytest.raises(ValueError):
            m.log_prob(np.array([[5, 0]]))

    def test_with_mask_keeps_params(self):
        m = make_mlp(10, mask=(0.0, 1.0))
        m2 = m.with_mask(np.array([0.0, 0.0]))
        np.testing.assert_array_equal(m2.W1, m.W1)
        assert m2.mask[1] == 0.0
