"""Shared test utilities: flatten module params and check analytic gradients."""

import numpy as np

from metacausal.numkit import finite_diff_grad


def flatten_params(params):
    names = sorted(params)
    shapes = {n: params[n].shape for n in names}
    vec = np.concatenate([params[n].ravel() for n in names])
    return vec, names, shapes


def unflatten_params(vec, names, shapes):
    out = {}
    i = 0
    for n in names:
        size = int(np.prod(shapes[n])) if shapes[n] else 1
        out[n] = np.asarray(vec[i:i + size]).reshape(shapes[n])
        i += size
    return out


def check_gradients(module, value, cond=None, h=1e-5, rel_tol=1e-4,
                    abs_floor=1e-6):
    """Analytic grad of the mean log-likelihood vs central finite differences."""
    if cond is None:
        analytic = module.grad_log_prob(value)
    else:
        analytic = module.grad_log_prob(value, cond)
    vec0, names, shapes = flatten_params(module.get_params())

    def f(vec):
        m = module.with_params(unflatten_params(vec, names, shapes))
        lp = m.log_prob(value) if cond is None else m.log_prob(value, cond)
        return float(np.mean(lp))

    numeric = unflatten_params(finite_diff_grad(f, vec0, h), names, shapes)
    for n in names:
        a, b = np.asarray(analytic[n]), numeric[n]
        denom = np.maximum(np.abs(b), abs_floor)
        rel_err = np.max(np.abs(a - b) / denom)
        assert rel_err < rel_tol, f"gradient mismatch for {n}: {rel_err:.3e}"
