"""Shared machinery for density modules.

A module exposes named parameter arrays plus ``log_prob`` / ``grad_log_prob``
(gradient of the *mean* log-likelihood of a batch). Adaptation is one
optimizer step on the negative mean log-likelihood; it returns a new module
and never mutates its inputs.
"""

from __future__ import annotations

import dataclasses
import json

import numpy as np

from ..numkit import OptimizerState, optimizer_step


class ParamModule:
    """Mixin for dataclass modules whose learnable fields are numpy arrays."""

    param_names: tuple = ()

    def get_params(self):
        return {name: np.array(getattr(self, name), dtype=float)
                for name in self.param_names}

    def with_params(self, params):
        return dataclasses.replace(self, **{k: np.array(v, dtype=float)
                                            for k, v in params.items()})

    def copy(self):
        return self.with_params(self.get_params())


def adapt_step(module, value, cond=None, opt_state: OptimizerState | None = None):
    """One optimizer step on the batch negative mean log-likelihood."""
    if opt_state is None:
        opt_state = OptimizerState()
    if cond is None:
        grads = module.grad_log_prob(value)
    else:
        grads = module.grad_log_prob(value, cond)
    neg = {k: -np.asarray(g) for k, g in grads.items()}
    new_params, new_state = optimizer_step(opt_state, module.get_params(), neg)
    return module.with_params(new_params), new_state


def module_to_json(module) -> str:
    doc = {"kind": type(module).__name__}
    for f in dataclasses.fields(module):
        v = getattr(module, f.name)
        doc[f.name] = v.tolist() if isinstance(v, np.ndarray) else v
    return json.dumps(doc)


def module_from_json(text: str):
    from . import (GaussianMarginal, GaussianMixtureMarginal,
                   LinearGaussianConditional, MaskedMlpConditional,
                   MdnConditional, RotationEncoder, TabularConditional,
                   TabularMarginal)
    kinds = {cls.__name__: cls for cls in (
        TabularMarginal, TabularConditional, MaskedMlpConditional,
        GaussianMixtureMarginal, MdnConditional, GaussianMarginal,
        LinearGaussianConditional, RotationEncoder)}
    doc = json.loads(text)
    cls = kinds[doc.pop("kind")]
    fields = {f.name for f in dataclasses.fields(cls) if f.init}
    kwargs = {k: (np.array(v, dtype=float) if isinstance(v, list) else v)
              for k, v in doc.items() if k in fields}
    return cls(**kwargs)
