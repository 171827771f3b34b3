"""Learnable density modules: log-density, analytic gradients, adaptation."""

from .base import adapt_step, module_from_json, module_to_json
from .encoder import RotationEncoder, encode
from .gmm import GaussianMixtureMarginal, fit_gmm_em
from .lingauss import (GaussianMarginal, LinearGaussianConditional,
                       exact_forward_modules, flip_linear_gaussian)
from .mdn import MdnConditional
from .mlp import MaskedMlpConditional
from .tabular import TabularConditional, TabularMarginal, fit_tabular_mle

__all__ = [
    "adapt_step", "module_to_json", "module_from_json",
    "TabularMarginal", "TabularConditional", "fit_tabular_mle",
    "MaskedMlpConditional",
    "GaussianMixtureMarginal", "fit_gmm_em",
    "MdnConditional",
    "GaussianMarginal", "LinearGaussianConditional",
    "flip_linear_gaussian", "exact_forward_modules",
    "RotationEncoder", "encode",
]
