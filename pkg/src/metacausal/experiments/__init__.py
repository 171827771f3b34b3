"""Experiment drivers binding scm + learners + meta into runnable studies."""

from .config import (AdaptSpeedConfig, BivariateDiscreteConfig, ConfigError,
                     ContinuousConfig, EncoderConfig, LinearGaussianConfig,
                     MlpStructureConfig, NonidentConfig, EXPERIMENTS,
                     load_config_file, make_config)
from .io import NumericalError, write_csv, write_manifest
from .discrete import (exp_adaptation_speed, exp_bivariate_discrete,
                       exp_mlp_structure, exp_nonidentifiability)
from .continuous import (exp_continuous_multimodal, exp_encoder,
                         exp_linear_gaussian)

__all__ = [
    "AdaptSpeedConfig", "BivariateDiscreteConfig", "ConfigError",
    "ContinuousConfig", "EncoderConfig", "LinearGaussianConfig",
    "MlpStructureConfig", "NonidentConfig", "EXPERIMENTS",
    "load_config_file", "make_config", "NumericalError", "write_csv",
    "write_manifest", "exp_adaptation_speed", "exp_bivariate_discrete",
    "exp_mlp_structure", "exp_nonidentifiability",
    "exp_continuous_multimodal", "exp_encoder", "exp_linear_gaussian",
]
