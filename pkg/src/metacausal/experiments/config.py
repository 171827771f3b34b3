"""Experiment configurations and the flat key=value config-file format.

Each experiment has a dataclass of hyperparameters whose defaults are the
desk-scale profile; the paper-scale profile overrides a few fields. Config
files are plain text: an ``[experiment-name]`` header line followed by
``key = value`` pairs, with ``#`` comments.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, fields, replace


class ConfigError(Exception):
    """Invalid configuration; the CLI maps this to exit code 2."""


@dataclass(frozen=True)
class NonidentConfig:
    n_values: int = 10
    n_train: int = 5000
    n_test: int = 5000
    n_steps: int = 600
    learning_rate: float = 0.1
    optimizer_kind: str = "rmsprop"

    PAPER = {"n_steps": 2000}

    def validate(self):
        if self.n_values < 2:
            raise ConfigError("n_values must be >= 2")
        if min(self.n_train, self.n_test, self.n_steps) < 1:
            raise ConfigError("sample and step counts must be positive")


@dataclass(frozen=True)
class AdaptSpeedConfig:
    n_values: int = 10
    n_train_dists: int = 10
    n_transfer_dists: int = 10
    n_steps: int = 200
    test_size: int = 10_000
    learning_rate: float = 0.3
    optimizer_kind: str = "rmsprop"

    PAPER = {"n_train_dists": 100, "n_transfer_dists": 100}

    def validate(self):
        if self.n_values < 2:
            raise ConfigError("n_values must be >= 2")
        if min(self.n_train_dists, self.n_transfer_dists, self.n_steps,
               self.test_size) < 1:
            raise ConfigError("run and step counts must be positive")


@dataclass(frozen=True)
class BivariateDiscreteConfig:
    n_values_list: tuple = (10, 100)
    m: int = 20
    T: int = 2
    batch_size: int = 10
    episodes: int = 500
    n_seeds: int = 5
    learning_rate: float = 0.1
    meta_learning_rate: float = 0.02

    PAPER = {}

    def validate(self):
        if any(n < 2 for n in self.n_values_list):
            raise ConfigError("every n_values must be >= 2")
        if self.T * self.batch_size > self.m:
            raise ConfigError("T * batch_size exceeds m")
        if min(self.episodes, self.n_seeds) < 1:
            raise ConfigError("episodes and n_seeds must be positive")


@dataclass(frozen=True)
class MlpStructureConfig:
    n_values_list: tuple = (10, 100)
    n_variables: int = 2
    pretrain_steps: int = 2000
    pretrain_batch: int = 100
    pretrain_lr: float = 0.01
    n_structures: int = 16          # mask samples per meta-example
    T: int = 2
    batch_size: int = 50
    meta_examples: int = 150
    n_seeds: int = 5
    adapt_optimizer: str = "sgd"
    learning_rate: float = 3.0
    meta_learning_rate: float = 0.1

    PAPER = {}

    def validate(self):
        if self.n_variables < 2:
            raise ConfigError("n_variables must be >= 2")
        if any(n < 2 for n in self.n_values_list):
            raise ConfigError("every n_values must be >= 2")
        if self.adapt_optimizer not in ("sgd", "rmsprop"):
            raise ConfigError("adapt_optimizer must be 'sgd' or 'rmsprop'")
        if min(self.n_structures, self.meta_examples, self.n_seeds,
               self.T, self.batch_size, self.pretrain_steps) < 1:
            raise ConfigError("counts must be positive")


@dataclass(frozen=True)
class ContinuousConfig:
    n_knots: int = 8
    knot_range: float = 8.0
    n_train: int = 5000
    gmm_components: int = 10
    mdn_hidden: int = 32
    mdn_components: int = 10
    pretrain_steps: int = 2000
    pretrain_lr: float = 0.01
    T: int = 10
    batch_size: int = 32
    meta_iterations: int = 200
    n_seeds: int = 5
    adapt_lr: float = 0.01
    meta_learning_rate: float = 0.05
    scatter_size: int = 500

    PAPER = {"n_train": 20_000, "pretrain_steps": 5000}

    def validate(self):
        if self.n_knots < 3:
            raise ConfigError("n_knots must be >= 3")
        if min(self.gmm_components, self.mdn_components, self.T,
               self.meta_iterations, self.n_seeds) < 1:
            raise ConfigError("counts must be positive")


@dataclass(frozen=True)
class LinearGaussianConfig:
    dim: int = 10
    T: int = 10
    batch_size: int = 32
    episodes: int = 200
    n_seeds: int = 5
    adapt_optimizer: str = "rmsprop"
    learning_rate: float = 0.01
    meta_learning_rate: float = 0.05
    check_points: int = 100

    PAPER = {"dim": 100}

    def validate(self):
        if self.dim < 1:
            raise ConfigError("dim must be >= 1")
        if self.adapt_optimizer not in ("sgd", "rmsprop"):
            raise ConfigError("adapt_optimizer must be 'sgd' or 'rmsprop'")
        if min(self.T, self.episodes, self.n_seeds) < 1:
            raise ConfigError("counts must be positive")


@dataclass(frozen=True)
class EncoderConfig:
    theta_D: float = -math.pi / 4
    n_knots: int = 8
    knot_range: float = 8.0
    gmm_components: int = 10
    mdn_hidden: int = 32
    mdn_components: int = 10
    T_train: int = 20
    T: int = 5
    batch_size: int = 64
    meta_iterations: int = 1000
    n_seeds: int = 5
    model_lr: float = 0.01
    theta_lr: float = 0.03
    meta_learning_rate: float = 0.05
    fd_step: float = 1e-3
    init_scale: float = 0.1

    PAPER = {}

    def validate(self):
        if min(self.T_train, self.T, self.meta_iterations,
               self.n_seeds) < 1:
            raise ConfigError("counts must be positive")
        if self.fd_step <= 0:
            raise ConfigError("fd_step must be positive")


EXPERIMENTS = {
    "nonident": NonidentConfig,
    "adapt-speed": AdaptSpeedConfig,
    "bivariate-discrete": BivariateDiscreteConfig,
    "mlp-structure": MlpStructureConfig,
    "continuous": ContinuousConfig,
    "linear-gaussian": LinearGaussianConfig,
    "encoder": EncoderConfig,
}


def make_config(experiment: str, profile: str = "desk"):
    """Profile defaults for one experiment; desk is the dataclass default."""
    if experiment not in EXPERIMENTS:
        raise ConfigError(f"unknown experiment {experiment!r}")
    cls = EXPERIMENTS[experiment]
    config = cls()
    if profile == "desk":
        pass
    elif profile == "paper":
        config = replace(config, **cls.PAPER)
    else:
        raise ConfigError(f"unknown profile {profile!r}")
    return config


def _coerce(raw: str, example):
    raw = raw.strip()
    if isinstance(example, bool):
        if raw.lower() in ("true", "1", "yes"):
            return True
        if raw.lower() in ("false", "0", "no"):
            return False
        raise ConfigError(f"bad boolean {raw!r}")
    if isinstance(example, int):
        return int(raw)
    if isinstance(example, float):
        return float(raw)
    if isinstance(example, tuple):
        return tuple(int(v) for v in raw.split(",") if v.strip())
    return raw


def apply_overrides(config, overrides: dict):
    known = {f.name: getattr(config, f.name) for f in fields(config)}
    coerced = {}
    for key, raw in overrides.items():
        if key not in known:
            raise ConfigError(f"unknown config key {key!r} for "
                              f"{type(config).__name__}")
        try:
            coerced[key] = _coerce(raw, known[key])
        except (ValueError, TypeError) as exc:
            raise ConfigError(f"bad value for {key!r}: {exc}") from exc
    config = replace(config, **coerced)
    config.validate()
    return config


def load_config_file(path: str):
    """Parse ``[experiment]`` header + key = value lines into (name, dict)."""
    name = None
    overrides = {}
    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if line.startswith("[") and line.endswith("]"):
                if name is not None:
                    raise ConfigError(f"{path}:{lineno}: second header")
                name = line[1:-1].strip()
                continue
            if "=" not in line:
                raise ConfigError(f"{path}:{lineno}: expected key = value")
            key, raw = line.split("=", 1)
            overrides[key.strip()] = raw.strip()
    if name is None:
        raise ConfigError(f"{path}: missing [experiment-name] header")
    if name not in EXPERIMENTS:
        raise ConfigError(f"{path}: unknown experiment {name!r}")
    return name, overrides
