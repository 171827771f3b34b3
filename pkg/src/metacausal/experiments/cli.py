"""Command-line entry point for the experiment drivers.

Exit codes: 0 success, 2 configuration error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import sys

from .config import ConfigError, apply_overrides, load_config_file, make_config
from .continuous import (exp_continuous_multimodal, exp_encoder,
                         exp_linear_gaussian)
from .discrete import (exp_adaptation_speed, exp_bivariate_discrete,
                       exp_mlp_structure, exp_nonidentifiability)
from .io import NumericalError

RUNNERS = {
    "nonident": exp_nonidentifiability,
    "adapt-speed": exp_adaptation_speed,
    "bivariate-discrete": exp_bivariate_discrete,
    "mlp-structure": exp_mlp_structure,
    "continuous": exp_continuous_multimodal,
    "linear-gaussian": exp_linear_gaussian,
    "encoder": exp_encoder,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="metacausal",
        description="Meta-transfer experiments for causal direction "
                    "and structure learning.")
    sub = parser.add_subparsers(dest="experiment", required=True)
    for name in RUNNERS:
        p = sub.add_parser(name)
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--config", default=None,
                       help="key=value overrides file")
        p.add_argument("--out-dir", default=None,
                       help="default: runs/<experiment>")
        p.add_argument("--profile", choices=("desk", "paper"),
                       default="desk")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        config = make_config(args.experiment, args.profile)
        if args.config is not None:
            name, overrides = load_config_file(args.config)
            if name != args.experiment:
                raise ConfigError(
                    f"config file is for {name!r}, not {args.experiment!r}")
            config = apply_overrides(config, overrides)
        else:
            config.validate()
    except (ConfigError, OSError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    out_dir = args.out_dir or f"runs/{args.experiment}"
    try:
        summary = RUNNERS[args.experiment](config, args.seed, out_dir,
                                           profile=args.profile)
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3
    print(json.dumps({"experiment": args.experiment, "out_dir": out_dir,
                      "summary": summary}, indent=2, default=float))
    return 0


if __name__ == "__main__":
    sys.exit(main())
