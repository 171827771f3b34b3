"""Command line entry point: plot <kind> --csv <path> --out <path>."""

import argparse
import sys

from .render import KINDS, SchemaError, render


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="plot", description="Render an experiment CSV as PNG + SVG.")
    parser.add_argument("kind", choices=sorted(KINDS))
    parser.add_argument("--csv", required=True,
                        help="input CSV produced by the experiment runner")
    parser.add_argument("--out", required=True,
                        help="output path without extension")
    args = parser.parse_args(argv)
    try:
        written = render(args.kind, args.csv, args.out)
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except SchemaError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    for path in written:
        print(path)
    return 0


if __name__ == "__main__":
    sys.exit(main())
