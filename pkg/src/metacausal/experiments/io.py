"""CSV and run-manifest output, with finiteness checks on every cell."""

from __future__ import annotations

import csv
import json
import math
import os
from dataclasses import asdict, is_dataclass

from .. import __version__


class NumericalError(Exception):
    """Non-finite value in results; the CLI maps this to exit code 3."""


def write_csv(path: str, header, rows):
    """Write dict rows under the given header; rejects NaN/Inf cells."""
    os.makedirs(os.path.dirname(path) or ".", exist_ok=True)
    with open(path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=list(header))
        writer.writeheader()
        for row in rows:
            for key, value in row.items():
                if isinstance(value, float) and not math.isfinite(value):
                    raise NumericalError(f"non-finite {key} in {path}")
            writer.writerow(row)
    return path


def write_manifest(out_dir: str, experiment: str, config, seed: int,
                   profile: str, outputs, stream_ids=None, summary=None):
    """manifest.json: everything needed to reproduce the run bit-identically."""
    os.makedirs(out_dir, exist_ok=True)
    manifest = {
        "experiment": experiment,
        "config": asdict(config) if is_dataclass(config) else dict(config),
        "seed": int(seed),
        "profile": profile,
        "version": __version__,
        "stream_ids": stream_ids or {"root": int(seed)},
        "outputs": [os.path.basename(p) for p in outputs],
    }
    if summary is not None:
        manifest["summary"] = summary
    path = os.path.join(out_dir, "manifest.json")
    with open(path, "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True, default=float)
        fh.write("\n")
    return path
