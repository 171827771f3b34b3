"""Render experiment CSVs as figures.

Pure post-processor: every statistic plotted here (medians, quantiles,
cross-entropies, beliefs) is computed upstream and read verbatim from the
CSV. Each figure kind declares the columns it needs; anything else in the
file is ignored, and a missing column is a schema error.
"""

from __future__ import annotations

import csv
from collections import defaultdict

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402

# fixed salt so SVG element ids do not change between renders
matplotlib.rcParams["svg.hashsalt"] = "metacausal-plots"


class SchemaError(Exception):
    """CSV header does not match the figure kind."""


def _read_csv(path):
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        header = reader.fieldnames
        rows = list(reader)
    if not header or not rows:
        raise SchemaError(f"{path}: empty CSV")
    return header, rows


def _require(header, needed, path):
    missing = [c for c in needed if c not in header]
    if missing:
        raise SchemaError(
            f"{path}: missing columns {missing}; found {sorted(header)}")


def _floats(rows, column):
    return [float(r[column]) for r in rows]


def _grouped(rows, keys):
    """Rows bucketed by the subset of `keys` present in the data."""
    groups = defaultdict(list)
    for r in rows:
        groups[tuple(r[k] for k in keys if k in r)].append(r)
    return groups


def _save(fig, out_base):
    png = out_base + ".png"
    svg = out_base + ".svg"
    fig.savefig(png, dpi=120, metadata={"Software": ""})
    fig.savefig(svg, metadata={"Date": None})
    plt.close(fig)
    return [png, svg]


def render_quantile_band(csv_path, out_base):
    """Median adaptation curves with 25-75% bands; causal curve on top."""
    needed = ["step", "causal_median", "causal_q25", "causal_q75",
              "anticausal_median", "anticausal_q25", "anticausal_q75"]
    header, rows = _read_csv(csv_path)
    _require(header, needed, csv_path)
    steps = _floats(rows, "step")
    fig, ax = plt.subplots(figsize=(6, 4))
    for prefix, color, label in (("causal", "tab:blue", "causal"),
                                 ("anticausal", "tab:red", "anticausal")):
        ax.fill_between(steps, _floats(rows, f"{prefix}_q25"),
                        _floats(rows, f"{prefix}_q75"), color=color,
                        alpha=0.25, linewidth=0)
    # plot medians after the bands, causal last so it sits on top
    ax.plot(steps, _floats(rows, "anticausal_median"), color="tab:red",
            label="anticausal")
    ax.plot(steps, _floats(rows, "causal_median"), color="tab:blue",
            label="causal")
    ax.set_xlabel("adaptation step")
    ax.set_ylabel("test log-likelihood")
    ax.legend(loc="lower right")
    return _save(fig, out_base)


def render_belief(csv_path, out_base):
    """sigma(gamma) trajectories, one line per (n_values, seed) group."""
    header, rows = _read_csv(csv_path)
    _require(header, ["sigma_gamma"], csv_path)
    x_col = next((c for c in ("episode", "iteration") if c in header), None)
    if x_col is None:
        raise SchemaError(f"{csv_path}: needs an 'episode' or 'iteration' "
                          f"column; found {sorted(header)}")
    fig, ax = plt.subplots(figsize=(6, 4))
    for key, group in sorted(_grouped(rows, ("n_values", "seed")).items()):
        label = " ".join(key) if key else None
        ax.plot(_floats(group, x_col), _floats(group, "sigma_gamma"),
                label=label)
    ax.set_xlabel(x_col)
    ax.set_ylabel("belief in the causal direction")
    ax.set_ylim(-0.05, 1.05)
    if len(_grouped(rows, ("n_values", "seed"))) > 1:
        ax.legend(fontsize=7)
    return _save(fig, out_base)


def render_cross_entropy(csv_path, out_base):
    """Edge-belief cross-entropy against meta-examples, per group."""
    header, rows = _read_csv(csv_path)
    _require(header, ["meta_example", "cross_entropy"], csv_path)
    fig, ax = plt.subplots(figsize=(6, 4))
    for key, group in sorted(_grouped(rows, ("n_values", "seed")).items()):
        label = " ".join(key) if key else None
        ax.plot(_floats(group, "meta_example"),
                _floats(group, "cross_entropy"), label=label)
    ax.set_xlabel("meta-examples")
    ax.set_ylabel("edge-belief cross-entropy")
    if len(_grouped(rows, ("n_values", "seed"))) > 1:
        ax.legend(fontsize=7)
    return _save(fig, out_base)


def render_scatter(csv_path, out_base):
    """Cause/effect samples, one colour per intervention mean."""
    header, rows = _read_csv(csv_path)
    _require(header, ["mu", "a", "b"], csv_path)
    fig, ax = plt.subplots(figsize=(5, 5))
    for key, group in sorted(_grouped(rows, ("mu",)).items(),
                             key=lambda kv: float(kv[0][0])):
        ax.scatter(_floats(group, "a"), _floats(group, "b"), s=6,
                   label=f"mu={key[0]}")
    ax.set_xlabel("cause")
    ax.set_ylabel("effect")
    ax.legend()
    return _save(fig, out_base)


def render_angle(csv_path, out_base):
    """Encoder-angle trajectories with the two valid solutions marked."""
    header, rows = _read_csv(csv_path)
    _require(header, ["iteration", "theta_E"], csv_path)
    fig, ax = plt.subplots(figsize=(6, 4))
    for key, group in sorted(_grouped(rows, ("seed",)).items()):
        label = f"seed {key[0]}" if key else None
        ax.plot(_floats(group, "iteration"), _floats(group, "theta_E"),
                label=label)
    for ref in (0.7853981633974483, -0.7853981633974483):
        ax.axhline(ref, color="gray", linestyle="--", linewidth=0.8)
    ax.set_xlabel("meta-iteration")
    ax.set_ylabel("encoder angle (rad)")
    if len(_grouped(rows, ("seed",))) > 1:
        ax.legend(fontsize=7)
    return _save(fig, out_base)


def render_likelihood_race(csv_path, out_base):
    """Train/test log-likelihood of both factorizations during training."""
    needed = ["step", "logl_ab_train", "logl_ba_train", "logl_ab_test",
              "logl_ba_test"]
    header, rows = _read_csv(csv_path)
    _require(header, needed, csv_path)
    steps = _floats(rows, "step")
    fig, ax = plt.subplots(figsize=(6, 4))
    styles = {"logl_ab_train": ("tab:blue", "-"),
              "logl_ba_train": ("tab:red", "-"),
              "logl_ab_test": ("tab:blue", "--"),
              "logl_ba_test": ("tab:red", "--")}
    for col, (color, style) in styles.items():
        ax.plot(steps, _floats(rows, col), color=color, linestyle=style,
                label=col[5:].replace("_", " "))
    ax.set_xlabel("training step")
    ax.set_ylabel("mean log-likelihood")
    ax.legend(fontsize=8)
    return _save(fig, out_base)


KINDS = {
    "quantile-band": render_quantile_band,
    "belief": render_belief,
    "cross-entropy": render_cross_entropy,
    "scatter": render_scatter,
    "angle": render_angle,
    "likelihood-race": render_likelihood_race,
}


def render(kind, csv_path, out_base):
    """Render one figure; returns the list of files written."""
    if kind not in KINDS:
        raise ValueError(f"unknown figure kind {kind!r}; "
                         f"choose from {sorted(KINDS)}")
    return KINDS[kind](csv_path, out_base)
