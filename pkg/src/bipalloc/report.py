"""Figure rendering for the CLI report paths.

Figures are written next to the delimited output: per-step cost curves for
a single run, and per-policy trend curves for a benchmark sweep.
"""

from __future__ import annotations

import math
import os

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

_FIGSIZE = (7.0, 4.5)


def _save(fig, path):
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def render_run_figure(records, path, title="cumulative cost per step"):
    """Policy vs offline-optimum cumulative cost over the record series."""
    steps = list(range(1, len(records) + 1))
    fig, ax = plt.subplots(figsize=_FIGSIZE)
    ax.plot(steps, [r.policy_cost for r in records], marker="o", label="policy")
    ax.plot(
        steps,
        [r.opt_cost for r in records],
        marker="s",
        linestyle="--",
        label="offline optimum",
    )
    ax.set_xlabel("step")
    ax.set_ylabel("cumulative cost")
    ax.set_title(title)
    ax.legend()
    _save(fig, path)
    return path


def render_bench_figures(rows, out_dir):
    """One figure per aggregate metric, one curve per policy. Returns the
    written paths."""
    os.makedirs(out_dir, exist_ok=True)
    metrics = (
        ("mean_final_cost", "mean final cost"),
        ("stddev_final_cost", "stddev of final cost"),
        ("mean_max_ratio", "mean empirical ratio"),
    )
    policies = sorted({row.policy for row in rows})
    paths = []
    for attr, label in metrics:
        fig, ax = plt.subplots(figsize=_FIGSIZE)
        for policy in policies:
            points = sorted(
                (row.consumers, getattr(row, attr))
                for row in rows
                if row.policy == policy
            )
            xs = [x for x, _ in points]
            ys = [y for _, y in points]
            if all(isinstance(y, float) and math.isnan(y) for y in ys):
                continue
            ax.plot(xs, ys, marker="o", label=policy)
        ax.set_xlabel("consumers")
        ax.set_ylabel(label)
        ax.set_title(f"{label} vs consumer count")
        ax.legend()
        path = os.path.join(out_dir, f"{attr}.png")
        _save(fig, path)
        paths.append(path)
    return paths
