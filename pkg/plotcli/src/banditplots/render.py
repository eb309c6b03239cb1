"""Render regret and runtime curves with variance bands from summary CSVs.

Input files follow the benchmark harness summary schema
(checkpoint_t,mean_cum_regret,std_cum_regret,mean_cum_time_ns,std_cum_time_ns);
one line plus a +/- one-standard-deviation band is drawn per file, labeled
by the file stem.  Rendering is a pure function of the CSV contents plus
the styling constants below.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

SUMMARY_HEADER = "checkpoint_t,mean_cum_regret,std_cum_regret,mean_cum_time_ns,std_cum_time_ns"

FIGSIZE = (6.4, 4.8)
DPI = 120
BAND_ALPHA = 0.25


class GridMismatchError(ValueError):
    """Summaries disagree on their checkpoint grids."""


@dataclass
class SeriesBundle:
    """One algorithm's checkpointed summary curves."""

    algo_name: str
    checkpoints: list
    regret_mean: np.ndarray
    regret_std: np.ndarray
    time_mean: np.ndarray
    time_std: np.ndarray

    def __post_init__(self):
        n = len(self.checkpoints)
        for arr in (self.regret_mean, self.regret_std, self.time_mean, self.time_std):
            if len(arr) != n:
                raise ValueError(f"{self.algo_name}: series lengths disagree")
        if np.any(self.regret_std < 0) or np.any(self.time_std < 0):
            raise ValueError(f"{self.algo_name}: negative standard deviation")


def load_summary(path):
    path = Path(path)
    with open(path) as fh:
        header = fh.readline().strip()
        if header != SUMMARY_HEADER:
            raise ValueError(f"{path}: unexpected header {header!r}")
        rows = [line.strip().split(",") for line in fh if line.strip()]
    label = path.stem.removesuffix("_summary")
    return SeriesBundle(
        algo_name=label,
        checkpoints=[int(r[0]) for r in rows],
        regret_mean=np.array([float(r[1]) for r in rows]),
        regret_std=np.array([float(r[2]) for r in rows]),
        time_mean=np.array([float(r[3]) for r in rows]),
        time_std=np.array([float(r[4]) for r in rows]),
    )


def check_common_grid(bundles, paths):
    grids = [tuple(b.checkpoints) for b in bundles]
    if len(set(grids)) > 1:
        offenders = [str(p) for p, g in zip(paths, grids) if g != grids[0]]
        raise GridMismatchError(
            "summaries disagree on checkpoint grids; offending files: "
            + ", ".join(offenders)
        )


def _draw(ax, checkpoints, mean, std, label):
    line, = ax.plot(checkpoints, mean, label=label)
    ax.fill_between(
        checkpoints, mean - std, mean + std,
        color=line.get_color(), alpha=BAND_ALPHA, linewidth=0,
    )


def render(summary_paths, out_prefix, log_time=False):
    """Write <prefix>_regret.png and <prefix>_runtime.png; returns plotted data.

    The returned dict maps label -> (checkpoints, regret_mean, time_seconds)
    exactly as plotted, so callers can verify orderings without reading
    pixels back.
    """
    paths = [Path(p) for p in summary_paths]
    if not paths:
        raise ValueError("need at least one summary CSV")
    bundles = [load_summary(p) for p in paths]
    check_common_grid(bundles, paths)

    out_prefix = Path(out_prefix)
    out_prefix.parent.mkdir(parents=True, exist_ok=True)
    outputs = []

    fig, ax = plt.subplots(figsize=FIGSIZE, dpi=DPI)
    for b in bundles:
        _draw(ax, b.checkpoints, b.regret_mean, b.regret_std, b.algo_name)
    ax.set_xlabel("round")
    ax.set_ylabel("cumulative regret")
    ax.set_title("Cumulative regret (band: +/- 1 std across trials)")
    ax.legend()
    regret_path = out_prefix.parent / f"{out_prefix.name}_regret.png"
    fig.savefig(regret_path)
    plt.close(fig)
    outputs.append(regret_path)

    fig, ax = plt.subplots(figsize=FIGSIZE, dpi=DPI)
    for b in bundles:
        _draw(ax, b.checkpoints, b.time_mean / 1e9, b.time_std / 1e9, b.algo_name)
    ax.set_xlabel("round")
    ax.set_ylabel("cumulative algorithmic time (s)")
    ax.set_title("Cumulative runtime (band: +/- 1 std across trials)")
    if log_time:
        ax.set_yscale("log")
    ax.legend()
    runtime_path = out_prefix.parent / f"{out_prefix.name}_runtime.png"
    fig.savefig(runtime_path)
    plt.close(fig)
    outputs.append(runtime_path)

    data = {
        b.algo_name: (list(b.checkpoints), b.regret_mean.copy(), b.time_mean / 1e9)
        for b in bundles
    }
    return outputs, data
