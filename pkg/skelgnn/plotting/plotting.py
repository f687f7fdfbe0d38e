# Licensed under the BSD 3-Clause License.

from typing import Dict, Sequence

import numpy as np
from matplotlib import figure


def error_histogram_plot(
    filename: str,
    bin_edges: Sequence[float],
    counts: Sequence[int],
    title: str = "MPJPE distribution",
):
    """Bar chart of the per-sample error histogram."""
    edges = np.asarray(bin_edges, dtype=np.float64)
    counts = np.asarray(counts, dtype=np.float64)
    assert edges.shape[0] == counts.shape[0] + 1, "need one more edge than counts"
    fig = figure.Figure()
    ax = fig.subplots(1)
    ax.bar(
        edges[:-1],
        counts,
        width=np.diff(edges),
        align="edge",
        color=(0.2, 0.4, 0.8, 0.8),
        edgecolor="black",
        linewidth=0.5,
    )
    ax.set_xlabel("MPJPE")
    ax.set_ylabel("samples")
    ax.set_title(title)
    fig.savefig(filename, dpi=200)
    fig.clf()
    ax.cla()


def hardest_poses_plot(
    filename: str,
    hardest_by_model: Dict[str, Dict[float, float]],
    title: str = "Hardest poses",
):
    """Grouped bars: mean error over the hardest p of the test set, one group
    per p (descending) and one bar per model."""
    names = list(hardest_by_model.keys())
    assert names, "nothing to plot"
    ps = sorted({p for h in hardest_by_model.values() for p in h}, reverse=True)
    fig = figure.Figure()
    ax = fig.subplots(1)
    width = 0.8 / len(names)
    base = np.arange(len(ps))
    for i, name in enumerate(names):
        values = [hardest_by_model[name].get(p, np.nan) for p in ps]
        ax.bar(base + i * width, values, width=width, label=name)
    ax.set_xticks(base + 0.4 - width / 2)
    ax.set_xticklabels([f"{100 * p:g}%" for p in ps])
    ax.set_ylabel("mean MPJPE")
    ax.set_title(title)
    ax.legend()
    fig.savefig(filename, dpi=200)
    fig.clf()
    ax.cla()
