# Licensed under the BSD 3-Clause License.

"""Distribution of per-sample errors and the hardest poses.

The hardest-p subset of a test set is the round(p * n) samples with the
largest error (at least one), ties broken by sample order. Hard poses differ
from one model to the next, so hard_pose_comparison measures how much the
subsets of several models overlap.
"""

from dataclasses import dataclass
from typing import Dict, List, Sequence, Tuple

import numpy as np

from skelgnn.errors import EmptyDataset


@dataclass
class HardPoseReport:
    bin_edges: List[float]
    counts: List[int]
    hardest_p_mean: Dict[float, float]

    @property
    def num_samples(self) -> int:
        return int(sum(self.counts))


def _errors(per_sample_errors) -> np.ndarray:
    e = np.asarray(per_sample_errors, dtype=np.float64).reshape(-1)
    if e.size == 0:
        raise EmptyDataset("no per-sample errors")
    return e


def error_histogram(
    per_sample_errors, bin_width: float
) -> Tuple[np.ndarray, np.ndarray]:
    """Bins [k w, (k+1) w) from 0 up to the largest error."""
    assert bin_width > 0, "bin width must be positive"
    e = _errors(per_sample_errors)
    n_bins = int(np.floor(e.max() / bin_width)) + 1
    edges = np.arange(n_bins + 1) * float(bin_width)
    counts = np.zeros(n_bins, dtype=np.int64)
    np.add.at(counts, np.minimum((e // bin_width).astype(np.int64), n_bins - 1), 1)
    return edges, counts


def hardest_count(n: int, p: float) -> int:
    return min(n, max(1, int(round(p * n))))


def hardest_indices(per_sample_errors, p: float) -> np.ndarray:
    e = _errors(per_sample_errors)
    order = np.argsort(-e, kind="stable")
    return order[: hardest_count(e.size, p)]


def hardest_p_mean(per_sample_errors, p: float) -> float:
    e = _errors(per_sample_errors)
    return float(e[hardest_indices(e, p)].mean())


def hard_pose_report(
    per_sample_errors, bin_width: float, percentiles: Sequence[float]
) -> HardPoseReport:
    edges, counts = error_histogram(per_sample_errors, bin_width)
    return HardPoseReport(
        bin_edges=[float(b) for b in edges],
        counts=[int(c) for c in counts],
        hardest_p_mean={
            float(p): hardest_p_mean(per_sample_errors, p) for p in percentiles
        },
    )


def hard_pose_comparison(
    errors_by_model: Dict[str, np.ndarray],
    reference: str,
    percentiles: Sequence[float],
) -> Dict[str, Dict[float, Dict[str, float]]]:
    """For every model and p: its hardest-p mean, its mean error on the
    reference model's hardest-p samples, and the fraction of the reference's
    hardest samples that are hard for it as well."""
    ref = _errors(errors_by_model[reference])
    out: Dict[str, Dict[float, Dict[str, float]]] = {}
    for name, errors in errors_by_model.items():
        e = _errors(errors)
        assert e.size == ref.size, f"{name} was evaluated on a different test set"
        out[name] = {}
        for p in percentiles:
            ref_idx = hardest_indices(ref, p)
            own_idx = hardest_indices(e, p)
            out[name][float(p)] = {
                "hardest_mean": float(e[own_idx].mean()),
                "mean_on_reference_hardest": float(e[ref_idx].mean()),
                "overlap": len(set(ref_idx.tolist()) & set(own_idx.tolist()))
                / len(ref_idx),
            }
    return out


def histogram_table(bin_edges: Sequence[float], counts: Sequence[int]) -> str:
    """Two columns: bin start and count, one bin per line."""
    lines = ["# bin_start count"]
    for start, c in zip(bin_edges, counts):
        lines.append(f"{start:g} {int(c)}")
    return "\n".join(lines) + "\n"
