# Licensed under the BSD 3-Clause License.

import json
import os
from dataclasses import dataclass, field
from typing import Dict, List, Optional

from skelgnn.errors import IoFailure
from skelgnn.metrics.hard_poses import histogram_table


@dataclass
class EvalReport:
    num_samples: int
    mpjpe_mean: float
    pa_mpjpe_mean: float
    pck: float
    auc: float
    pck_threshold: float
    bin_edges: List[float]
    counts: List[int]
    hardest_p_mean: Dict[float, float]
    per_action: Dict[str, float] = field(default_factory=dict)
    flip_test: bool = False

    def to_dict(self) -> Dict:
        return {
            "num_samples": self.num_samples,
            "mpjpe_mean": self.mpjpe_mean,
            "pa_mpjpe_mean": self.pa_mpjpe_mean,
            "pck": self.pck,
            "pck_threshold": self.pck_threshold,
            "auc": self.auc,
            "per_action": dict(sorted(self.per_action.items())),
            "error_histogram": {"bin_edges": self.bin_edges, "counts": self.counts},
            "hardest_p_mean": {
                f"{p:g}": v for p, v in sorted(self.hardest_p_mean.items())
            },
            "flip_test": self.flip_test,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2) + "\n"

    def histogram_table(self) -> str:
        return histogram_table(self.bin_edges, self.counts)

    def summary(self) -> str:
        hardest = ", ".join(
            f"{100 * p:g}%: {v:.2f}"
            for p, v in sorted(self.hardest_p_mean.items(), reverse=True)
        )
        return (
            f"samples: {self.num_samples}  MPJPE: {self.mpjpe_mean:.3f}  "
            f"PA-MPJPE: {self.pa_mpjpe_mean:.3f}  "
            f"PCK@{self.pck_threshold:g}: {self.pck:.3f}  AUC: {self.auc:.3f}\n"
            f"hardest poses: {hardest}"
        )

    def save(self, path: str, histogram_path: Optional[str] = None):
        """Writes the report as JSON and, when asked, the two-column
        histogram table."""
        try:
            directory = os.path.dirname(os.path.abspath(path))
            os.makedirs(directory, exist_ok=True)
            with open(path, "w") as f:
                f.write(self.to_json())
            if histogram_path is not None:
                with open(histogram_path, "w") as f:
                    f.write(self.histogram_table())
        except OSError as e:
            raise IoFailure(f"cannot write report {path}: {e}") from e
