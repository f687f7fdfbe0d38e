# Licensed under the BSD 3-Clause License.

from typing import Dict, Optional, Sequence, Tuple

import joblib
import numpy as np

from skelgnn.data import PoseSample, make_windows, stack_samples
from skelgnn.errors import EmptyDataset
from skelgnn.metrics import (
    EvalReport,
    auc,
    hard_pose_report,
    joint_errors,
    pck,
    per_sample_mpjpe,
    per_sample_pa_mpjpe,
    root_relative,
)
from skelgnn.models import Model
from skelgnn.tools.augment import flip_arrays, flip_inputs
from skelgnn.tools.config import MetricsConfig


def model_inputs(
    model: Model, samples: Sequence[PoseSample], normalize: bool = True
) -> Tuple[np.ndarray, np.ndarray]:
    """Network inputs (single poses or T-frame windows) and 3D targets."""
    x, y = stack_samples(samples, normalize)
    if model.config.is_temporal:
        x = make_windows(x, samples, model.config.temporal_frames)
    return x, y


def predict(
    model: Model,
    inputs: np.ndarray,
    batch_size: int = 1024,
    flip_average: bool = False,
) -> np.ndarray:
    """Eval-mode predictions; with flip_average, the mean of the direct
    prediction and the unflipped prediction of the flipped input."""
    preds = []
    for a in range(0, inputs.shape[0], batch_size):
        batch = inputs[a : a + batch_size]
        p = model.predict(batch)
        if flip_average:
            p_flip = model.predict(flip_inputs(batch, model.topo))
            p = (p + flip_arrays(p_flip, model.topo)) / 2.0
        preds.append(p)
    return np.concatenate(preds)


def _chunk_errors(preds: np.ndarray, gts: np.ndarray, root: Optional[int]):
    if root is not None:
        preds, gts = root_relative(preds, root), root_relative(gts, root)
    return (
        per_sample_mpjpe(preds, gts),
        per_sample_pa_mpjpe(preds, gts),
        joint_errors(preds, gts),
    )


def sample_errors(
    preds: np.ndarray,
    gts: np.ndarray,
    root: Optional[int] = 0,
    workers: int = 1,
) -> Dict[str, np.ndarray]:
    """Per-sample MPJPE and PA-MPJPE and per-joint errors, computed in
    worker chunks whose results are reassembled in sample order."""
    splits = np.array_split(np.arange(preds.shape[0]), workers)
    chunks = [c for c in splits if c.size]
    results = joblib.Parallel(n_jobs=workers)(
        joblib.delayed(_chunk_errors)(preds[c], gts[c], root) for c in chunks
    )
    return {
        "mpjpe": np.concatenate([r[0] for r in results]),
        "pa_mpjpe": np.concatenate([r[1] for r in results]),
        "joint": np.concatenate([r[2] for r in results]),
    }


def evaluate(
    model: Model,
    samples: Sequence[PoseSample],
    metrics_config: Optional[MetricsConfig] = None,
    flip_average: Optional[bool] = None,
    normalize: bool = True,
) -> Tuple[EvalReport, Dict[str, np.ndarray]]:
    """Full evaluation of model on samples: the report and the per-sample
    errors it was built from."""
    cfg = metrics_config or MetricsConfig()
    if len(samples) == 0:
        raise EmptyDataset("nothing to evaluate")
    flip = cfg.flip_test if flip_average is None else flip_average
    x, y = model_inputs(model, samples, normalize)
    preds = predict(model, x, cfg.batch_size, flip)
    root = model.topo.root if cfg.root_relative else None
    errors = sample_errors(preds, y, root, cfg.workers)
    per_action: Dict[str, list] = {}
    for s, e in zip(samples, errors["mpjpe"]):
        if s.action is not None:
            per_action.setdefault(s.action, []).append(e)
    hard = hard_pose_report(errors["mpjpe"], cfg.bin_width, cfg.percentiles)
    report = EvalReport(
        num_samples=len(samples),
        mpjpe_mean=float(errors["mpjpe"].mean()),
        pa_mpjpe_mean=float(errors["pa_mpjpe"].mean()),
        pck=pck(errors["joint"], cfg.pck_threshold),
        auc=auc(errors["joint"], cfg.auc_thresholds),
        pck_threshold=float(cfg.pck_threshold),
        bin_edges=hard.bin_edges,
        counts=hard.counts,
        hardest_p_mean=hard.hardest_p_mean,
        per_action={a: float(np.mean(v)) for a, v in per_action.items()},
        flip_test=flip,
    )
    errors["predictions"] = preds
    return report, errors
