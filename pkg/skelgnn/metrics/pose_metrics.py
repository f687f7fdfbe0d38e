# Licensed under the BSD 3-Clause License.

"""Pose errors: MPJPE, Procrustes-aligned MPJPE, PCK and AUC.

Every function works on one pose ([N x 3]); per_sample_* helpers loop over a
batch. Errors are in the units of the inputs.
"""

from typing import Optional, Sequence, Tuple

import numpy as np

from skelgnn.errors import DegenerateConfiguration, ShapeMismatch

DEFAULT_AUC_THRESHOLDS = tuple(float(t) for t in range(5, 151, 5))
DEGENERACY_TOL = 1e-10


def _check_pair(pred: np.ndarray, gt: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    pred = np.asarray(pred, dtype=np.float64)
    gt = np.asarray(gt, dtype=np.float64)
    if pred.shape != gt.shape or pred.shape[-1] != 3:
        raise ShapeMismatch(f"poses {pred.shape} and {gt.shape} differ")
    return pred, gt


def root_relative(pose: np.ndarray, root: int = 0) -> np.ndarray:
    pose = np.asarray(pose, dtype=np.float64)
    return pose - pose[..., root : root + 1, :]


def joint_errors(pred: np.ndarray, gt: np.ndarray) -> np.ndarray:
    """Euclidean distance per joint."""
    pred, gt = _check_pair(pred, gt)
    return np.linalg.norm(pred - gt, axis=-1)


def mpjpe(pred: np.ndarray, gt: np.ndarray, root: Optional[int] = None) -> float:
    """Mean per-joint position error; with root set, both poses are first
    re-centred on that joint."""
    pred, gt = _check_pair(pred, gt)
    if root is not None:
        pred, gt = root_relative(pred, root), root_relative(gt, root)
    return float(joint_errors(pred, gt).mean())


def procrustes_transform(
    pred: np.ndarray, gt: np.ndarray
) -> Tuple[float, np.ndarray, np.ndarray]:
    """(s, R, t) minimizing sum ||s R p + t - g||^2 over scale s >= 0 and
    proper rotations R (det +1).

    A prediction with coincident joints is best matched by s = 0: every joint
    lands on the ground-truth centroid.
    """
    pred, gt = _check_pair(pred, gt)
    if pred.ndim != 2 or pred.shape[0] < 3:
        raise DegenerateConfiguration(f"need at least 3 joints, got {pred.shape}")
    mu_p, mu_g = pred.mean(axis=0), gt.mean(axis=0)
    p, g = pred - mu_p, gt - mu_g
    var_p, var_g = (p * p).sum(), (g * g).sum()
    if var_g <= DEGENERACY_TOL:
        raise DegenerateConfiguration("coincident ground-truth joints")
    if var_p <= DEGENERACY_TOL:
        return 0.0, np.eye(3), mu_g
    u, sing, vt = np.linalg.svd(p.T @ g)
    if sing[1] <= DEGENERACY_TOL * max(sing[0], 1.0):
        raise DegenerateConfiguration("collinear joints leave the rotation undefined")
    d = np.ones(3)
    if np.linalg.det(vt.T @ u.T) < 0:
        d[2] = -1.0
    r = (vt.T * d) @ u.T
    s = float((sing * d).sum() / var_p)
    t = mu_g - s * (r @ mu_p)
    return s, r, t


def procrustes_align(pred: np.ndarray, gt: np.ndarray) -> np.ndarray:
    s, r, t = procrustes_transform(pred, gt)
    return s * np.asarray(pred, dtype=np.float64) @ r.T + t


def pa_mpjpe(pred: np.ndarray, gt: np.ndarray) -> float:
    return mpjpe(procrustes_align(pred, gt), gt)


def per_sample_mpjpe(
    preds: np.ndarray, gts: np.ndarray, root: Optional[int] = None
) -> np.ndarray:
    preds, gts = _check_pair(preds, gts)
    if root is not None:
        preds, gts = root_relative(preds, root), root_relative(gts, root)
    return joint_errors(preds, gts).mean(axis=-1)


def per_sample_pa_mpjpe(preds: np.ndarray, gts: np.ndarray) -> np.ndarray:
    preds, gts = _check_pair(preds, gts)
    return np.array([pa_mpjpe(p, g) for p, g in zip(preds, gts)])


def pck(errors, threshold: float) -> float:
    """Fraction of errors strictly below threshold."""
    errors = np.asarray(errors, dtype=np.float64).reshape(-1)
    assert errors.size > 0, "pck of no errors"
    return float(np.count_nonzero(errors < threshold)) / errors.size


def auc(errors, thresholds: Sequence[float] = DEFAULT_AUC_THRESHOLDS) -> float:
    """Mean of pck over the threshold sweep."""
    thresholds = list(thresholds)
    assert thresholds, "auc needs thresholds"
    return float(np.mean([pck(errors, t) for t in thresholds]))
