# Licensed under the BSD 3-Clause License.

"""Pose samples and the line-delimited JSON dataset format.

The first line of a dataset file is a header
{"format": "skelgnn-poses", "version": 1, "num_joints": N}; every further
line is one sample with keys seq, frame, joints_2d, joints_3d, image_size and
action.
"""

import json
import os
from collections import OrderedDict
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from skelgnn.errors import (
    EmptyDataset,
    InvalidImageSize,
    IoFailure,
    JointCountMismatch,
    ParseError,
)

DATASET_FORMAT = "skelgnn-poses"
DATASET_VERSION = 1


@dataclass
class PoseSample:
    seq_id: str
    frame: int
    joints_2d: np.ndarray
    joints_3d: Optional[np.ndarray]
    image_size: Tuple[int, int]
    action: Optional[str] = None

    @property
    def num_joints(self) -> int:
        return self.joints_2d.shape[0]

    def to_record(self) -> Dict:
        return {
            "seq": self.seq_id,
            "frame": int(self.frame),
            "joints_2d": self.joints_2d.tolist(),
            "joints_3d": None if self.joints_3d is None else self.joints_3d.tolist(),
            "image_size": [int(self.image_size[0]), int(self.image_size[1])],
            "action": self.action,
        }


def _check_image_size(image_size) -> Tuple[float, float]:
    w, h = image_size
    if not (w > 0 and h > 0):
        raise InvalidImageSize(f"image size must be positive, got {tuple(image_size)}")
    return float(w), float(h)


def normalize_2d(joints: np.ndarray, image_size) -> np.ndarray:
    """Pixels to [-1, 1]: x' = 2x / width - 1, y' = 2y / height - 1."""
    w, h = _check_image_size(image_size)
    joints = np.asarray(joints, dtype=np.float64)
    return joints * np.array([2.0 / w, 2.0 / h]) - 1.0


def denormalize_2d(joints: np.ndarray, image_size) -> np.ndarray:
    w, h = _check_image_size(image_size)
    joints = np.asarray(joints, dtype=np.float64)
    return (joints + 1.0) * np.array([w / 2.0, h / 2.0])


def _parse_joints(value, width: int, line: int, key: str) -> np.ndarray:
    try:
        a = np.array(value, dtype=np.float64)
    except (TypeError, ValueError) as e:
        raise ParseError(line, f"{key} is not numeric: {e}") from e
    if a.ndim != 2 or a.shape[1] != width:
        raise ParseError(line, f"{key} must be a list of {width}-vectors")
    if not np.isfinite(a).all():
        raise ParseError(line, f"{key} holds non-finite values")
    return a


def parse_record(record: Dict, line: int, num_joints: Optional[int]) -> PoseSample:
    if not isinstance(record, dict):
        raise ParseError(line, "record is not an object")
    for key in ("seq", "frame", "joints_2d", "image_size"):
        if key not in record:
            raise ParseError(line, f"missing key '{key}'")
    j2d = _parse_joints(record["joints_2d"], 2, line, "joints_2d")
    j3d = None
    if record.get("joints_3d") is not None:
        j3d = _parse_joints(record["joints_3d"], 3, line, "joints_3d")
        if j3d.shape[0] != j2d.shape[0]:
            raise JointCountMismatch(
                line, f"{j2d.shape[0]} 2D joints but {j3d.shape[0]} 3D joints"
            )
    if num_joints is not None and j2d.shape[0] != num_joints:
        raise JointCountMismatch(
            line, f"record has {j2d.shape[0]} joints, topology has {num_joints}"
        )
    size = record["image_size"]
    if not (isinstance(size, (list, tuple)) and len(size) == 2):
        raise ParseError(line, "image_size must be [width, height]")
    try:
        _check_image_size(size)
    except InvalidImageSize as e:
        raise ParseError(line, str(e)) from e
    return PoseSample(
        seq_id=str(record["seq"]),
        frame=int(record["frame"]),
        joints_2d=j2d,
        joints_3d=j3d,
        image_size=(int(size[0]), int(size[1])),
        action=record.get("action"),
    )


def load_dataset(path: str, num_joints: Optional[int] = None) -> List[PoseSample]:
    """Reads a dataset file. Joint counts are checked against num_joints, or
    against the header's declared count when num_joints is None."""
    path = os.path.expanduser(path)
    try:
        with open(path, "r") as f:
            lines = f.readlines()
    except OSError as e:
        raise IoFailure(f"cannot read dataset {path}: {e}") from e
    samples = []
    expected = num_joints
    for i, text in enumerate(lines, start=1):
        if not text.strip():
            continue
        try:
            record = json.loads(text)
        except json.JSONDecodeError as e:
            raise ParseError(i, f"invalid JSON: {e.msg}") from e
        if isinstance(record, dict) and "format" in record:
            if record["format"] != DATASET_FORMAT:
                raise ParseError(i, f"unknown dataset format '{record['format']}'")
            declared = record.get("num_joints")
            if declared is not None:
                if expected is not None and declared != expected:
                    raise JointCountMismatch(
                        i, f"file declares {declared} joints, topology has {expected}"
                    )
                expected = declared
            continue
        samples.append(parse_record(record, i, expected))
    return samples


def save_dataset(samples: Sequence[PoseSample], path: str):
    path = os.path.expanduser(path)
    header = {"format": DATASET_FORMAT, "version": DATASET_VERSION}
    if samples:
        header["num_joints"] = samples[0].num_joints
    try:
        directory = os.path.dirname(os.path.abspath(path))
        os.makedirs(directory, exist_ok=True)
        with open(path, "w") as f:
            f.write(json.dumps(header) + "\n")
            for s in samples:
                f.write(json.dumps(s.to_record()) + "\n")
    except OSError as e:
        raise IoFailure(f"cannot write dataset {path}: {e}") from e


def stack_samples(
    samples: Sequence[PoseSample], normalize: bool = True
) -> Tuple[np.ndarray, np.ndarray]:
    """Inputs [S x N x 2] (normalized to [-1, 1] when asked) and targets
    [S x N x 3]."""
    if len(samples) == 0:
        raise EmptyDataset("no samples to stack")
    x = np.stack(
        [
            normalize_2d(s.joints_2d, s.image_size) if normalize else s.joints_2d
            for s in samples
        ]
    )
    if any(s.joints_3d is None for s in samples):
        raise EmptyDataset("some samples have no 3D targets")
    y = np.stack([s.joints_3d for s in samples])
    return x, y


def group_sequences(samples: Sequence[PoseSample]) -> "OrderedDict[str, List[int]]":
    """Sample indices per sequence, in first-appearance order, each sorted by
    frame."""
    groups: "OrderedDict[str, List[int]]" = OrderedDict()
    for i, s in enumerate(samples):
        groups.setdefault(s.seq_id, []).append(i)
    for seq in groups:
        groups[seq].sort(key=lambda i: samples[i].frame)
    return groups


def make_windows(
    x: np.ndarray, samples: Sequence[PoseSample], frames: int
) -> np.ndarray:
    """T-frame windows [S x 2 x T x N] centred on every sample.

    x holds the (normalized) 2D inputs [S x N x 2] in sample order; windows
    stay inside the sample's sequence, replicating the edge frames.
    """
    assert frames % 2 == 1, "window length must be odd"
    half = frames // 2
    out = np.zeros((len(samples), 2, frames, x.shape[1]))
    for idx in group_sequences(samples).values():
        idx = np.asarray(idx)
        for pos, i in enumerate(idx):
            take = np.clip(np.arange(pos - half, pos + half + 1), 0, len(idx) - 1)
            out[i] = np.transpose(x[idx[take]], (2, 0, 1))
    return out
