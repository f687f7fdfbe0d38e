# Licensed under the BSD 3-Clause License.

"""Synthetic articulated poses.

Every bone is the rest direction of its child joint, swung by two angles and
scaled to the bone length, then chained from the root along the topology's
breadth-first tree. Angles follow sums of low-frequency sinusoids, so poses
move smoothly inside a sequence. A weak-perspective camera drops the depth
axis, which makes the 2D to 3D lifting ambiguous in the same way as real
footage.
"""

from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np

from skelgnn.data.samples import PoseSample
from skelgnn.errors import InvalidSpec
from skelgnn.graphs import SkeletonTopology

# rest directions (y up, subject's left towards +x) and bone lengths in mm of
# the h36m17 preset, indexed by child joint
H36M_REST_DIRECTIONS = (
    (0.0, 0.0, 0.0),
    (-1.0, 0.0, 0.0),
    (0.0, -1.0, 0.0),
    (0.0, -1.0, 0.0),
    (1.0, 0.0, 0.0),
    (0.0, -1.0, 0.0),
    (0.0, -1.0, 0.0),
    (0.0, 1.0, 0.0),
    (0.0, 1.0, 0.0),
    (0.0, 1.0, 0.0),
    (0.0, 1.0, 0.0),
    (1.0, 0.0, 0.0),
    (0.0, -1.0, 0.0),
    (0.0, -1.0, 0.0),
    (-1.0, 0.0, 0.0),
    (0.0, -1.0, 0.0),
    (0.0, -1.0, 0.0),
)
H36M_BONE_LENGTHS = (
    0.0,
    130.0,
    450.0,
    440.0,
    130.0,
    450.0,
    440.0,
    230.0,
    250.0,
    110.0,
    115.0,
    150.0,
    280.0,
    250.0,
    150.0,
    280.0,
    250.0,
)

DEFAULT_ACTIONS = ("sway", "reach", "twist", "bend")


@dataclass
class SyntheticRigSpec:
    """bone_lengths and joint_angle_ranges are indexed by child joint (the
    root entry is ignored); rest_directions likewise."""

    topology: SkeletonTopology
    bone_lengths: Optional[Sequence[float]] = None
    joint_angle_ranges: Optional[Sequence[float]] = None
    rest_directions: Optional[Sequence[Sequence[float]]] = None
    camera_scale: Tuple[float, float] = (0.3, 0.5)
    noise_std_2d: float = 0.0
    image_size: Tuple[int, int] = (1000, 1000)
    fps: float = 50.0
    outlier_prob: float = 0.0
    outlier_std: float = 30.0
    actions: Sequence[str] = field(default_factory=lambda: DEFAULT_ACTIONS)
    seed: int = 0

    def resolved(self) -> "SyntheticRigSpec":
        """Copy with every per-joint table filled in and checked."""
        topo = self.topology
        n = topo.num_nodes
        is_h36m = topo.name == "h36m17" and n == 17
        lengths = self.bone_lengths
        if lengths is None:
            lengths = H36M_BONE_LENGTHS if is_h36m else [100.0] * n
        elif len(lengths) == len(topo.edges) != n:
            lengths = _edge_lengths_to_joints(topo, lengths)
        ranges = self.joint_angle_ranges
        if ranges is None:
            ranges = [np.pi / 4] * n
        rest = self.rest_directions
        if rest is None:
            if is_h36m:
                rest = H36M_REST_DIRECTIONS
            else:
                rng = np.random.default_rng([self.seed, 0xB0E5])
                rest = rng.normal(size=(n, 3))
        spec = SyntheticRigSpec(
            topology=topo,
            bone_lengths=np.asarray(lengths, dtype=np.float64),
            joint_angle_ranges=np.asarray(ranges, dtype=np.float64),
            rest_directions=np.asarray(rest, dtype=np.float64),
            camera_scale=tuple(self.camera_scale),
            noise_std_2d=self.noise_std_2d,
            image_size=tuple(self.image_size),
            fps=self.fps,
            outlier_prob=self.outlier_prob,
            outlier_std=self.outlier_std,
            actions=tuple(self.actions),
            seed=self.seed,
        )
        spec.validate()
        norms = np.linalg.norm(spec.rest_directions, axis=1, keepdims=True)
        spec.rest_directions = spec.rest_directions / np.where(norms > 0, norms, 1.0)
        return spec

    def validate(self):
        n = self.topology.num_nodes
        parents = self.topology.parents()
        lengths = np.asarray(self.bone_lengths, dtype=np.float64)
        ranges = np.asarray(self.joint_angle_ranges, dtype=np.float64)
        rest = np.asarray(self.rest_directions, dtype=np.float64)
        if lengths.shape != (n,) or ranges.shape != (n,) or rest.shape != (n, 3):
            raise InvalidSpec(f"per-joint tables must have {n} entries")
        for j in range(n):
            if parents[j] < 0:
                continue
            if not lengths[j] > 0:
                raise InvalidSpec(f"bone length of joint {j} must be positive")
            if not (0.0 <= ranges[j] <= np.pi):
                raise InvalidSpec(f"angle range of joint {j} must be within [0, pi]")
            if not np.linalg.norm(rest[j]) > 0:
                raise InvalidSpec(f"rest direction of joint {j} is zero")
        lo, hi = self.camera_scale
        if not (0 < lo <= hi):
            raise InvalidSpec(f"camera scale range {self.camera_scale} is invalid")
        if self.noise_std_2d < 0 or self.outlier_std < 0:
            raise InvalidSpec("noise levels must be nonnegative")
        if not (0.0 <= self.outlier_prob <= 1.0):
            raise InvalidSpec("outlier_prob must be in [0, 1]")
        if not (self.image_size[0] > 0 and self.image_size[1] > 0):
            raise InvalidSpec(f"image size {self.image_size} must be positive")
        if self.fps <= 0 or len(self.actions) == 0:
            raise InvalidSpec("fps must be positive and actions nonempty")


def _edge_lengths_to_joints(topo: SkeletonTopology, lengths) -> List[float]:
    """Per-edge lengths (in topo.edges order) to per-child-joint lengths."""
    parents = topo.parents()
    out = [0.0] * topo.num_nodes
    for (a, b), length in zip(topo.edges, lengths):
        if parents[b] == a:
            out[b] = float(length)
        elif parents[a] == b:
            out[a] = float(length)
    return out


def _rot_x(a: np.ndarray) -> np.ndarray:
    c, s = np.cos(a), np.sin(a)
    z, o = np.zeros_like(a), np.ones_like(a)
    return np.stack([o, z, z, z, c, -s, z, s, c], axis=-1).reshape(a.shape + (3, 3))


def _rot_y(a: np.ndarray) -> np.ndarray:
    c, s = np.cos(a), np.sin(a)
    z, o = np.zeros_like(a), np.ones_like(a)
    return np.stack([c, z, s, z, o, z, -s, z, c], axis=-1).reshape(a.shape + (3, 3))


def _angle_trajectories(
    rng: np.random.Generator, ranges: np.ndarray, times: np.ndarray, count: int
) -> np.ndarray:
    """[T x count x N] angles, each a sum of at most 3 sinusoids whose
    amplitudes add up to at most the joint's range."""
    n = ranges.shape[0]
    out = np.zeros((times.shape[0], count, n))
    for a in range(count):
        for j in range(n):
            k = int(rng.integers(1, 4))
            amps = rng.dirichlet(np.ones(k)) * ranges[j] * rng.uniform(0.5, 1.0)
            freqs = rng.uniform(0.1, 1.0, size=k)
            phases = rng.uniform(0.0, 2 * np.pi, size=k)
            out[:, a, j] = (
                amps[None] * np.sin(2 * np.pi * freqs[None] * times[:, None] + phases)
            ).sum(axis=1)
    return out


def forward_kinematics(
    spec: SyntheticRigSpec, swing: np.ndarray, yaw: np.ndarray
) -> np.ndarray:
    """Root-relative joint positions [T x N x 3] for per-joint swing angles
    [T x 2 x N] and a global yaw [T]."""
    topo = spec.topology
    parents = topo.parents()
    t = swing.shape[0]
    rot = np.einsum("tnij,tnjk->tnik", _rot_y(swing[:, 0]), _rot_x(swing[:, 1]))
    bones = np.einsum("tnij,nj->tni", rot, spec.rest_directions)
    bones = bones * np.asarray(spec.bone_lengths)[None, :, None]
    bones = np.einsum("tij,tnj->tni", _rot_y(yaw), bones)
    pos = np.zeros((t, topo.num_nodes, 3))
    for j in _bfs_order(topo):
        if parents[j] >= 0:
            pos[:, j] = pos[:, parents[j]] + bones[:, j]
    return pos


def _bfs_order(topo: SkeletonTopology) -> List[int]:
    order = [topo.root]
    nbrs = topo.neighbours()
    seen = {topo.root}
    for j in order:
        for k in nbrs[j]:
            if k not in seen:
                seen.add(k)
                order.append(k)
    return order


def weak_perspective(
    joints_3d: np.ndarray, scale: float, image_size: Tuple[int, int]
) -> np.ndarray:
    """u = cx + s X, v = cy - s Y (image rows grow downwards)."""
    cx, cy = image_size[0] / 2.0, image_size[1] / 2.0
    return np.stack(
        [cx + scale * joints_3d[..., 0], cy - scale * joints_3d[..., 1]], axis=-1
    )


def synthesize_dataset(
    spec: SyntheticRigSpec, n_samples: int, n_frames_per_seq: int
) -> List[PoseSample]:
    """n_samples poses split into sequences of n_frames_per_seq frames (the
    last one possibly shorter). Deterministic given spec.seed."""
    if n_samples < 0 or n_frames_per_seq < 1:
        raise InvalidSpec("need n_samples >= 0 and n_frames_per_seq >= 1")
    spec = spec.resolved()
    rng = np.random.default_rng(spec.seed)
    samples: List[PoseSample] = []
    n_seq = -(-n_samples // n_frames_per_seq)
    for q in range(n_seq):
        frames = min(n_frames_per_seq, n_samples - q * n_frames_per_seq)
        times = np.arange(frames) / spec.fps
        swing = _angle_trajectories(rng, spec.joint_angle_ranges, times, 2)
        yaw0 = rng.uniform(-np.pi, np.pi)
        drift = _angle_trajectories(rng, np.array([np.pi / 8]), times, 1)
        yaw = yaw0 + drift[:, 0, 0]
        joints_3d = forward_kinematics(spec, swing, yaw)
        scale = rng.uniform(*spec.camera_scale)
        joints_2d = weak_perspective(joints_3d, scale, spec.image_size)
        if spec.noise_std_2d > 0:
            noise = rng.normal(0.0, spec.noise_std_2d, joints_2d.shape)
            joints_2d = joints_2d + noise
        if spec.outlier_prob > 0:
            hit = rng.random(frames) < spec.outlier_prob
            jitter = rng.normal(0.0, spec.outlier_std, joints_2d.shape)
            joints_2d = joints_2d + jitter * hit[:, None, None]
        action = spec.actions[q % len(spec.actions)]
        for f in range(frames):
            samples.append(
                PoseSample(
                    seq_id=f"seq{q:04d}",
                    frame=f,
                    joints_2d=joints_2d[f],
                    joints_3d=joints_3d[f],
                    image_size=spec.image_size,
                    action=action,
                )
            )
    return samples


def mean_bone_length(spec: SyntheticRigSpec) -> float:
    spec = spec.resolved()
    parents = spec.topology.parents()
    lengths = [spec.bone_lengths[j] for j, p in enumerate(parents) if p >= 0]
    return float(np.mean(lengths))
