# Licensed under the BSD 3-Clause License.

"""Horizontal flips: negate x and swap every left/right joint pair.

Coordinates are mirrored about x = 0. Inputs must be centred there: 2D joints
normalized to [-1, 1] (image centre at 0) and 3D joints root-relative. The
training loop only flips such arrays; raw pixel samples must be normalized
before flip_sample.
"""

from dataclasses import replace

import numpy as np

from skelgnn.data import PoseSample
from skelgnn.graphs import SkeletonTopology


def flip_arrays(
    a: np.ndarray, topo: SkeletonTopology, joint_axis: int = -2, coord_axis: int = -1
) -> np.ndarray:
    """Flipped copy of a batch of poses; works for [.. x N x D] poses and,
    with joint_axis=-1 and coord_axis=1, for [B x 2 x T x N] windows."""
    a = np.array(a, dtype=np.float64)
    a = np.take(a, topo.flip_permutation(), axis=joint_axis)
    index = [slice(None)] * a.ndim
    index[coord_axis] = 0
    a[tuple(index)] = -a[tuple(index)]
    return a


def flip_inputs(x: np.ndarray, topo: SkeletonTopology) -> np.ndarray:
    if x.ndim == 4:
        return flip_arrays(x, topo, joint_axis=-1, coord_axis=1)
    return flip_arrays(x, topo)


def flip_sample(sample: PoseSample, topo: SkeletonTopology) -> PoseSample:
    """Mirrored copy of a centred sample (normalized 2D, root-relative 3D).

    Negating x is exact, so flipping twice restores the sample bit for bit.
    """
    assert len(topo.left_right_pairs) > 0, "topology has no left/right pairs"
    joints_3d = sample.joints_3d
    return replace(
        sample,
        joints_2d=flip_arrays(sample.joints_2d, topo),
        joints_3d=None if joints_3d is None else flip_arrays(joints_3d, topo),
    )
