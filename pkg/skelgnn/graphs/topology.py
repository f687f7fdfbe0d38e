# Licensed under the BSD 3-Clause License.

import json
import os
from collections import deque
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from skelgnn.errors import (
    ConfigInvalid,
    DisconnectedGraph,
    DuplicateEdge,
    IndexOutOfRange,
    IoFailure,
    SelfLoop,
)

Pair = Tuple[int, int]


@dataclass(frozen=True)
class SkeletonTopology:
    """Skeleton graph: joints are nodes, bones are undirected edges.

    Instances are validated by build_topology() and never mutated afterwards.
    furthest_hop is the default hop budget of models built on the skeleton,
    not its diameter: it may be smaller than the longest shortest path.
    """

    num_nodes: int
    edges: Tuple[Pair, ...]
    left_right_pairs: Tuple[Pair, ...]
    root: int
    joint_names: Optional[Tuple[str, ...]] = None
    furthest_hop: Optional[int] = None
    name: str = field(default="custom", compare=False)

    def adjacency(self) -> np.ndarray:
        """Binary N x N edge adjacency matrix (no self loops)."""
        a = np.zeros((self.num_nodes, self.num_nodes))
        for i, j in self.edges:
            a[i, j] = 1.0
            a[j, i] = 1.0
        return a

    def neighbours(self) -> List[List[int]]:
        adj: List[List[int]] = [[] for _ in range(self.num_nodes)]
        for i, j in self.edges:
            adj[i].append(j)
            adj[j].append(i)
        return [sorted(n) for n in adj]

    def parents(self) -> List[int]:
        """Parent of every joint in the breadth-first tree from the root (-1 at
        the root)."""
        parent = [-1] * self.num_nodes
        seen = [False] * self.num_nodes
        seen[self.root] = True
        queue = deque([self.root])
        nbrs = self.neighbours()
        while queue:
            i = queue.popleft()
            for j in nbrs[i]:
                if not seen[j]:
                    seen[j] = True
                    parent[j] = i
                    queue.append(j)
        return parent

    def flip_permutation(self) -> np.ndarray:
        """Index permutation swapping every left/right pair."""
        perm = np.arange(self.num_nodes)
        for left, right in self.left_right_pairs:
            perm[left] = right
            perm[right] = left
        return perm

    def joint_index(self, name: str) -> int:
        assert self.joint_names is not None, "topology has no joint names"
        return self.joint_names.index(name)

    def to_dict(self) -> Dict:
        d = {
            "name": self.name,
            "num_nodes": self.num_nodes,
            "edges": [list(e) for e in self.edges],
            "left_right_pairs": [list(p) for p in self.left_right_pairs],
            "root": self.root,
        }
        if self.joint_names is not None:
            d["joint_names"] = list(self.joint_names)
        if self.furthest_hop is not None:
            d["furthest_hop"] = self.furthest_hop
        return d


def _check_index(i: int, num_nodes: int, what: str):
    if not (0 <= int(i) < num_nodes):
        raise IndexOutOfRange(f"{what} {i} is outside [0, {num_nodes})")


def build_topology(
    num_nodes: int,
    edges: Sequence[Sequence[int]],
    left_right_pairs: Sequence[Sequence[int]] = (),
    root: int = 0,
    *,
    joint_names: Optional[Sequence[str]] = None,
    furthest_hop: Optional[int] = None,
    name: str = "custom",
) -> SkeletonTopology:
    """Validates and builds a SkeletonTopology.

    Raises IndexOutOfRange, DuplicateEdge, SelfLoop or DisconnectedGraph.
    """
    if num_nodes < 1:
        raise IndexOutOfRange(f"num_nodes must be positive, got {num_nodes}")
    if len(edges) == 0 and num_nodes > 1:
        raise DisconnectedGraph("edge list is empty")
    _check_index(root, num_nodes, "root")
    seen = set()
    clean_edges = []
    for e in edges:
        assert len(e) == 2, f"edge {e} must have two endpoints"
        i, j = int(e[0]), int(e[1])
        _check_index(i, num_nodes, "edge endpoint")
        _check_index(j, num_nodes, "edge endpoint")
        if i == j:
            raise SelfLoop(f"edge ({i}, {j}) is a self loop")
        key = (min(i, j), max(i, j))
        if key in seen:
            raise DuplicateEdge(f"edge ({i}, {j}) appears twice")
        seen.add(key)
        clean_edges.append((i, j))
    used = set()
    clean_pairs = []
    for p in left_right_pairs:
        assert len(p) == 2, f"left/right pair {p} must have two entries"
        left, right = int(p[0]), int(p[1])
        _check_index(left, num_nodes, "left/right index")
        _check_index(right, num_nodes, "left/right index")
        if left == right or left in used or right in used:
            raise ConfigInvalid(f"left/right pair ({left}, {right}) overlaps another")
        used.update((left, right))
        clean_pairs.append((left, right))
    if joint_names is not None and len(joint_names) != num_nodes:
        raise ConfigInvalid(
            f"{len(joint_names)} joint names given for {num_nodes} nodes"
        )
    topo = SkeletonTopology(
        num_nodes=int(num_nodes),
        edges=tuple(clean_edges),
        left_right_pairs=tuple(clean_pairs),
        root=int(root),
        joint_names=None if joint_names is None else tuple(joint_names),
        furthest_hop=furthest_hop,
        name=name,
    )
    parents = topo.parents()
    unreachable = [
        i for i in range(num_nodes) if i != topo.root and parents[i] == -1
    ]
    if unreachable:
        raise DisconnectedGraph(
            f"nodes {unreachable} are not reachable from root {topo.root}"
        )
    return topo


def relabel(topo: SkeletonTopology, perm: Sequence[int]) -> SkeletonTopology:
    """Renames node i to perm[i]."""
    perm = [int(p) for p in perm]
    assert sorted(perm) == list(range(topo.num_nodes)), "perm must be a permutation"
    names = None
    if topo.joint_names is not None:
        names = [""] * topo.num_nodes
        for i, n in enumerate(topo.joint_names):
            names[perm[i]] = n
    return build_topology(
        topo.num_nodes,
        [(perm[i], perm[j]) for i, j in topo.edges],
        [(perm[a], perm[b]) for a, b in topo.left_right_pairs],
        perm[topo.root],
        joint_names=names,
        furthest_hop=topo.furthest_hop,
        name=topo.name,
    )


# Human3.6M 17-joint skeleton, root at the pelvis.
H36M_JOINT_NAMES = (
    "pelvis",
    "right_hip",
    "right_knee",
    "right_foot",
    "left_hip",
    "left_knee",
    "left_foot",
    "spine",
    "thorax",
    "neck",
    "head",
    "left_shoulder",
    "left_elbow",
    "left_wrist",
    "right_shoulder",
    "right_elbow",
    "right_wrist",
)
H36M_EDGES = (
    (0, 1),
    (1, 2),
    (2, 3),
    (0, 4),
    (4, 5),
    (5, 6),
    (0, 7),
    (7, 8),
    (8, 9),
    (9, 10),
    (8, 11),
    (11, 12),
    (12, 13),
    (8, 14),
    (14, 15),
    (15, 16),
)
H36M_LEFT_RIGHT = ((4, 1), (5, 2), (6, 3), (11, 14), (12, 15), (13, 16))


def h36m17() -> SkeletonTopology:
    """17-joint body skeleton. The diameter is 8 (foot to opposite wrist); the
    hop budget is 6, the wrist-to-wrist span."""
    return build_topology(
        17,
        H36M_EDGES,
        H36M_LEFT_RIGHT,
        0,
        joint_names=H36M_JOINT_NAMES,
        furthest_hop=6,
        name="h36m17",
    )


PRESETS = {"h36m17": h36m17}


def topology_from_dict(d: Dict, name: str = "custom") -> SkeletonTopology:
    for key in ("num_nodes", "edges"):
        if key not in d:
            raise ConfigInvalid(f"topology document is missing '{key}'")
    return build_topology(
        d["num_nodes"],
        d["edges"],
        d.get("left_right_pairs", []),
        d.get("root", 0),
        joint_names=d.get("joint_names"),
        furthest_hop=d.get("furthest_hop"),
        name=name,
    )


def load_topology(path_or_preset: str) -> SkeletonTopology:
    """Returns a preset by name, or reads a JSON topology document."""
    if path_or_preset in PRESETS:
        return PRESETS[path_or_preset]()
    path = os.path.expanduser(path_or_preset)
    try:
        with open(path, "r") as f:
            d = json.load(f)
    except OSError as e:
        raise IoFailure(f"cannot read topology file {path}: {e}") from e
    except json.JSONDecodeError as e:
        raise ConfigInvalid(f"topology file {path} is not valid JSON: {e}") from e
    return topology_from_dict(d, name=os.path.splitext(os.path.basename(path))[0])
