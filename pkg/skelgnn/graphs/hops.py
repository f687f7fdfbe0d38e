# Licensed under the BSD 3-Clause License.

from dataclasses import dataclass
from typing import List, Tuple

import numpy as np

from skelgnn.errors import ConfigInvalid, InvalidHopRange, ZeroRow
from skelgnn.graphs.topology import SkeletonTopology


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a)
    a.setflags(write=False)
    return a


def get_hop_distance(topo: SkeletonTopology) -> np.ndarray:
    """All-pairs shortest-path edge counts.

    Level-synchronous breadth-first expansion in matrix form: at level d the
    reachable set is the previous one grown by one edge.
    """
    n = topo.num_nodes
    adj = topo.adjacency() > 0
    hop_dis = np.full((n, n), -1, dtype=np.int64)
    reach = np.eye(n, dtype=bool)
    hop_dis[reach] = 0
    for d in range(1, n):
        grown = reach | ((reach.astype(np.int64) @ adj.astype(np.int64)) > 0)
        hop_dis[grown & ~reach] = d
        if (grown == reach).all():
            break
        reach = grown
    assert (hop_dis >= 0).all(), "topology must be connected"
    return hop_dis


@dataclass(frozen=True)
class HopPartition:
    """Exact-distance hop rings of a skeleton graph.

    ring(k) holds the pairs at shortest-path distance exactly k; the rings are
    pairwise disjoint and ring(1) is the edge adjacency.
    """

    hop_dist: np.ndarray
    rings: Tuple[np.ndarray, ...]
    max_hop: int

    @property
    def num_nodes(self) -> int:
        return self.hop_dist.shape[0]

    def ring(self, k: int) -> np.ndarray:
        if not (1 <= k <= self.max_hop):
            raise InvalidHopRange(f"hop {k} is outside [1, {self.max_hop}]")
        return self.rings[k - 1]

    def short_range(self, s: int) -> np.ndarray:
        """Binary matrix of pairs at distance <= s, diagonal included."""
        return (self.hop_dist <= max(s, 0)).astype(np.float64)

    def long_range(self, k: int, cumulative: bool = False) -> np.ndarray:
        """Hop-k neighbourhood of the long-range branch: the exact ring, or
        every pair within distance k when cumulative."""
        if cumulative:
            return self.short_range(k)
        if k > self.max_hop:
            return np.zeros_like(self.hop_dist, dtype=np.float64)
        return np.array(self.ring(k))

    def diameter(self) -> int:
        return int(self.hop_dist.max())


def compute_hop_partition(topo: SkeletonTopology, max_hop: int) -> HopPartition:
    if max_hop < 1:
        raise InvalidHopRange(f"max_hop must be >= 1, got {max_hop}")
    hop_dis = get_hop_distance(topo)
    rings = tuple(
        _frozen((hop_dis == k).astype(np.float64)) for k in range(1, max_hop + 1)
    )
    return HopPartition(hop_dist=_frozen(hop_dis), rings=rings, max_hop=max_hop)


def normalize_adjacency(
    a: np.ndarray, mode: str = "row", allow_empty_rows: bool = False
) -> np.ndarray:
    """Row (D^-1 A) or symmetric (D^-1/2 A D^-1/2) normalization.

    Rows without any neighbour raise ZeroRow unless allow_empty_rows, in which
    case they stay zero.
    """
    a = np.asarray(a, dtype=np.float64)
    assert a.ndim == 2 and a.shape[0] == a.shape[1], "adjacency must be square"
    assert (a >= 0).all(), "adjacency entries must be nonnegative"
    deg = a.sum(axis=1)
    empty = deg == 0
    if empty.any() and not allow_empty_rows:
        raise ZeroRow(f"nodes {np.flatnonzero(empty).tolist()} have no neighbours")
    safe = np.where(empty, 1.0, deg)
    if mode == "row":
        return a / safe[:, None]
    elif mode == "symmetric":
        d_inv_sqrt = np.where(empty, 0.0, 1.0 / np.sqrt(safe))
        return d_inv_sqrt[:, None] * a * d_inv_sqrt[None, :]
    else:
        raise ConfigInvalid(f"unknown normalization mode '{mode}'")


def branch_masks(
    hops: HopPartition,
    s: int,
    l: int,
    *,
    cumulative: bool = False,
    hop_aware: bool = True,
) -> List[Tuple[str, np.ndarray]]:
    """Binary neighbourhoods of the short-range branch and of every long-range
    branch k = s+1..l, in order.

    Without hop awareness, rings s+1..l collapse into a single "long" branch.
    """
    if not (0 <= s <= l):
        raise InvalidHopRange(f"need 0 <= S <= L, got S={s}, L={l}")
    masks = [("short", hops.short_range(s))]
    if l == s:
        return masks
    if hop_aware:
        for k in range(s + 1, l + 1):
            masks.append((f"hop{k}", hops.long_range(k, cumulative)))
    else:
        union = sum(hops.long_range(k, cumulative) for k in range(s + 1, l + 1))
        masks.append(("long", (union > 0).astype(np.float64)))
    return masks


def branch_graphs(
    masks: List[Tuple[str, np.ndarray]], mode: str = "row"
) -> List[Tuple[str, np.ndarray]]:
    """Normalizes every branch neighbourhood; empty ring rows stay zero."""
    return [
        (name, normalize_adjacency(m, mode, allow_empty_rows=(name != "short")))
        for name, m in masks
    ]


def hop_graphs(
    hops: HopPartition,
    s: int,
    l: int,
    *,
    cumulative: bool = False,
    mode: str = "row",
    hop_aware: bool = True,
) -> List[Tuple[str, np.ndarray]]:
    return branch_graphs(
        branch_masks(hops, s, l, cumulative=cumulative, hop_aware=hop_aware), mode
    )
