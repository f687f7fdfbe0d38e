import json

import numpy as np
import pytest

from skelgnn.errors import (
    ConfigInvalid,
    DisconnectedGraph,
    DuplicateEdge,
    IndexOutOfRange,
    InvalidHopRange,
    IoFailure,
    SelfLoop,
    ZeroRow,
)
from skelgnn.graphs import (
    branch_masks,
    build_topology,
    compute_hop_partition,
    get_hop_distance,
    hop_graphs,
    load_topology,
    normalize_adjacency,
    relabel,
)


def random_connected(rng, n):
    edges = {(int(rng.integers(0, i)), i) for i in range(1, n)}
    for _ in range(int(rng.integers(0, n))):
        i, j = (int(v) for v in rng.choice(n, size=2, replace=False))
        if (i, j) not in edges and (j, i) not in edges:
            edges.add((i, j))
    return build_topology(n, sorted(edges), (), int(rng.integers(0, n)))


def floyd_warshall(n, edges):
    d = np.full((n, n), np.inf)
    np.fill_diagonal(d, 0.0)
    for i, j in edges:
        d[i, j] = d[j, i] = 1.0
    for k in range(n):
        d = np.minimum(d, d[:, k : k + 1] + d[k : k + 1, :])
    return d


def test_hop_rings_match_floyd_warshall():
    for seed in range(200):
        rng = np.random.default_rng(seed)
        topo = random_connected(rng, int(rng.integers(2, 11)))
        oracle = floyd_warshall(topo.num_nodes, topo.edges)
        diameter = int(oracle.max())
        hops = compute_hop_partition(topo, diameter)
        np.testing.assert_array_equal(hops.hop_dist, oracle.astype(np.int64))
        for k in range(1, diameter + 1):
            np.testing.assert_array_equal(hops.ring(k), (oracle == k).astype(float))


def test_single_edge():
    topo = build_topology(2, [(0, 1)], [], 0)
    assert get_hop_distance(topo)[0, 1] == 1


def test_h36m_preset(topo):
    assert topo.num_nodes == 17
    assert topo.furthest_hop == 6
    assert len(topo.edges) == 16
    assert topo.parents()[topo.root] == -1
    hops = compute_hop_partition(topo, topo.furthest_hop)
    np.testing.assert_array_equal(hops.ring(1), topo.adjacency())


def test_h36m_hop_budget_is_not_the_diameter(topo):
    dist = get_hop_distance(topo)
    assert int(dist.max()) == 8
    assert compute_hop_partition(topo, 1).diameter() == 8
    left, right = topo.joint_index("left_wrist"), topo.joint_index("right_wrist")
    assert dist[left, right] == topo.furthest_hop == 6
    foot = topo.joint_index("right_foot")
    assert dist[foot, left] == 8
    assert compute_hop_partition(topo, 8).ring(8).sum() > 0


def test_h36m_shoulder_hop_listing(topo):
    hops = compute_hop_partition(topo, 2)
    shoulder = topo.joint_index("right_shoulder")
    ring1 = set(np.flatnonzero(hops.ring(1)[shoulder]).tolist())
    ring2 = set(np.flatnonzero(hops.ring(2)[shoulder]).tolist())
    assert ring1 == {topo.joint_index("thorax"), topo.joint_index("right_elbow")}
    assert ring2 == {
        topo.joint_index(name)
        for name in ("spine", "neck", "left_shoulder", "right_wrist")
    }


def test_topology_errors():
    with pytest.raises(DisconnectedGraph):
        build_topology(3, [(0, 1)], [], 0)
    with pytest.raises(IndexOutOfRange):
        build_topology(3, [(0, 1), (1, 5)], [], 0)
    with pytest.raises(DuplicateEdge):
        build_topology(3, [(0, 1), (1, 0), (1, 2)], [], 0)
    with pytest.raises(SelfLoop):
        build_topology(3, [(0, 1), (1, 1), (1, 2)], [], 0)
    with pytest.raises(DisconnectedGraph):
        build_topology(2, [], [], 0)
    with pytest.raises(ConfigInvalid):
        build_topology(3, [(0, 1), (1, 2)], [(0, 1), (1, 2)], 0)


def test_path_distance(path4):
    hops = compute_hop_partition(path4, 3)
    assert hops.hop_dist[0, 3] == 3
    assert hops.diameter() == 3
    np.testing.assert_array_equal(hops.ring(3)[1], np.zeros(4))
    with pytest.raises(InvalidHopRange):
        hops.ring(4)
    with pytest.raises(InvalidHopRange):
        compute_hop_partition(path4, 0)


def test_rings_are_disjoint(topo):
    hops = compute_hop_partition(topo, 8)
    total = sum(hops.ring(k) for k in range(1, 9)) + np.eye(17)
    np.testing.assert_array_equal(total, np.ones((17, 17)))


def test_short_range_diagonal(topo):
    hops = compute_hop_partition(topo, 3)
    for s in range(4):
        np.testing.assert_array_equal(np.diag(hops.short_range(s)), np.ones(17))


def test_normalize_adjacency():
    np.testing.assert_array_equal(
        normalize_adjacency(np.ones((2, 2)), "row"), np.full((2, 2), 0.5)
    )
    for mode in ("row", "symmetric"):
        np.testing.assert_array_equal(normalize_adjacency(np.eye(3), mode), np.eye(3))
    path3 = build_topology(3, [(0, 1), (1, 2)], [], 0)
    a = normalize_adjacency(compute_hop_partition(path3, 1).short_range(1), "row")
    np.testing.assert_allclose(a.sum(axis=1), np.ones(3), rtol=0, atol=1e-12)
    a = np.array([[0.0, 1.0, 1.0], [1.0, 0.0, 0.0], [1.0, 0.0, 0.0]])
    expected = a / np.sqrt(np.outer(a.sum(axis=1), a.sum(axis=1)))
    np.testing.assert_allclose(normalize_adjacency(a, "symmetric"), expected)


def test_normalize_zero_row():
    a = np.array([[1.0, 0.0], [0.0, 0.0]])
    with pytest.raises(ZeroRow):
        normalize_adjacency(a, "row")
    np.testing.assert_array_equal(
        normalize_adjacency(a, "row", allow_empty_rows=True), a
    )
    with pytest.raises(ConfigInvalid):
        normalize_adjacency(np.eye(2), "columns")


def test_row_normalized_hop_graphs(topo):
    hops = compute_hop_partition(topo, 3)
    for name, g in hop_graphs(hops, 1, 3):
        sums = g.sum(axis=1)
        nonempty = sums > 0
        np.testing.assert_allclose(sums[nonempty], 1.0, rtol=0, atol=1e-12)
        if name == "short":
            assert nonempty.all()


def test_relabel_permutes_distances(topo):
    rng = np.random.default_rng(1)
    perm = rng.permutation(topo.num_nodes)
    moved = relabel(topo, perm)
    p = np.eye(topo.num_nodes)[perm].T
    np.testing.assert_array_equal(
        get_hop_distance(moved), p @ get_hop_distance(topo) @ p.T
    )
    assert moved.joint_names[perm[3]] == topo.joint_names[3]


def test_branch_masks(topo):
    hops = compute_hop_partition(topo, 4)
    masks = branch_masks(hops, 1, 4)
    assert [name for name, _ in masks] == ["short", "hop2", "hop3", "hop4"]
    collapsed = branch_masks(hops, 1, 4, hop_aware=False)
    assert [name for name, _ in collapsed] == ["short", "long"]
    np.testing.assert_array_equal(
        collapsed[1][1], hops.ring(2) + hops.ring(3) + hops.ring(4)
    )
    assert len(branch_masks(hops, 2, 2)) == 1
    cumulative = branch_masks(hops, 1, 3, cumulative=True)
    np.testing.assert_array_equal(cumulative[2][1], hops.short_range(3))
    with pytest.raises(InvalidHopRange):
        branch_masks(hops, 3, 2)


def test_load_topology(tmp_path, topo):
    assert load_topology("h36m17") == topo
    path = tmp_path / "tri.json"
    path.write_text(
        json.dumps({"num_nodes": 3, "edges": [[0, 1], [1, 2]], "root": 1})
    )
    tri = load_topology(str(path))
    assert tri.name == "tri"
    assert tri.root == 1
    assert tri.parents() == [1, -1, 1]
    with pytest.raises(IoFailure):
        load_topology(str(tmp_path / "missing.json"))
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"edges": [[0, 1]]}))
    with pytest.raises(ConfigInvalid):
        load_topology(str(bad))


def test_flip_permutation(topo):
    perm = topo.flip_permutation()
    np.testing.assert_array_equal(perm[perm], np.arange(17))
    assert perm[topo.joint_index("left_wrist")] == topo.joint_index("right_wrist")
    assert perm[topo.root] == topo.root
