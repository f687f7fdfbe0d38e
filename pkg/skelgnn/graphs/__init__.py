from skelgnn.graphs.topology import (
    SkeletonTopology,
    build_topology,
    relabel,
    h36m17,
    load_topology,
    topology_from_dict,
    PRESETS,
)
from skelgnn.graphs.hops import (
    HopPartition,
    get_hop_distance,
    compute_hop_partition,
    normalize_adjacency,
    branch_masks,
    branch_graphs,
    hop_graphs,
)
