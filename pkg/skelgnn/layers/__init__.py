from skelgnn.layers.layer import Layer, param_rng, uniform_param
from skelgnn.layers.gcn import gcn_forward, GcnLayer
from skelgnn.layers.lcn import LcnParams, lcn_forward, pair_aggregate, LcnLayer
from skelgnn.layers.dynamic_graph import (
    GRAPH_VARIANTS,
    BASE_INITS,
    DynamicGraphConfig,
    DynamicGraph,
    OffsetTransform,
    dynamic_offsets,
    combine_graph,
    temporal_offsets,
    init_base_graph,
    base_graph_from_mask,
    embed_dim_for,
)
from skelgnn.layers.hcsf import (
    FUSION_OPS,
    ChannelSchedule,
    HcsfLayerParams,
    HcsfOptions,
    HcsfLayer,
    make_channel_schedule,
    hop_aggregate,
    hierarchical_fuse,
    hcsf_forward,
    fused_width,
)
from skelgnn.layers.temporal import TemporalConvLayer
from skelgnn.layers.linear import PerNodeLinear
