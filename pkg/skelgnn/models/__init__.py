from skelgnn.models.config import GRAPH_MODES, ModelConfig, config_from_dict
from skelgnn.models.model import (
    Block,
    Model,
    build_model,
    forward,
    graph_layer,
    parameter_count,
    match_channels,
)
from skelgnn.models.checkpoint import (
    FORMAT_VERSION,
    checkpoint_dict,
    save_checkpoint,
    read_checkpoint,
    load_state,
    load_checkpoint,
)
