# Licensed under the BSD 3-Clause License.

from dataclasses import asdict, dataclass, fields
from typing import Dict, Optional, Type, TypeVar

from skelgnn.errors import ConfigInvalid
from skelgnn.graphs import SkeletonTopology, get_hop_distance
from skelgnn.layers import BASE_INITS, FUSION_OPS, GRAPH_VARIANTS

GRAPH_MODES = (
    "static_gcn",
    "static_lcn",
    "hcsf_static",
    "hcsf_dynamic",
    "hcsf_dynamic_temporal",
)

C = TypeVar("C")


def config_from_dict(cls: Type[C], d: Optional[Dict], section: str) -> C:
    """Builds a config dataclass, rejecting keys it does not define."""
    d = dict(d or {})
    known = {f.name for f in fields(cls)}
    unknown = sorted(set(d) - known)
    if unknown:
        raise ConfigInvalid(f"unknown {section} keys: {', '.join(unknown)}")
    return cls(**d)


@dataclass
class ModelConfig:
    channels: int = 64
    s_hop: int = 1
    l_hop: int = 2
    squeeze_ratio: float = 0.125
    blocks: int = 2
    layers_per_block: int = 2
    graph_mode: str = "hcsf_static"
    temporal_frames: int = 1
    temporal_kernel: int = 3
    dropout_p: float = 0.25
    leaky_alpha: float = 0.2
    fusion: str = "concat"
    seed: int = 0
    # hierarchy switches
    long_range_cumulative: bool = False
    hop_aware: bool = True
    schedule_literal_eq6: bool = False
    shared_fuse_proj: bool = False
    # dynamic graph switches (hcsf_dynamic, hcsf_dynamic_temporal)
    graph_variant: str = "combined"
    base_init: str = "physical"
    mask_base: bool = True
    freeze_alpha: bool = False
    share_offsets: bool = False
    embed_dim: Optional[int] = None
    offset_stride: int = 1
    offset_dilation: int = 1
    tcn_dilation: int = 1
    output_scale: float = 100.0
    # debug: blocks return their input unchanged
    ablate_residual_branch: bool = False

    @classmethod
    def from_dict(cls, d: Optional[Dict]) -> "ModelConfig":
        return config_from_dict(cls, d, "model")

    def to_dict(self) -> Dict:
        return asdict(self)

    @property
    def is_temporal(self) -> bool:
        return self.temporal_frames > 1 or self.graph_mode == "hcsf_dynamic_temporal"

    @property
    def is_hcsf(self) -> bool:
        return self.graph_mode.startswith("hcsf")

    def validate(self, topo: Optional[SkeletonTopology] = None) -> "ModelConfig":
        if self.graph_mode not in GRAPH_MODES:
            raise ConfigInvalid(f"unknown graph_mode '{self.graph_mode}'")
        if self.channels < 1:
            raise ConfigInvalid(f"channels must be >= 1, got {self.channels}")
        if self.blocks < 0 or self.layers_per_block < 1:
            raise ConfigInvalid("blocks must be >= 0 and layers_per_block >= 1")
        if self.is_hcsf and not (1 <= self.s_hop <= self.l_hop):
            raise ConfigInvalid(
                f"need 1 <= s_hop <= l_hop, got {self.s_hop} and {self.l_hop}"
            )
        if self.l_hop < 1:
            raise ConfigInvalid(f"l_hop must be >= 1, got {self.l_hop}")
        if not (0.0 < self.squeeze_ratio <= 1.0):
            raise ConfigInvalid(
                f"squeeze_ratio must be in (0, 1], got {self.squeeze_ratio}"
            )
        if not (0.0 <= self.dropout_p < 1.0):
            raise ConfigInvalid(f"dropout_p must be in [0, 1), got {self.dropout_p}")
        if self.fusion not in FUSION_OPS:
            raise ConfigInvalid(f"unknown fusion '{self.fusion}'")
        if self.graph_variant not in GRAPH_VARIANTS:
            raise ConfigInvalid(f"unknown graph_variant '{self.graph_variant}'")
        if self.base_init not in BASE_INITS:
            raise ConfigInvalid(f"unknown base_init '{self.base_init}'")
        if self.temporal_kernel < 1 or self.temporal_kernel % 2 == 0:
            raise ConfigInvalid(
                f"temporal_kernel must be odd, got {self.temporal_kernel}"
            )
        if self.temporal_frames < 1:
            raise ConfigInvalid("temporal_frames must be >= 1")
        if min(self.offset_stride, self.offset_dilation, self.tcn_dilation) < 1:
            raise ConfigInvalid("strides and dilations must be >= 1")
        if self.output_scale <= 0:
            raise ConfigInvalid("output_scale must be positive")
        if self.is_temporal:
            span = max(self.offset_dilation, self.tcn_dilation) * (
                self.temporal_kernel - 1
            ) + 1
            if span > self.temporal_frames:
                raise ConfigInvalid(
                    f"temporal receptive field {span} exceeds "
                    f"{self.temporal_frames} frames"
                )
        if topo is not None:
            diameter = int(get_hop_distance(topo).max())
            if self.l_hop > max(diameter, 1):
                raise ConfigInvalid(
                    f"l_hop={self.l_hop} exceeds the topology's max hop {diameter}"
                )
        return self
