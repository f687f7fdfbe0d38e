# Licensed under the BSD 3-Clause License.

"""The lifting network: input layer, residual blocks and a per-node regression
head.

Single-frame models map [B x N x 2] to [B x N x 3]. Temporal models take
[B x 2 x T x N] windows, run every frame through the graph layers, mix frames
with a temporal convolution in each block and regress the centre frame.
"""

import logging
from dataclasses import replace
from typing import Dict, List, Optional, Tuple

import numpy as np

from skelgnn.autodiff import (
    BNState,
    Parameter,
    Tensor,
    add,
    as_tensor,
    batch_norm,
    dropout,
    leaky_relu,
    reshape,
    scale,
    take,
    transpose,
)
from skelgnn.errors import ConfigInvalid, ShapeMismatch
from skelgnn.graphs import (
    HopPartition,
    SkeletonTopology,
    compute_hop_partition,
    normalize_adjacency,
)
from skelgnn.layers import (
    DynamicGraphConfig,
    GcnLayer,
    HcsfLayer,
    HcsfOptions,
    Layer,
    LcnLayer,
    PerNodeLinear,
    TemporalConvLayer,
    embed_dim_for,
    fused_width,
    make_channel_schedule,
)
from skelgnn.models.config import ModelConfig

logger = logging.getLogger(__name__)


def _dynamic_config(config: ModelConfig) -> Optional[DynamicGraphConfig]:
    if config.graph_mode not in ("hcsf_dynamic", "hcsf_dynamic_temporal"):
        return None
    temporal = config.graph_mode == "hcsf_dynamic_temporal"
    return DynamicGraphConfig(
        variant=config.graph_variant,
        base_init=config.base_init,
        mask_base=config.mask_base,
        freeze_alpha=config.freeze_alpha,
        share_offsets=config.share_offsets,
        embed_dim=config.embed_dim,
        temporal=temporal,
        kernel=config.temporal_kernel if temporal else 1,
        stride=config.offset_stride if temporal else 1,
        dilation=config.offset_dilation if temporal else 1,
    )


def _hcsf_options(config: ModelConfig) -> HcsfOptions:
    return HcsfOptions(
        fusion=config.fusion,
        long_range_cumulative=config.long_range_cumulative,
        hop_aware=config.hop_aware,
        schedule_literal_eq6=config.schedule_literal_eq6,
        shared_fuse_proj=config.shared_fuse_proj,
        dynamic=_dynamic_config(config),
    )


def graph_layer(
    name: str,
    config: ModelConfig,
    hops: HopPartition,
    c_in: int,
    c_out: int,
) -> Layer:
    """One graph layer of the configured kind."""
    mode = config.graph_mode
    if mode == "static_gcn":
        a_hat = normalize_adjacency(hops.short_range(config.l_hop), "symmetric")
        return GcnLayer(name, a_hat, c_in, c_out, seed=config.seed)
    if mode == "static_lcn":
        a_hat = normalize_adjacency(hops.short_range(config.l_hop), "row")
        return LcnLayer(name, a_hat, c_in, c_out, seed=config.seed)
    return HcsfLayer(
        name,
        hops,
        c_in,
        c_out,
        config.s_hop,
        config.l_hop,
        config.squeeze_ratio,
        options=_hcsf_options(config),
        seed=config.seed,
    )


class Block:
    """x + branch(x), the branch being a stack of layer -> BN -> LeakyReLU ->
    dropout stages."""

    def __init__(self, name: str, stages: List[Tuple[Layer, BNState]]):
        self.name = name
        self.stages = stages

    def __call__(
        self,
        model: "Model",
        x: Tensor,
        training: bool,
        frames: int,
    ) -> Tensor:
        y = x
        for layer, bn in self.stages:
            h = layer(y, training=training, frames=frames)
            y = model.activate(h, bn, training)
        if model.config.ablate_residual_branch:
            return x
        return add(x, y)


class Model:
    def __init__(self, config: ModelConfig, topo: SkeletonTopology):
        self.config = config.validate(topo)
        self.topo = topo
        self.hops = compute_hop_partition(topo, config.l_hop)
        self.rng = np.random.default_rng([config.seed, 0x5EED])
        n, c = topo.num_nodes, config.channels

        self.input_layer = graph_layer("input", config, self.hops, 2, c)
        self.input_bn = BNState((n, c), "input.bn")
        self.blocks: List[Block] = []
        for b in range(config.blocks):
            stages = []
            if config.is_temporal:
                names = [f"block{b}.graph", f"block{b}.tcn"]
                layers = [
                    graph_layer(names[0], config, self.hops, c, c),
                    TemporalConvLayer(
                        names[1],
                        c,
                        c,
                        config.temporal_kernel,
                        dilation=config.tcn_dilation,
                        seed=config.seed,
                    ),
                ]
            else:
                names = [
                    f"block{b}.layer{i}" for i in range(config.layers_per_block)
                ]
                layers = [graph_layer(nm, config, self.hops, c, c) for nm in names]
            for nm, layer in zip(names, layers):
                stages.append((layer, BNState((n, c), f"{nm}.bn")))
            self.blocks.append(Block(f"block{b}", stages))
        self.output_layer = PerNodeLinear(
            "output", n, c, 3, bias=True, seed=config.seed
        )

        self._registry: Dict[str, Parameter] = {}
        for p in self._collect_parameters():
            assert p.name not in self._registry, f"duplicate parameter name {p.name}"
            self._registry[p.name] = p
        logger.info(
            "built %s model with %d parameters", config.graph_mode, self.num_parameters
        )

    def layers(self) -> List[Layer]:
        out = [self.input_layer]
        for block in self.blocks:
            out.extend(layer for layer, _ in block.stages)
        out.append(self.output_layer)
        return out

    def bn_states(self) -> List[BNState]:
        out = [self.input_bn]
        for block in self.blocks:
            out.extend(bn for _, bn in block.stages)
        return out

    def _collect_parameters(self) -> List[Parameter]:
        params: List[Parameter] = list(self.input_layer.parameters())
        params.extend(self.input_bn.parameters())
        for block in self.blocks:
            for layer, bn in block.stages:
                params.extend(layer.parameters())
                params.extend(bn.parameters())
        params.extend(self.output_layer.parameters())
        return params

    def parameters(self) -> List[Parameter]:
        return list(self._registry.values())

    def named_parameters(self) -> Dict[str, Parameter]:
        return dict(self._registry)

    def buffers(self) -> Dict[str, np.ndarray]:
        out = {}
        for bn in self.bn_states():
            prefix = bn.gamma.name[: -len(".gamma")]
            out[f"{prefix}.running_mean"] = bn.running_mean
            out[f"{prefix}.running_var"] = bn.running_var
        return out

    def set_buffer(self, name: str, value: np.ndarray):
        for bn in self.bn_states():
            prefix = bn.gamma.name[: -len(".gamma")]
            if name == f"{prefix}.running_mean":
                bn.running_mean = np.array(value, dtype=np.float64)
                return
            if name == f"{prefix}.running_var":
                bn.running_var = np.array(value, dtype=np.float64)
                return
        raise KeyError(name)

    @property
    def num_parameters(self) -> int:
        return int(sum(p.size for p in self._registry.values()))

    def zero_grad(self):
        for p in self._registry.values():
            p.zero_grad()

    def activate(self, x: Tensor, bn: BNState, training: bool) -> Tensor:
        x = batch_norm(x, bn, training)
        x = leaky_relu(x, self.config.leaky_alpha)
        return dropout(x, self.config.dropout_p, training, self.rng)

    def _frames_from_input(self, x: Tensor) -> Tuple[Tensor, int, int, bool]:
        """Flattens the input to [B*T x N x 2]; returns it with B, T and
        whether a batch axis was added."""
        n = self.topo.num_nodes
        if self.config.is_temporal:
            t = self.config.temporal_frames
            single = x.ndim == 3
            if single:
                x = reshape(x, (1,) + x.shape)
            if x.ndim != 4 or x.shape[1:] != (2, t, n):
                raise ShapeMismatch(f"expected [B x 2 x {t} x {n}], got {x.shape}")
            b = x.shape[0]
            x = reshape(transpose(x, (0, 2, 3, 1)), (b * t, n, 2))
            return x, b, t, single
        single = x.ndim == 2
        if single:
            x = reshape(x, (1,) + x.shape)
        if x.ndim != 3 or x.shape[1:] != (n, 2):
            raise ShapeMismatch(f"expected [B x {n} x 2], got {x.shape}")
        return x, x.shape[0], 1, single

    def __call__(self, x, training: bool = False) -> Tensor:
        return self.forward(x, training)

    def forward(self, x, training: bool = False) -> Tensor:
        x, b, t, single = self._frames_from_input(as_tensor(x))
        h = self.input_layer(x, training=training, frames=t)
        h = self.activate(h, self.input_bn, training)
        for block in self.blocks:
            h = block(self, h, training, t)
        if t > 1:
            n, c = h.shape[1], h.shape[2]
            h = take(reshape(h, (b, t, n, c)), t // 2, 1)
        out = scale(self.output_layer(h, training=training), self.config.output_scale)
        if single:
            out = reshape(out, out.shape[1:])
        return out

    def predict(self, x: np.ndarray) -> np.ndarray:
        return self.forward(x, training=False).data

    def write_config(self, output_file):
        print(self.config.to_dict(), file=output_file)
        for layer in self.layers():
            layer.write_config(output_file)


def build_model(config: ModelConfig, topo: SkeletonTopology) -> Model:
    return Model(config, topo)


def forward(model: Model, batch, training: bool = False) -> Tensor:
    return model.forward(batch, training)


def _graph_layer_count(
    config: ModelConfig, hops: HopPartition, c_in: int, c_out: int
) -> int:
    n = hops.num_nodes
    mode = config.graph_mode
    if mode == "static_gcn":
        return c_in * c_out
    if mode == "static_lcn":
        return int(np.count_nonzero(hops.short_range(config.l_hop))) * c_in * c_out
    options = _hcsf_options(config)
    schedule = make_channel_schedule(
        c_in,
        config.s_hop,
        config.l_hop,
        config.squeeze_ratio,
        config.schedule_literal_eq6,
    )
    if config.hop_aware:
        rings = [
            (hops.long_range(k, config.long_range_cumulative), w)
            for k, w in zip(
                range(config.s_hop + 1, config.l_hop + 1), schedule.c_out_per_hop
            )
        ]
    elif config.l_hop > config.s_hop:
        union = sum(
            hops.long_range(k, config.long_range_cumulative)
            for k in range(config.s_hop + 1, config.l_hop + 1)
        )
        rings = [((union > 0).astype(np.float64), schedule.c_out_per_hop[0])]
    else:
        rings = []
    widths = [w for _, w in rings]
    masks = [hops.short_range(config.s_hop)] + [m for m, _ in rings]
    dyn = options.dynamic
    total = 0
    if dyn is not None and dyn.variant != "static":
        all_pairs = dyn.offsets_reach_graph or not (
            dyn.mask_base and dyn.base_init == "physical"
        )
        pairs = [n * n if all_pairs else int(np.count_nonzero(m)) for m in masks]
        if dyn.uses_base:
            total += len(masks) * n * n
        if dyn.variant == "combined" and not dyn.freeze_alpha:
            total += len(masks)
        if dyn.uses_offsets:
            c_e = embed_dim_for(c_in, dyn)
            per = 2 * c_in * c_e * (dyn.kernel if dyn.temporal else 1)
            total += per * (1 if dyn.share_offsets else len(masks))
    else:
        pairs = [int(np.count_nonzero(m)) for m in masks]
    total += pairs[0] * c_in * c_in
    total += sum(p * c_in * w for p, w in zip(pairs[1:], widths))
    c_f = fused_width(options.fusion, options.fusion, c_in, widths)
    total += (1 if config.shared_fuse_proj else n) * c_f * c_out
    return total


def parameter_count(config: ModelConfig, topo: SkeletonTopology) -> int:
    """Size of the parameter registry of build_model(config, topo), from
    shapes alone."""
    config.validate(topo)
    hops = compute_hop_partition(topo, config.l_hop)
    n, c = topo.num_nodes, config.channels
    bn = 2 * n * c
    total = _graph_layer_count(config, hops, 2, c) + bn
    for _ in range(config.blocks):
        if config.is_temporal:
            total += _graph_layer_count(config, hops, c, c) + bn
            total += c * c * config.temporal_kernel + bn
        else:
            per_layer = _graph_layer_count(config, hops, c, c) + bn
            total += config.layers_per_block * per_layer
    total += n * c * 3 + n * 3
    return total


def match_channels(
    config: ModelConfig, topo: SkeletonTopology, budget: int, max_channels: int = 512
) -> ModelConfig:
    """Copy of config whose channel width brings parameter_count closest to
    budget."""
    best: Optional[Tuple[int, int]] = None
    for c in range(1, max_channels + 1):
        try:
            count = parameter_count(replace(config, channels=c), topo)
        except ConfigInvalid:
            continue
        gap = abs(count - budget)
        if best is None or gap < best[0]:
            best = (gap, c)
        if count > budget:
            break
    if best is None:
        raise ConfigInvalid(f"no channel width fits a budget of {budget}")
    return replace(config, channels=best[1])
