# Licensed under the BSD 3-Clause License.

"""Hierarchical channel-squeezing fusion layer.

Each target node aggregates a short-range context (all nodes within S hops,
full width) and one long-range context per hop ring k = S+1..L whose width is
squeezed as k grows. Long-range contexts are fused first (F_k), the result is
fused with the short-range context (F_a), and a per-node projection W_a maps
the fused features to the output width.
"""

from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np

from skelgnn.autodiff import (
    Parameter,
    Tensor,
    add,
    concat,
    matmul,
    mul,
    reshape,
    transpose,
)
from skelgnn.errors import ConfigInvalid, InvalidHopRange, InvalidRatio, ShapeMismatch
from skelgnn.graphs import HopPartition, branch_graphs, branch_masks
from skelgnn.layers.dynamic_graph import (
    DynamicGraph,
    DynamicGraphConfig,
    OffsetTransform,
)
from skelgnn.layers.layer import Layer, uniform_param
from skelgnn.layers.lcn import Graph, LcnParams, pair_aggregate

FUSION_OPS = ("concat", "sum", "mul")


@dataclass(frozen=True)
class ChannelSchedule:
    c_in: int
    s: int
    l: int
    d: float
    c_out_per_hop: Tuple[int, ...]
    c_short: int

    def c_out(self, k: int) -> int:
        if not (self.s < k <= self.l):
            raise InvalidHopRange(
                f"hop {k} is not a long-range hop in ({self.s}, {self.l}]"
            )
        return self.c_out_per_hop[k - self.s - 1]


def make_channel_schedule(
    c_in: int, s: int, l: int, d: float, literal_eq6: bool = False
) -> ChannelSchedule:
    """C_k = max(1, round(d^(k-S) * c_in)) for k = S+1..L.

    literal_eq6 uses the exponent k-L instead, which widens rather than
    squeezes the rings closer than L.
    """
    if not (1 <= s <= l):
        raise InvalidHopRange(f"need 1 <= S <= L, got S={s}, L={l}")
    if not (0.0 < d <= 1.0):
        raise InvalidRatio(f"squeeze ratio must be in (0, 1], got {d}")
    if c_in < 1:
        raise ConfigInvalid(f"c_in must be >= 1, got {c_in}")
    ref = l if literal_eq6 else s
    widths = tuple(
        max(1, int(np.floor(d ** (k - ref) * c_in + 0.5)))
        for k in range(s + 1, l + 1)
    )
    return ChannelSchedule(c_in, s, l, float(d), widths, c_in)


@dataclass
class HcsfLayerParams:
    """Weight banks of the branches, in branch order (short first), and the
    fusion projection W_a ([N x C_f x C_out] per node, or [C_f x C_out])."""

    short_weights: LcnParams
    long_weights: List[Tuple[str, LcnParams]]
    fuse_proj: Tensor
    f_k: str = "concat"
    f_a: str = "concat"

    def banks(self) -> List[Tuple[str, LcnParams]]:
        return [("short", self.short_weights)] + list(self.long_weights)


def hop_aggregate(a_k_hat: Graph, x: Tensor, weights: LcnParams) -> Tensor:
    """h_{k,i} = sum_j a_ij x_j W_ij over the pairs of one branch graph."""
    return pair_aggregate(a_k_hat, x, weights)


def _fuse(op: str, hs: Sequence[Tensor]) -> Tensor:
    if len(hs) == 1:
        return hs[0]
    if op == "concat":
        return concat(hs, axis=-1)
    widths = {h.shape[-1] for h in hs}
    if len(widths) != 1:
        raise ShapeMismatch(f"{op} fusion needs equal widths, got {sorted(widths)}")
    out = hs[0]
    for h in hs[1:]:
        out = add(out, h) if op == "sum" else mul(out, h)
    return out


def fused_width(op_k: str, op_a: str, c_short: int, widths: Sequence[int]) -> int:
    """Input width of W_a; raises ConfigInvalid when a sum or product fusion
    would combine features of different widths."""
    if not widths:
        return c_short
    if op_k != "concat" and len(set(widths)) > 1:
        raise ConfigInvalid(f"{op_k} fusion needs equal ring widths, got {widths}")
    long_width = sum(widths) if op_k == "concat" else widths[0]
    if op_a == "concat":
        return c_short + long_width
    if long_width != c_short:
        raise ConfigInvalid(
            f"{op_a} fusion needs long-range width {long_width} to equal {c_short}"
        )
    return c_short


def hierarchical_fuse(
    h_short: Tensor,
    h_long: Sequence[Tensor],
    f_k: str,
    f_a: str,
    fuse_proj: Tensor,
) -> Tensor:
    """F_a[h_short, F_k(h_long)] W_a, for features [N x C] or [B x N x C]."""
    for op in (f_k, f_a):
        if op not in FUSION_OPS:
            raise ConfigInvalid(f"unknown fusion op '{op}'")
    h = h_short
    if len(h_long) > 0:
        h = _fuse(f_a, [h_short, _fuse(f_k, list(h_long))])
    if fuse_proj.shape[-2] != h.shape[-1]:
        raise ShapeMismatch(
            f"fused width {h.shape[-1]} does not fit projection {fuse_proj.shape}"
        )
    if fuse_proj.ndim == 2:
        return matmul(h, fuse_proj)
    single = h.ndim == 2
    if single:
        h = reshape(h, (1,) + h.shape)
    out = transpose(matmul(transpose(h, (1, 0, 2)), fuse_proj), (1, 0, 2))
    if single:
        out = reshape(out, out.shape[1:])
    return out


def hcsf_forward(
    hops: HopPartition,
    x: Tensor,
    params: HcsfLayerParams,
    schedule: ChannelSchedule,
    graphs: Sequence[Graph],
) -> Tensor:
    """Pre-activation output of one fusion layer.

    graphs holds one matrix per branch in params.banks() order: constant
    normalized matrices or Tensors from a dynamic graph.
    """
    banks = params.banks()
    if len(graphs) != len(banks):
        raise ShapeMismatch(f"{len(graphs)} graphs for {len(banks)} branches")
    if x.shape[-2] != hops.num_nodes:
        raise ShapeMismatch(f"features {x.shape} do not fit {hops.num_nodes} nodes")
    if params.short_weights.c_out != schedule.c_short:
        raise ShapeMismatch("short-range bank width differs from the schedule")
    for name, bank in params.long_weights:
        if name.startswith("hop") and bank.c_out != schedule.c_out(int(name[3:])):
            raise ShapeMismatch(f"branch {name} width differs from the schedule")
    h_short = hop_aggregate(graphs[0], x, params.short_weights)
    h_long = [
        hop_aggregate(g, x, bank) for g, (_, bank) in zip(graphs[1:], banks[1:])
    ]
    return hierarchical_fuse(
        h_short, h_long, params.f_k, params.f_a, params.fuse_proj
    )


@dataclass
class HcsfOptions:
    fusion: str = "concat"
    fusion_a: Optional[str] = None
    long_range_cumulative: bool = False
    hop_aware: bool = True
    schedule_literal_eq6: bool = False
    shared_fuse_proj: bool = False
    normalization: str = "row"
    dynamic: Optional[DynamicGraphConfig] = field(default=None)


class HcsfLayer(Layer):
    def __init__(
        self,
        name: str,
        hops: HopPartition,
        c_in: int,
        c_out: int,
        s: int,
        l: int,
        d: float = 1.0,
        options: Optional[HcsfOptions] = None,
        seed: int = 0,
    ):
        super().__init__(name, c_in, c_out)
        self.options = options = options or HcsfOptions()
        self.hops = hops
        if l > hops.max_hop:
            raise InvalidHopRange(f"L={l} exceeds max hop {hops.max_hop}")
        self.schedule = make_channel_schedule(
            c_in, s, l, d, options.schedule_literal_eq6
        )
        f_k = options.fusion
        f_a = options.fusion_a or options.fusion
        masks = branch_masks(
            hops,
            s,
            l,
            cumulative=options.long_range_cumulative,
            hop_aware=options.hop_aware,
        )
        self.branch_names = [b for b, _ in masks]
        graphs = branch_graphs(masks, options.normalization)
        self.static_graphs = [g for _, g in graphs]
        widths = [self._branch_width(b) for b in self.branch_names[1:]]
        c_f = fused_width(f_k, f_a, c_in, widths)

        dyn = options.dynamic
        self.graph_modules: List[DynamicGraph] = []
        self.offset_modules: List[OffsetTransform] = []
        if dyn is not None and dyn.variant != "static":
            dyn.validate()
            for b, m in masks:
                self.graph_modules.append(DynamicGraph(f"{name}.{b}", m, dyn, seed))
            if dyn.uses_offsets:
                count = 1 if dyn.share_offsets else len(masks)
                self.offset_modules = [
                    OffsetTransform(f"{name}.{self.branch_names[i]}", c_in, dyn, seed)
                    for i in range(count)
                ]
            supports = [g.support() for g in self.graph_modules]
        else:
            supports = [g != 0 for g in self.static_graphs]

        short = LcnParams.init(f"{name}.short", supports[0], c_in, c_in, seed)
        long = [
            (b, LcnParams.init(f"{name}.{b}", sup, c_in, w, seed))
            for b, sup, w in zip(self.branch_names[1:], supports[1:], widths)
        ]
        if options.shared_fuse_proj:
            proj_shape = (c_f, c_out)
        else:
            proj_shape = (hops.num_nodes, c_f, c_out)
        self.params = HcsfLayerParams(
            short_weights=short,
            long_weights=long,
            fuse_proj=uniform_param(seed, f"{name}.w_a", proj_shape, c_f),
            f_k=f_k,
            f_a=f_a,
        )
        self._config_string = str(
            dict(
                kind="hcsf",
                c_in=c_in,
                c_out=c_out,
                s=s,
                l=l,
                d=d,
                widths=widths,
                fusion=(f_k, f_a),
                graph=dyn.variant if dyn is not None else "static",
            )
        )

    def _branch_width(self, branch: str) -> int:
        if branch == "long":
            return self.schedule.c_out_per_hop[0]
        return self.schedule.c_out(int(branch[3:]))

    @property
    def is_dynamic(self) -> bool:
        return len(self.graph_modules) > 0

    def graphs(self, x: Tensor, frames: Optional[int] = None) -> List[Graph]:
        """Branch graphs for input x: the static normalized matrices, or one
        learned graph per branch."""
        if not self.is_dynamic:
            return list(self.static_graphs)
        offsets: List[Optional[Tensor]] = [None] * len(self.graph_modules)
        if self.offset_modules:
            computed = [om(x, frames) for om in self.offset_modules]
            offsets = [
                computed[0] if len(computed) == 1 else computed[i]
                for i in range(len(self.graph_modules))
            ]
        return [g(o) for g, o in zip(self.graph_modules, offsets)]

    def __call__(
        self, x: Tensor, training: bool = False, frames: Optional[int] = None, **kwargs
    ) -> Tensor:
        return hcsf_forward(
            self.hops, x, self.params, self.schedule, self.graphs(x, frames)
        )

    def parameters(self) -> List[Parameter]:
        params = [bank.weights for _, bank in self.params.banks()]
        params.append(self.params.fuse_proj)
        for g in self.graph_modules:
            params.extend(g.parameters())
        for om in self.offset_modules:
            params.extend(om.parameters())
        return params
