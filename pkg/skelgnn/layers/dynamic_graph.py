# Licensed under the BSD 3-Clause License.

"""Learned per-branch graphs A = M + alpha * O.

M is a trainable base graph, O an input-conditioned offset
tanh((X W_theta)(X W_phi)^T) coupling target i (rows) with source j (columns),
and alpha a trainable scalar. In temporal-aware mode the embeddings come from
a temporal convolution over the frame axis, which smooths single-frame
outliers before the offsets are formed.
"""

from dataclasses import dataclass
from typing import List, Optional, Union

import numpy as np

from skelgnn.autodiff import (
    Parameter,
    Tensor,
    add,
    as_tensor,
    conv1d_temporal,
    matmul,
    mul,
    reshape,
    take,
    tanh,
    transpose,
)
from skelgnn.errors import ConfigInvalid, ShapeMismatch
from skelgnn.graphs import HopPartition, normalize_adjacency
from skelgnn.layers.layer import param_rng, uniform_param

GRAPH_VARIANTS = ("static", "m_only", "o_only", "m_plus_o", "combined")
BASE_INITS = ("physical", "dense", "random")


def _swap_last(t: Tensor) -> Tensor:
    axes = list(range(t.ndim))
    axes[-1], axes[-2] = axes[-2], axes[-1]
    return transpose(t, axes)


def dynamic_offsets(x: Tensor, w_theta: Tensor, w_phi: Tensor) -> Tensor:
    """O = tanh((X W_theta)(X W_phi)^T) for X of shape [N x C] or [B x N x C]."""
    x, w_theta, w_phi = as_tensor(x), as_tensor(w_theta), as_tensor(w_phi)
    if w_theta.shape != w_phi.shape or w_theta.ndim != 2:
        raise ShapeMismatch(f"offset transforms {w_theta.shape} and {w_phi.shape}")
    if x.ndim < 2 or x.shape[-1] != w_theta.shape[0]:
        raise ShapeMismatch(f"features {x.shape} do not fit {w_theta.shape}")
    return tanh(matmul(matmul(x, w_theta), _swap_last(matmul(x, w_phi))))


def combine_graph(m_k, o_k, alpha) -> Tensor:
    """A_k = M_k + alpha * O_k, without renormalization."""
    m_k, o_k = as_tensor(m_k), as_tensor(o_k)
    if m_k.shape != o_k.shape[-2:] or o_k.ndim < 2:
        raise ShapeMismatch(f"base graph {m_k.shape} and offsets {o_k.shape}")
    return add(m_k, mul(alpha, o_k))


def temporal_offsets(
    x: Tensor,
    theta_kernel: Tensor,
    phi_kernel: Tensor,
    stride: int = 1,
    dilation: int = 1,
) -> Tensor:
    """Per-frame offsets from temporally convolved embeddings.

    x is [C x T x N] or [B x C x T x N]; the result is [T x N x N] (or
    [B x T x N x N]). With stride > 1 frame t uses offset frame t // stride.
    """
    x = as_tensor(x)
    batched = x.ndim == 4
    if not batched:
        x = reshape(x, (1,) + x.shape)
    t = x.shape[2]
    e_theta = conv1d_temporal(x, theta_kernel, stride, dilation)
    e_phi = conv1d_temporal(x, phi_kernel, stride, dilation)
    e_theta = transpose(e_theta, (0, 2, 3, 1))
    e_phi = transpose(e_phi, (0, 2, 3, 1))
    o = tanh(matmul(e_theta, _swap_last(e_phi)))
    if stride > 1:
        o = take(o, np.arange(t) // stride, 1)
    if not batched:
        o = reshape(o, o.shape[1:])
    return o


def base_graph_from_mask(
    mask: np.ndarray,
    init: str = "physical",
    rng: Optional[np.random.Generator] = None,
) -> np.ndarray:
    n = mask.shape[0]
    if init == "physical":
        return normalize_adjacency(mask, "row", allow_empty_rows=True)
    elif init == "dense":
        return np.full((n, n), 1.0 / n)
    elif init == "random":
        rng = rng if rng is not None else np.random.default_rng(0)
        return normalize_adjacency(rng.uniform(0.0, 1.0, size=(n, n)), "row")
    else:
        raise ConfigInvalid(f"unknown base graph init '{init}'")


def init_base_graph(
    hops: HopPartition, k: int, init: str = "physical", seed: int = 0
) -> np.ndarray:
    """Initial M_k: the row-normalized hop-k ring, uniform 1/N, or seeded
    uniform(0, 1) values row-normalized."""
    return base_graph_from_mask(
        hops.long_range(k), init, np.random.default_rng(seed)
    )


@dataclass
class DynamicGraphConfig:
    variant: str = "combined"
    base_init: str = "physical"
    mask_base: bool = True
    freeze_alpha: bool = False
    share_offsets: bool = False
    embed_dim: Optional[int] = None
    temporal: bool = False
    kernel: int = 1
    stride: int = 1
    dilation: int = 1

    def validate(self):
        if self.variant not in GRAPH_VARIANTS:
            raise ConfigInvalid(f"unknown graph variant '{self.variant}'")
        if self.base_init not in BASE_INITS:
            raise ConfigInvalid(f"unknown base graph init '{self.base_init}'")
        if self.kernel < 1 or self.kernel % 2 == 0:
            raise ConfigInvalid(f"temporal kernel must be odd, got {self.kernel}")
        if self.stride < 1 or self.dilation < 1:
            raise ConfigInvalid("temporal stride and dilation must be >= 1")

    @property
    def uses_offsets(self) -> bool:
        return self.variant in ("o_only", "m_plus_o", "combined")

    @property
    def uses_base(self) -> bool:
        return self.variant in ("m_only", "m_plus_o", "combined")

    @property
    def offsets_reach_graph(self) -> bool:
        """False when alpha is frozen at 0, so A equals M exactly."""
        frozen = self.variant == "combined" and self.freeze_alpha
        return self.uses_offsets and not frozen


def embed_dim_for(c_in: int, config: DynamicGraphConfig) -> int:
    return config.embed_dim if config.embed_dim else max(4, c_in // 4)


class OffsetTransform:
    """The (W_theta, W_phi) pair of one branch, or temporal kernels."""

    def __init__(self, name: str, c_in: int, config: DynamicGraphConfig, seed=0):
        self.name = name
        self.config = config
        c_e = embed_dim_for(c_in, config)
        if config.temporal:
            shape = (c_e, c_in, config.kernel)
            fan_in = c_in * config.kernel
        else:
            shape = (c_in, c_e)
            fan_in = c_in
        self.theta = uniform_param(seed, f"{name}.theta", shape, fan_in)
        self.phi = uniform_param(seed, f"{name}.phi", shape, fan_in)

    def __call__(self, x: Tensor, frames: Optional[int] = None) -> Tensor:
        """Offsets [B x N x N] for features [B x N x C]; in temporal mode the
        batch axis holds `frames` consecutive frames per sequence."""
        if not self.config.temporal:
            return dynamic_offsets(x, self.theta, self.phi)
        frames = frames or 1
        b, n, c = x.shape
        if b % frames != 0:
            raise ShapeMismatch(f"batch {b} is not a multiple of {frames} frames")
        seq = transpose(reshape(x, (b // frames, frames, n, c)), (0, 3, 1, 2))
        o = temporal_offsets(
            seq, self.theta, self.phi, self.config.stride, self.config.dilation
        )
        return reshape(o, (b, n, n))

    def parameters(self) -> List[Parameter]:
        return [self.theta, self.phi]


class DynamicGraph:
    """Graph of one branch under the configured variant."""

    def __init__(
        self, name: str, mask: np.ndarray, config: DynamicGraphConfig, seed=0
    ):
        self.name = name
        self.config = config
        self.branch_mask = np.asarray(mask, dtype=np.float64)
        n = self.branch_mask.shape[0]
        self.base: Optional[Parameter] = None
        if config.uses_base:
            masked = config.mask_base and config.base_init == "physical"
            self.base = Parameter(
                base_graph_from_mask(
                    self.branch_mask, config.base_init, param_rng(seed, f"{name}.m")
                ),
                name=f"{name}.m",
                mask=self.branch_mask if masked else None,
            )
        self.alpha: Union[Parameter, float, None] = None
        if config.variant == "combined":
            if config.freeze_alpha:
                self.alpha = 0.0
            else:
                self.alpha = Parameter(0.0, name=f"{name}.alpha")
        elif config.variant == "m_plus_o":
            self.alpha = 1.0
        self.num_nodes = n

    def support(self) -> np.ndarray:
        """Pairs this graph may make nonzero."""
        if self.config.offsets_reach_graph or (
            self.base is not None and self.base.mask is None
        ):
            return np.ones((self.num_nodes, self.num_nodes), dtype=bool)
        return self.branch_mask != 0

    def __call__(self, offsets: Optional[Tensor] = None) -> Tensor:
        variant = self.config.variant
        if variant == "m_only":
            return self.base.masked()
        assert offsets is not None, f"graph variant {variant} needs offsets"
        if variant == "o_only":
            return offsets
        return combine_graph(self.base.masked(), offsets, self.alpha)

    def parameters(self) -> List[Parameter]:
        params = [self.base] if self.base is not None else []
        if isinstance(self.alpha, Parameter):
            params.append(self.alpha)
        return params
