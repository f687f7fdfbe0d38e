# Licensed under the BSD 3-Clause License.

"""Finite-difference checks of every layer kind and of a full model.

Each component projects its output on a fixed random tensor, so the checked
scalar depends on every output entry.
"""

from typing import Callable, Dict, List, Tuple

import numpy as np

from skelgnn.autodiff import (
    BNState,
    Tensor,
    batch_norm,
    conv1d_temporal,
    finite_diff_check,
    leaky_relu,
    mul,
    sum_,
)
from skelgnn.graphs import compute_hop_partition, h36m17, normalize_adjacency
from skelgnn.layers import (
    DynamicGraphConfig,
    GcnLayer,
    HcsfLayer,
    HcsfOptions,
    LcnLayer,
    temporal_offsets,
    uniform_param,
)
from skelgnn.models import ModelConfig, build_model

GRADCHECK_TOLERANCE = 1e-4
MAX_COORDS = 12

Case = Tuple[Callable[[], Tensor], List[Tensor]]


def _projected(fn: Callable[[], Tensor], shape, rng) -> Callable[[], Tensor]:
    r = rng.normal(size=shape)
    return lambda: sum_(mul(fn(), r))


def _input(rng, shape) -> Tensor:
    return Tensor(rng.normal(size=shape), requires_grad=True)


def _cases(seed: int) -> Dict[str, Callable[[], Case]]:
    rng = np.random.default_rng(seed)
    topo = h36m17()
    n = topo.num_nodes
    hops = compute_hop_partition(topo, 3)

    def gcn():
        layer = GcnLayer("g", normalize_adjacency(hops.short_range(1)), 3, 4, seed)
        x = _input(rng, (2, n, 3))
        return _projected(lambda: layer(x), (2, n, 4), rng), [x] + layer.parameters()

    def lcn():
        a = normalize_adjacency(hops.short_range(2), "row")
        layer = LcnLayer("l", a, 3, 4, seed)
        x = _input(rng, (2, n, 3))
        return _projected(lambda: layer(x), (2, n, 4), rng), [x] + layer.parameters()

    def hcsf_static():
        layer = HcsfLayer("h", hops, 4, 4, 1, 3, 0.5, seed=seed)
        x = _input(rng, (2, n, 4))
        return _projected(lambda: layer(x), (2, n, 4), rng), [x] + layer.parameters()

    def hcsf_dynamic():
        options = HcsfOptions(dynamic=DynamicGraphConfig(variant="combined"))
        layer = HcsfLayer("d", hops, 4, 4, 1, 2, 0.5, options=options, seed=seed)
        for g in layer.graph_modules:
            g.alpha.data = np.array(rng.uniform(0.2, 0.8))
        x = _input(rng, (2, n, 4))
        return _projected(lambda: layer(x), (2, n, 4), rng), [x] + layer.parameters()

    def offsets():
        x = _input(rng, (2, 3, 5, n))
        theta = uniform_param(seed, "theta", (4, 3, 3), 9)
        phi = uniform_param(seed, "phi", (4, 3, 3), 9)
        fn = _projected(
            lambda: temporal_offsets(x, theta, phi, stride=2, dilation=1),
            (2, 5, n, n),
            rng,
        )
        return fn, [x, theta, phi]

    def bn():
        state = BNState((n, 3), "bn")
        state.gamma.data = rng.uniform(0.5, 1.5, size=(n, 3))
        state.beta.data = rng.normal(size=(n, 3))
        x = _input(rng, (4, n, 3))
        fn = _projected(lambda: batch_norm(x, state, True), (4, n, 3), rng)
        return fn, [x, state.gamma, state.beta]

    def tcn():
        x = _input(rng, (2, 3, 7, n))
        kernel = uniform_param(seed, "k", (4, 3, 3), 9)
        fn = _projected(lambda: conv1d_temporal(x, kernel, 2, 2), (2, 4, 4, n), rng)
        return fn, [x, kernel]

    def activation():
        x = rng.normal(size=(3, n))
        x = Tensor(np.where(np.abs(x) < 0.1, 0.5, x), requires_grad=True)
        return _projected(lambda: leaky_relu(x, 0.2), (3, n), rng), [x]

    return {
        "gcn": gcn,
        "lcn": lcn,
        "hcsf_static": hcsf_static,
        "hcsf_dynamic": hcsf_dynamic,
        "temporal_offsets": offsets,
        "batch_norm": bn,
        "temporal_conv": tcn,
        "leaky_relu": activation,
        "model": lambda: model_case(seed),
    }


def model_case(seed: int) -> Case:
    """Full model with a linear activation and one layer per block.

    Every batch norm then feeds a residual sum, so each beta reaches the
    output; a beta followed by another layer and batch norm would be
    cancelled by the batch mean.
    """
    rng = np.random.default_rng([seed, 1])
    topo = h36m17()
    config = ModelConfig(
        channels=8,
        blocks=2,
        layers_per_block=1,
        l_hop=3,
        squeeze_ratio=0.5,
        dropout_p=0.0,
        leaky_alpha=1.0,
        output_scale=1.0,
        seed=seed,
    )
    net = build_model(config, topo)
    n = topo.num_nodes
    x = rng.normal(size=(3, n, 2))
    fn = _projected(lambda: net.forward(x, training=True), (3, n, 3), rng)
    return fn, net.parameters()


def gradient_suite(seed: int = 0, max_coords: int = MAX_COORDS) -> Dict[str, float]:
    """Max relative gradient error per component."""
    out = {}
    for name, case in _cases(seed).items():
        fn, inputs = case()
        out[name] = finite_diff_check(fn, inputs, max_coords=max_coords, seed=seed)
    return out
