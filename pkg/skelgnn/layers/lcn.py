# Licensed under the BSD 3-Clause License.

from dataclasses import dataclass
from typing import Dict, List, Tuple, Union

import numpy as np

from skelgnn.autodiff import (
    Parameter,
    Tensor,
    matmul,
    mul,
    reshape,
    take,
    transpose,
)
from skelgnn.errors import MissingPairWeight, ShapeMismatch
from skelgnn.layers.layer import Layer, uniform_param

Graph = Union[np.ndarray, Tensor]


@dataclass
class LcnParams:
    """Unshared weight bank: one C_in x C_out matrix per (target, source) pair.

    weights[p] belongs to the pair (targets[p], sources[p]); pairs are sorted
    by target, then source.
    """

    num_nodes: int
    targets: np.ndarray
    sources: np.ndarray
    weights: Tensor

    @property
    def c_in(self) -> int:
        return self.weights.shape[1]

    @property
    def c_out(self) -> int:
        return self.weights.shape[2]

    @property
    def num_pairs(self) -> int:
        return len(self.targets)

    def support(self) -> np.ndarray:
        s = np.zeros((self.num_nodes, self.num_nodes), dtype=bool)
        s[self.targets, self.sources] = True
        return s

    def pair_weight(self, i: int, j: int) -> np.ndarray:
        hit = np.flatnonzero((self.targets == i) & (self.sources == j))
        if len(hit) == 0:
            raise MissingPairWeight((i, j))
        return self.weights.data[hit[0]]

    @classmethod
    def from_pairs(
        cls, weights: Dict[Tuple[int, int], np.ndarray], num_nodes: int
    ) -> "LcnParams":
        keys = sorted(weights)
        return cls(
            num_nodes=num_nodes,
            targets=np.array([i for i, _ in keys], dtype=np.int64),
            sources=np.array([j for _, j in keys], dtype=np.int64),
            weights=Tensor(np.stack([np.asarray(weights[k]) for k in keys])),
        )

    @classmethod
    def init(
        cls,
        name: str,
        support: np.ndarray,
        c_in: int,
        c_out: int,
        seed: int = 0,
    ) -> "LcnParams":
        targets, sources = np.nonzero(support)
        w = uniform_param(seed, name, (len(targets), c_in, c_out), c_in)
        return cls(support.shape[0], targets, sources, w)


def _scatter_matrix(params: LcnParams) -> np.ndarray:
    s = np.zeros((params.num_nodes, params.num_pairs))
    s[params.targets, np.arange(params.num_pairs)] = 1.0
    return s


def _pair_coefficients(a_hat: Graph, params: LcnParams, batch: int) -> Graph:
    """Graph values on the bank's pairs, shaped to broadcast over [P x B x D]."""
    n = params.num_nodes
    flat_index = params.targets * n + params.sources
    if isinstance(a_hat, Tensor):
        if a_hat.shape[-2:] != (n, n):
            raise ShapeMismatch(f"graph {a_hat.shape} does not fit {n} nodes")
        values = a_hat.data
    else:
        values = np.asarray(a_hat, dtype=np.float64)
        if values.shape != (n, n):
            raise ShapeMismatch(f"graph {values.shape} does not fit {n} nodes")
    missing = (values != 0) & ~params.support()
    if missing.any():
        where = np.argwhere(missing)[0]
        raise MissingPairWeight(tuple(int(i) for i in where[-2:]))
    if not isinstance(a_hat, Tensor):
        return values.reshape(-1)[flat_index].reshape(-1, 1, 1)
    if a_hat.ndim == 2:
        return reshape(take(reshape(a_hat, (n * n,)), flat_index, 0), (-1, 1, 1))
    if a_hat.shape[0] != batch:
        raise ShapeMismatch(f"per-sample graphs {a_hat.shape} for batch {batch}")
    coef = take(reshape(a_hat, (batch, n * n)), flat_index, 1)
    return reshape(transpose(coef), (-1, batch, 1))


def pair_aggregate(a_hat: Graph, x: Tensor, params: LcnParams) -> Tensor:
    """h_i = sum_j a_ij x_j W_ij for x of shape [N x C] or [B x N x C].

    a_hat is a constant [N x N] matrix, a Tensor [N x N], or per-sample Tensor
    graphs [B x N x N]; its nonzero entries must be covered by the bank.
    """
    single = x.ndim == 2
    if single:
        x = reshape(x, (1,) + x.shape)
    if x.ndim != 3 or x.shape[1] != params.num_nodes:
        raise ShapeMismatch(
            f"features {x.shape} do not fit {params.num_nodes} nodes"
        )
    if x.shape[2] != params.c_in:
        raise ShapeMismatch(
            f"features have {x.shape[2]} channels, bank expects {params.c_in}"
        )
    b = x.shape[0]
    coef = _pair_coefficients(a_hat, params, b)
    gathered = transpose(take(x, params.sources, 1), (1, 0, 2))
    z = mul(matmul(gathered, params.weights), coef)
    z = reshape(z, (params.num_pairs, b * params.c_out))
    h = matmul(_scatter_matrix(params), z)
    h = transpose(reshape(h, (params.num_nodes, b, params.c_out)), (1, 0, 2))
    if single:
        h = reshape(h, h.shape[1:])
    return h


def lcn_forward(a_hat: Graph, x: Tensor, params: LcnParams) -> Tensor:
    return pair_aggregate(a_hat, x, params)


class LcnLayer(Layer):
    """Locally connected layer: unshared pair weights over a fixed graph."""

    def __init__(
        self,
        name: str,
        a_hat: np.ndarray,
        c_in: int,
        c_out: int,
        seed: int = 0,
    ):
        super().__init__(name, c_in, c_out)
        self.a_hat = np.asarray(a_hat, dtype=np.float64)
        self.bank = LcnParams.init(f"{name}.w", self.a_hat != 0, c_in, c_out, seed)
        self._config_string = str(
            dict(kind="lcn", c_in=c_in, c_out=c_out, pairs=self.bank.num_pairs)
        )

    def __call__(self, x: Tensor, training: bool = False, **kwargs) -> Tensor:
        return lcn_forward(self.a_hat, x, self.bank)

    def parameters(self) -> List[Parameter]:
        return [self.bank.weights]
