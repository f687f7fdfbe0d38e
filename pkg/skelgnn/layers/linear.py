# Licensed under the BSD 3-Clause License.

from typing import List

import numpy as np

from skelgnn.autodiff import Parameter, Tensor, add, matmul, reshape, transpose
from skelgnn.errors import ShapeMismatch
from skelgnn.layers.layer import Layer, uniform_param


class PerNodeLinear(Layer):
    """Node-wise unshared affine map [B x N x C_in] -> [B x N x C_out]."""

    def __init__(
        self,
        name: str,
        num_nodes: int,
        c_in: int,
        c_out: int,
        bias: bool = True,
        seed: int = 0,
    ):
        super().__init__(name, c_in, c_out)
        self.num_nodes = num_nodes
        self.weight = uniform_param(
            seed, f"{name}.w", (num_nodes, c_in, c_out), c_in
        )
        self.bias = None
        if bias:
            self.bias = Parameter(np.zeros((num_nodes, c_out)), name=f"{name}.b")
        self._config_string = str(
            dict(kind="per_node_linear", c_in=c_in, c_out=c_out, bias=bias)
        )

    def __call__(self, x: Tensor, training: bool = False, **kwargs) -> Tensor:
        single = x.ndim == 2
        if single:
            x = reshape(x, (1,) + x.shape)
        if x.shape[1:] != (self.num_nodes, self.c_in):
            raise ShapeMismatch(
                f"features {x.shape} do not fit {self.num_nodes} x {self.c_in}"
            )
        y = transpose(matmul(transpose(x, (1, 0, 2)), self.weight), (1, 0, 2))
        if self.bias is not None:
            y = add(y, self.bias)
        if single:
            y = reshape(y, y.shape[1:])
        return y

    def parameters(self) -> List[Parameter]:
        return [self.weight] + ([self.bias] if self.bias is not None else [])
