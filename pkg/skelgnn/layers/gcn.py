# Licensed under the BSD 3-Clause License.

from typing import List

import numpy as np

from skelgnn.autodiff import Parameter, Tensor, as_tensor, matmul
from skelgnn.errors import ShapeMismatch
from skelgnn.layers.layer import Layer, uniform_param


def gcn_forward(a_hat, x: Tensor, w: Tensor) -> Tensor:
    """Pre-activation Â X W for x of shape [N x C_in] or [B x N x C_in]."""
    a_hat, x, w = as_tensor(a_hat), as_tensor(x), as_tensor(w)
    n = a_hat.shape[-1]
    if a_hat.shape[-2] != n or x.ndim < 2 or x.shape[-2] != n:
        raise ShapeMismatch(f"graph {a_hat.shape} does not fit features {x.shape}")
    if w.ndim != 2 or w.shape[0] != x.shape[-1]:
        raise ShapeMismatch(f"weight {w.shape} does not fit features {x.shape}")
    return matmul(a_hat, matmul(x, w))


class GcnLayer(Layer):
    """Shared-weight graph convolution over a fixed normalized graph."""

    def __init__(self, name: str, a_hat: np.ndarray, c_in: int, c_out: int, seed=0):
        super().__init__(name, c_in, c_out)
        self.a_hat = np.asarray(a_hat, dtype=np.float64)
        self.weight = uniform_param(seed, f"{name}.w", (c_in, c_out), c_in)
        self._config_string = str(dict(kind="gcn", c_in=c_in, c_out=c_out))

    def __call__(self, x: Tensor, training: bool = False, **kwargs) -> Tensor:
        return gcn_forward(self.a_hat, x, self.weight)

    def parameters(self) -> List[Parameter]:
        return [self.weight]
