# Licensed under the BSD 3-Clause License.

import zlib
from abc import ABC, abstractmethod
from typing import List, Optional, Tuple

import numpy as np

from skelgnn.autodiff import Parameter, Tensor


def param_rng(seed: int, name: str) -> np.random.Generator:
    """Independent generator per (seed, parameter name).

    Initial values of a parameter depend only on its name and the seed, not on
    how many parameters were created before it.
    """
    return np.random.default_rng([int(seed), zlib.crc32(name.encode("utf-8"))])


def uniform_param(
    seed: int,
    name: str,
    shape: Tuple[int, ...],
    fan_in: int,
    mask: Optional[np.ndarray] = None,
) -> Parameter:
    bound = 1.0 / np.sqrt(max(fan_in, 1))
    data = param_rng(seed, name).uniform(-bound, bound, size=shape)
    if mask is not None:
        data = data * mask
    return Parameter(data, name=name, mask=mask)


class Layer(ABC):
    def __init__(self, name: str, c_in: int, c_out: int):
        self.name = name
        self.c_in = c_in
        self.c_out = c_out
        self._config_string = ""

    @abstractmethod
    def __call__(self, x: Tensor, training: bool = False, **kwargs) -> Tensor:
        pass

    @abstractmethod
    def parameters(self) -> List[Parameter]:
        pass

    def write_config(self, output_file):
        print(f"{self.name}: {self._config_string}", file=output_file)
