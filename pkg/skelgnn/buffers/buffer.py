# Licensed under the BSD 3-Clause License.

from abc import ABC, abstractmethod
from typing import Dict, Iterator, Optional

import numpy as np

from skelgnn.samplers.sampler import EpochSampler, Sampler


class Buffer(ABC):
    """Base class for buffers"""

    def __init__(
        self,
        buffer_size: int,
        sampler: Sampler,
    ):
        self.buffer_size = buffer_size
        self.sampler = sampler

    @abstractmethod
    def insert(self, rows: Dict[str, np.ndarray]):
        """Appends rows (arrays sharing their first axis) to the buffer"""
        pass

    @abstractmethod
    def epoch(self, batch_size: int) -> Iterator[Dict[str, np.ndarray]]:
        """Uses the sampler to yield every stored row once, in batches"""
        pass


class PoseBuffer(Buffer):
    """Fixed-capacity array storage of (inputs, targets) pairs.

    Arrays are allocated on the first insert from the row shapes it carries.
    """

    def __init__(
        self,
        buffer_size: int,
        sampler: Optional[Sampler] = None,
    ):
        super().__init__(buffer_size, sampler or EpochSampler())
        self.current_size = 0
        self.buffers: Dict[str, np.ndarray] = {}
        self.keys = None
        self.first_insert_done = False

    def init_buffer(self, rows: Dict[str, np.ndarray]):
        self.keys = list(rows.keys())
        for key in self.keys:
            self.buffers[key] = np.zeros(
                (self.buffer_size,) + rows[key].shape[1:], dtype=np.float64
            )
        self.first_insert_done = True

    def insert(self, rows: Dict[str, np.ndarray]):
        if not self.first_insert_done:
            self.init_buffer(rows)
        assert set(rows.keys()) == set(self.keys), "buffer keys differ"
        inc = next(iter(rows.values())).shape[0]
        assert all(v.shape[0] == inc for v in rows.values()), "row counts differ"
        assert self.current_size + inc <= self.buffer_size, (
            f"buffer overflow: {self.current_size} + {inc} > {self.buffer_size}"
        )
        idxs = np.arange(self.current_size, self.current_size + inc)
        for key in self.keys:
            self.buffers[key][idxs] = rows[key]
        self.current_size += inc

    def pre_sample(self) -> Dict[str, np.ndarray]:
        return {key: self.buffers[key][: self.current_size] for key in self.buffers}

    def epoch(self, batch_size: int) -> Iterator[Dict[str, np.ndarray]]:
        return self.sampler.epoch(self.pre_sample(), batch_size)
