# Licensed under the BSD 3-Clause License.

from abc import ABC, abstractmethod
from typing import Dict, Iterator, List, Optional

import numpy as np


class Sampler(ABC):
    def __init__(self, *, seed: Optional[int] = None):
        self.seed = seed
        self.rng = np.random.default_rng(seed)

    @abstractmethod
    def epoch_indices(self, buffer_size: int, batch_size: int) -> List[np.ndarray]:
        """Row indices of every batch of one pass over the buffer"""
        pass

    def epoch(
        self,
        buffer: Dict[str, np.ndarray],
        batch_size: int,
    ) -> Iterator[Dict[str, np.ndarray]]:
        buffer_size = next(iter(buffer.values())).shape[0]
        for idxs in self.epoch_indices(buffer_size, batch_size):
            yield {key: buffer[key][idxs] for key in buffer.keys()}


class EpochSampler(Sampler):
    """Draws batches without replacement from a seeded permutation per epoch.

    The last, possibly partial, batch of an epoch is kept. A final batch of a
    single row is merged into the previous one when merge_singletons is set,
    since batch normalization needs two rows.
    """

    def __init__(self, *, seed: Optional[int] = None, merge_singletons: bool = True):
        super().__init__(seed=seed)
        self.merge_singletons = merge_singletons

    def epoch_indices(self, buffer_size: int, batch_size: int) -> List[np.ndarray]:
        order = self.rng.permutation(buffer_size)
        cuts = list(range(0, buffer_size, batch_size)) + [buffer_size]
        chunks = [order[a:b] for a, b in zip(cuts[:-1], cuts[1:])]
        if self.merge_singletons and len(chunks) > 1 and len(chunks[-1]) == 1:
            last = chunks.pop()
            chunks[-1] = np.concatenate([chunks[-1], last])
        return chunks
