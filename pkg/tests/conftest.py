import numpy as np
import pytest

from skelgnn.data import SyntheticRigSpec, synthesize_dataset
from skelgnn.graphs import build_topology, h36m17
from skelgnn.models import ModelConfig
from skelgnn.tools.logging import train_log_reset


@pytest.fixture
def topo():
    return h36m17()


@pytest.fixture
def path4():
    return build_topology(4, [(0, 1), (1, 2), (2, 3)], [(1, 2)], 0)


@pytest.fixture
def rng():
    return np.random.default_rng(0)


@pytest.fixture
def small_config():
    def make(**kwargs):
        fields = dict(
            channels=8, blocks=1, l_hop=2, squeeze_ratio=0.5, dropout_p=0.0
        )
        fields.update(kwargs)
        return ModelConfig(**fields)

    return make


@pytest.fixture
def small_dataset(topo):
    spec = SyntheticRigSpec(topology=topo, noise_std_2d=1.0, seed=3)
    return synthesize_dataset(spec, 24, 8)


@pytest.fixture(autouse=True)
def _reset_train_log():
    yield
    train_log_reset()
