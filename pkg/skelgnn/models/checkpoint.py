# Licensed under the BSD 3-Clause License.

"""Self-describing JSON checkpoints.

Values are stored as hexadecimal float literals (float.hex) so that a save /
load round trip reproduces every parameter bit for bit.
"""

import json
import os
from typing import Dict, Optional

import numpy as np

from skelgnn.errors import IoFailure, ShapeConflict, VersionMismatch
from skelgnn.graphs import SkeletonTopology, topology_from_dict
from skelgnn.models.config import ModelConfig
from skelgnn.models.model import Model, build_model

FORMAT_VERSION = 1


def _encode(name: str, a: np.ndarray) -> Dict:
    return {
        "name": name,
        "shape": list(a.shape),
        "values": [float(v).hex() for v in np.asarray(a).reshape(-1)],
    }


def _decode(entry: Dict) -> np.ndarray:
    values = np.array([float.fromhex(v) for v in entry["values"]], dtype=np.float64)
    return values.reshape(entry["shape"])


def checkpoint_dict(model: Model) -> Dict:
    return {
        "format_version": FORMAT_VERSION,
        "config": model.config.to_dict(),
        "topology": model.topo.to_dict(),
        "params": [
            _encode(name, p.data) for name, p in model.named_parameters().items()
        ],
        "buffers": [_encode(name, b) for name, b in model.buffers().items()],
    }


def save_checkpoint(model: Model, path: str):
    directory = os.path.dirname(os.path.abspath(path))
    try:
        os.makedirs(directory, exist_ok=True)
        with open(path, "w") as f:
            json.dump(checkpoint_dict(model), f, indent=1)
            f.write("\n")
    except OSError as e:
        raise IoFailure(f"cannot write checkpoint {path}: {e}") from e


def read_checkpoint(path: str) -> Dict:
    try:
        with open(path) as f:
            doc = json.load(f)
    except OSError as e:
        raise IoFailure(f"cannot read checkpoint {path}: {e}") from e
    except json.JSONDecodeError as e:
        raise IoFailure(f"{path} is not a checkpoint: {e}") from e
    version = doc.get("format_version")
    if version != FORMAT_VERSION:
        raise VersionMismatch(
            f"{path} has format version {version}, expected {FORMAT_VERSION}"
        )
    return doc


def load_state(model: Model, doc: Dict):
    """Copies stored parameters and buffers into model, checking that names and
    shapes agree exactly."""
    params = model.named_parameters()
    stored = {e["name"]: e for e in doc["params"]}
    missing = sorted(set(params) - set(stored))
    extra = sorted(set(stored) - set(params))
    if missing or extra:
        raise ShapeConflict(
            f"checkpoint parameters differ: missing {missing[:5]}, extra {extra[:5]}"
        )
    for name, p in params.items():
        if tuple(stored[name]["shape"]) != p.shape:
            raise ShapeConflict(
                f"{name}: stored shape {tuple(stored[name]['shape'])}, model {p.shape}"
            )
    buffers = model.buffers()
    stored_buffers = {e["name"]: e for e in doc.get("buffers", [])}
    if set(stored_buffers) != set(buffers):
        raise ShapeConflict("checkpoint buffers do not match the model")
    for name, b in buffers.items():
        if tuple(stored_buffers[name]["shape"]) != b.shape:
            raise ShapeConflict(f"{name}: stored buffer shape differs")
    for name, p in params.items():
        p.data = _decode(stored[name])
        p.grad = None
    for name in buffers:
        model.set_buffer(name, _decode(stored_buffers[name]))


def load_checkpoint(
    path: str,
    config: Optional[ModelConfig] = None,
    topo: Optional[SkeletonTopology] = None,
) -> Model:
    """Rebuilds a model from a checkpoint; config and topology default to the
    ones echoed in the file."""
    doc = read_checkpoint(path)
    if config is None:
        config = ModelConfig.from_dict(doc["config"])
    if topo is None:
        stored = doc["topology"]
        topo = topology_from_dict(stored, stored.get("name", "custom"))
    model = build_model(config, topo)
    load_state(model, doc)
    return model
