# Licensed under the BSD 3-Clause License.

"""Run configuration: one JSON document with the sections topology, model,
training, data, metrics and output_dir, plus dotted command-line overrides."""

import json
import os
from dataclasses import asdict, dataclass, field
from typing import Any, Dict, List, Optional, Sequence, Tuple

from skelgnn.errors import ConfigInvalid, IoFailure
from skelgnn.graphs import SkeletonTopology, load_topology
from skelgnn.metrics import DEFAULT_AUC_THRESHOLDS
from skelgnn.models import ModelConfig, config_from_dict

OUTPUT_ROOT_ENV = "SKELGNN_OUTPUT_ROOT"
DEFAULT_OUTPUT_ROOT = "runs"
DEFAULT_PERCENTILES = (0.5, 0.4, 0.3, 0.2, 0.1, 0.05)


@dataclass
class TrainConfig:
    epochs: int = 80
    batch_size: int = 256
    lr0: float = 0.001
    lr_decay: float = 0.95
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    flip_augment: bool = True
    save_every: int = 1
    seed: int = 0

    @classmethod
    def from_dict(cls, d: Optional[Dict]) -> "TrainConfig":
        return config_from_dict(cls, d, "training")

    def to_dict(self) -> Dict:
        return asdict(self)

    def validate(self) -> "TrainConfig":
        if self.epochs < 1 or self.batch_size < 1 or self.save_every < 1:
            raise ConfigInvalid("epochs, batch_size and save_every must be >= 1")
        if self.lr0 < 0:
            raise ConfigInvalid(f"lr0 must be nonnegative, got {self.lr0}")
        if not (0.0 < self.lr_decay <= 1.0):
            raise ConfigInvalid(f"lr_decay must be in (0, 1], got {self.lr_decay}")
        if not (0.0 <= self.beta1 < 1.0 and 0.0 <= self.beta2 < 1.0):
            raise ConfigInvalid("Adam betas must be in [0, 1)")
        if self.eps <= 0:
            raise ConfigInvalid("Adam eps must be positive")
        return self


@dataclass
class DataConfig:
    train: Optional[str] = None
    test: Optional[str] = None
    normalize: bool = True

    @classmethod
    def from_dict(cls, d: Optional[Dict]) -> "DataConfig":
        return config_from_dict(cls, d, "data")

    def to_dict(self) -> Dict:
        return asdict(self)

    def validate(self) -> "DataConfig":
        if not self.train:
            raise ConfigInvalid("data.train is required")
        for path in (self.train, self.test):
            if path and not os.path.isfile(os.path.expanduser(path)):
                raise ConfigInvalid(f"data file not found: {path}")
        return self


@dataclass
class MetricsConfig:
    pck_threshold: float = 150.0
    auc_thresholds: Sequence[float] = DEFAULT_AUC_THRESHOLDS
    root_relative: bool = True
    bin_width: float = 10.0
    percentiles: Sequence[float] = DEFAULT_PERCENTILES
    flip_test: bool = True
    batch_size: int = 1024
    workers: int = 1

    @classmethod
    def from_dict(cls, d: Optional[Dict]) -> "MetricsConfig":
        cfg = config_from_dict(cls, d, "metrics")
        cfg.auc_thresholds = tuple(float(t) for t in cfg.auc_thresholds)
        cfg.percentiles = tuple(float(p) for p in cfg.percentiles)
        return cfg

    def to_dict(self) -> Dict:
        d = asdict(self)
        d["auc_thresholds"] = list(self.auc_thresholds)
        d["percentiles"] = list(self.percentiles)
        return d

    def validate(self) -> "MetricsConfig":
        if self.pck_threshold <= 0 or self.bin_width <= 0:
            raise ConfigInvalid("pck_threshold and bin_width must be positive")
        t = list(self.auc_thresholds)
        if not t or any(b <= a for a, b in zip(t, t[1:])):
            raise ConfigInvalid("auc_thresholds must be a nonempty ascending list")
        if any(not (0.0 < p <= 1.0) for p in self.percentiles):
            raise ConfigInvalid("percentiles must be fractions in (0, 1]")
        if self.workers < 1 or self.batch_size < 1:
            raise ConfigInvalid("workers and batch_size must be >= 1")
        return self


@dataclass
class RunConfig:
    topology: str = "h36m17"
    model: ModelConfig = field(default_factory=ModelConfig)
    training: TrainConfig = field(default_factory=TrainConfig)
    data: DataConfig = field(default_factory=DataConfig)
    metrics: MetricsConfig = field(default_factory=MetricsConfig)
    output_dir: Optional[str] = None

    @classmethod
    def from_dict(cls, d: Optional[Dict]) -> "RunConfig":
        d = dict(d or {})
        known = {"topology", "model", "training", "data", "metrics", "output_dir"}
        unknown = sorted(set(d) - known)
        if unknown:
            raise ConfigInvalid(f"unknown run config sections: {', '.join(unknown)}")
        return cls(
            topology=d.get("topology", "h36m17"),
            model=ModelConfig.from_dict(d.get("model")),
            training=TrainConfig.from_dict(d.get("training")),
            data=DataConfig.from_dict(d.get("data")),
            metrics=MetricsConfig.from_dict(d.get("metrics")),
            output_dir=d.get("output_dir"),
        )

    def to_dict(self) -> Dict:
        return {
            "topology": self.topology,
            "model": self.model.to_dict(),
            "training": self.training.to_dict(),
            "data": self.data.to_dict(),
            "metrics": self.metrics.to_dict(),
            "output_dir": self.output_dir,
        }

    def validate(self) -> Tuple["RunConfig", SkeletonTopology]:
        """Checks every section and returns the loaded topology."""
        topo = load_topology(self.topology)
        self.model.validate(topo)
        self.training.validate()
        self.data.validate()
        self.metrics.validate()
        return self, topo

    def run_dir(self) -> str:
        """output_dir, resolved against $SKELGNN_OUTPUT_ROOT when relative."""
        out = os.path.expanduser(self.output_dir or "run")
        if os.path.isabs(out):
            return out
        root = os.environ.get(OUTPUT_ROOT_ENV, DEFAULT_OUTPUT_ROOT)
        return os.path.join(os.path.expanduser(root), out)


def parse_override(text: str) -> Tuple[List[str], Any]:
    """'section.key=value'; the value is parsed as JSON, else kept as a
    string."""
    if "=" not in text:
        raise ConfigInvalid(f"override '{text}' is not of the form key=value")
    key, raw = text.split("=", 1)
    path = [k for k in key.strip().split(".") if k]
    if not path:
        raise ConfigInvalid(f"override '{text}' has an empty key")
    try:
        value = json.loads(raw)
    except json.JSONDecodeError:
        value = raw
    return path, value


def apply_overrides(d: Dict, overrides: Sequence[str]) -> Dict:
    d = json.loads(json.dumps(d))
    for text in overrides:
        path, value = parse_override(text)
        node = d
        for k in path[:-1]:
            child = node.get(k)
            if child is None:
                child = node[k] = {}
            if not isinstance(child, dict):
                raise ConfigInvalid(f"override '{text}': '{k}' is not a section")
            node = child
        node[path[-1]] = value
    return d


def load_run_config(path: str, overrides: Sequence[str] = ()) -> RunConfig:
    path = os.path.expanduser(path)
    try:
        with open(path) as f:
            d = json.load(f)
    except OSError as e:
        raise IoFailure(f"cannot read config {path}: {e}") from e
    except json.JSONDecodeError as e:
        raise ConfigInvalid(f"config {path} is not valid JSON: {e}") from e
    if not isinstance(d, dict):
        raise ConfigInvalid(f"config {path} must be a JSON object")
    return RunConfig.from_dict(apply_overrides(d, overrides))
