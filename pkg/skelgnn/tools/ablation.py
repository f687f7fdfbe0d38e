# Licensed under the BSD 3-Clause License.

"""Ablation studies: train model variants over several seeds and compare
test errors.

Studies:
    squeeze: channel-squeezing ratio d of the long-range branches.
    hops: short/long hop ranges (S, L), plus the multi-hop LCN baseline with a
        matched parameter budget.
    fusion: fusion function, hop awareness, and the non-hierarchical LCN.
    graph: dynamic-graph variants and base-graph initializations.
"""

import logging
from dataclasses import dataclass, field, replace
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from skelgnn.data import PoseSample
from skelgnn.errors import ConfigInvalid
from skelgnn.graphs import SkeletonTopology, get_hop_distance
from skelgnn.metrics import hard_pose_comparison
from skelgnn.models import ModelConfig, build_model, match_channels, parameter_count
from skelgnn.tools.config import MetricsConfig, TrainConfig
from skelgnn.tools.eval import evaluate
from skelgnn.tools.learn import fit

logger = logging.getLogger(__name__)

STUDIES = ("squeeze", "hops", "fusion", "graph")

Variant = Tuple[str, Dict]


@dataclass
class AblationRow:
    label: str
    num_parameters: int
    test_mpjpe: List[float] = field(default_factory=list)
    sample_errors: Optional[np.ndarray] = None

    @property
    def mean(self) -> float:
        return float(np.mean(self.test_mpjpe))

    @property
    def std(self) -> float:
        return float(np.std(self.test_mpjpe))


def _matched_lcn(base: ModelConfig, topo: SkeletonTopology, l_hop: int) -> ModelConfig:
    budget = parameter_count(replace(base, l_hop=l_hop), topo)
    lcn = replace(base, graph_mode="static_lcn", l_hop=l_hop)
    return match_channels(lcn, topo, budget)


def study_variants(
    study: str, base: ModelConfig, topo: SkeletonTopology
) -> List[Tuple[str, ModelConfig]]:
    """The configurations compared by a study, each derived from base."""
    diameter = int(get_hop_distance(topo).max())
    hcsf = replace(base, graph_mode="hcsf_static")
    out: List[Tuple[str, ModelConfig]] = []
    if study == "squeeze":
        for d in (1.0, 0.5, 0.25, 0.125, 0.0625):
            out.append((f"d={d:g}", replace(hcsf, squeeze_ratio=d)))
    elif study == "hops":
        for s, l in ((1, 2), (1, 3), (2, 3), (1, 4), (2, 4), (3, 4)):
            if l <= diameter:
                out.append((f"S={s},L={l}", replace(hcsf, s_hop=s, l_hop=l)))
        l_ref = min(3, diameter)
        lcn = _matched_lcn(replace(hcsf, s_hop=1), topo, l_ref)
        out.append((f"LCN,L={l_ref}", lcn))
    elif study == "fusion":
        out.append(("concat", replace(hcsf, fusion="concat")))
        out.append(("sum", replace(hcsf, fusion="sum", squeeze_ratio=1.0)))
        out.append(("mul", replace(hcsf, fusion="mul", squeeze_ratio=1.0)))
        out.append(("no hop awareness", replace(hcsf, hop_aware=False)))
        out.append(("non-hierarchical", _matched_lcn(hcsf, topo, hcsf.l_hop)))
    elif study == "graph":
        dyn = replace(base, graph_mode="hcsf_dynamic", temporal_frames=1)
        out.append(("M (ori)", replace(dyn, graph_variant="static")))
        for init in ("physical", "dense", "random"):
            out.append(
                (f"M ({init})", replace(dyn, graph_variant="m_only", base_init=init))
            )
        out.append(("O", replace(dyn, graph_variant="o_only")))
        out.append(("M + O", replace(dyn, graph_variant="m_plus_o")))
        out.append(("M + alpha O", replace(dyn, graph_variant="combined")))
    else:
        raise ConfigInvalid(f"unknown study '{study}', expected one of {STUDIES}")
    for _, cfg in out:
        cfg.validate(topo)
    return out


def run_ablation(
    study: str,
    base: ModelConfig,
    topo: SkeletonTopology,
    train: Sequence[PoseSample],
    test: Sequence[PoseSample],
    training: TrainConfig,
    metrics: Optional[MetricsConfig] = None,
    seeds: Sequence[int] = (0,),
) -> List[AblationRow]:
    """Trains every variant once per seed (model and shuffling seeds both set
    to it) and records the test MPJPE. The per-sample errors of the first
    seed are kept for hard-pose comparisons."""
    rows = []
    for label, cfg in study_variants(study, base, topo):
        row = AblationRow(label, parameter_count(cfg, topo))
        for seed in seeds:
            model = build_model(replace(cfg, seed=seed), topo)
            fit(model, train, replace(training, seed=seed), eval_dataset=test)
            report, errors = evaluate(model, test, metrics)
            row.test_mpjpe.append(report.mpjpe_mean)
            if row.sample_errors is None:
                row.sample_errors = errors["mpjpe"]
        logger.info("%s: %.3f +- %.3f", label, row.mean, row.std)
        rows.append(row)
    return rows


def format_ablation_table(
    rows: Sequence[AblationRow], percentiles: Sequence[float] = (0.05,)
) -> str:
    """Mean (std) test MPJPE per variant, with each variant's hardest-p mean
    and its overlap with the first variant's hardest poses."""
    comparison = {}
    named = {r.label: r.sample_errors for r in rows if r.sample_errors is not None}
    if rows and rows[0].label in named:
        comparison = hard_pose_comparison(named, rows[0].label, percentiles)
    width = max([len(r.label) for r in rows] + [7])
    header = f"{'variant':<{width}}  {'params':>9}  {'MPJPE':>16}"
    for p in percentiles:
        header += f"  {f'hardest {100 * p:g}%':>14}  {'overlap':>7}"
    lines = [header]
    for r in rows:
        line = (
            f"{r.label:<{width}}  {r.num_parameters:>9}  "
            f"{f'{r.mean:.3f} ({r.std:.3f})':>16}"
        )
        for p in percentiles:
            c = comparison.get(r.label, {}).get(float(p))
            if c is None:
                line += f"  {'-':>14}  {'-':>7}"
            else:
                line += f"  {c['hardest_mean']:>14.3f}  {c['overlap']:>7.2f}"
        lines.append(line)
    return "\n".join(lines) + "\n"
