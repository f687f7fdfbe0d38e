# Licensed under the BSD 3-Clause License.

"""Command-line entry point.

    skelgnn train <config.json> [section.key=value ...]
    skelgnn eval <checkpoint> <data> [--report FILE] [--plot DIR]
    skelgnn gradcheck [--seed N]
    skelgnn graph [--topology NAME_OR_FILE] [--max-hop K]
    skelgnn synth --out FILE [--spec FILE] [--n-samples N] ...
    skelgnn ablate <config.json> --study {squeeze,hops,fusion,graph} [--seeds N]

Exit codes: 0 on success, 1 on usage, configuration or input errors (found
before anything is written), 2 on failures while running.
"""

import argparse
import json
import os
import sys
from typing import List, Optional, Sequence

import numpy as np

from skelgnn.data import (
    SyntheticRigSpec,
    load_dataset,
    mean_bone_length,
    save_dataset,
    synthesize_dataset,
)
from skelgnn.errors import ConfigInvalid, EmptyDataset, IoFailure, SkelGnnError
from skelgnn.graphs import compute_hop_partition, load_topology
from skelgnn.models import build_model, load_checkpoint
from skelgnn.plotting import error_histogram_plot, hardest_poses_plot
from skelgnn.tools.ablation import STUDIES, format_ablation_table, run_ablation
from skelgnn.tools.config import MetricsConfig, load_run_config
from skelgnn.tools.eval import evaluate
from skelgnn.tools.gradient_suite import GRADCHECK_TOLERANCE, gradient_suite
from skelgnn.tools.learn import fit

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_RUNTIME = 2

RUN_CONFIG_FILE = "run_config.json"
REPORT_FILE = "report.json"
HISTOGRAM_FILE = "histogram.txt"


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ConfigInvalid(message)


def _fail(e: BaseException, code: int) -> int:
    print(f"skelgnn: error: {e}", file=sys.stderr)
    return code


def _load_run(config_path: str, overrides: Sequence[str]):
    cfg, topo = load_run_config(config_path, overrides).validate()
    train = load_dataset(cfg.data.train, topo.num_nodes)
    if not train:
        raise EmptyDataset(f"no samples in {cfg.data.train}")
    test = load_dataset(cfg.data.test, topo.num_nodes) if cfg.data.test else None
    return cfg, topo, train, test


def _write_json(path: str, doc):
    with open(path, "w") as f:
        json.dump(doc, f, indent=2)
        f.write("\n")


def cmd_train(config_path: str, overrides: Sequence[str] = ()) -> int:
    try:
        cfg, topo, train, test = _load_run(config_path, overrides)
        model = build_model(cfg.model, topo)
    except SkelGnnError as e:
        return _fail(e, EXIT_USAGE)
    run_dir = cfg.run_dir()
    try:
        os.makedirs(run_dir, exist_ok=True)
        _write_json(os.path.join(run_dir, RUN_CONFIG_FILE), cfg.to_dict())
        fit(
            model,
            train,
            cfg.training,
            eval_dataset=test,
            save_dir=run_dir,
            normalize=cfg.data.normalize,
            run_info={
                "topology": topo.to_dict(),
                "model": cfg.model.to_dict(),
                "data": cfg.data.to_dict(),
                "metrics": cfg.metrics.to_dict(),
            },
        )
        report, _ = evaluate(
            model, test or train, cfg.metrics, None, cfg.data.normalize
        )
        report.save(
            os.path.join(run_dir, REPORT_FILE), os.path.join(run_dir, HISTOGRAM_FILE)
        )
    except (SkelGnnError, OSError) as e:
        return _fail(e, EXIT_RUNTIME)
    print(report.summary())
    print(f"run directory: {run_dir}")
    return EXIT_OK


def cmd_eval(
    checkpoint: str,
    data: str,
    report_out: Optional[str] = None,
    config_path: Optional[str] = None,
    flip: Optional[bool] = None,
    workers: Optional[int] = None,
    plot_dir: Optional[str] = None,
) -> int:
    try:
        metrics = MetricsConfig()
        normalize = True
        if config_path is not None:
            run = load_run_config(config_path)
            metrics, normalize = run.metrics, run.data.normalize
        if workers is not None:
            metrics.workers = workers
        metrics.validate()
        if not os.path.isfile(os.path.expanduser(data)):
            raise IoFailure(f"data file not found: {data}")
        model = load_checkpoint(os.path.expanduser(checkpoint))
        samples = load_dataset(data, model.topo.num_nodes)
        if not samples:
            raise EmptyDataset(f"no samples in {data}")
    except SkelGnnError as e:
        return _fail(e, EXIT_USAGE)
    try:
        report, _ = evaluate(model, samples, metrics, flip, normalize)
        if report_out is not None:
            hist = os.path.splitext(report_out)[0] + "_histogram.txt"
            report.save(report_out, hist)
        else:
            sys.stdout.write(report.to_json())
        if plot_dir is not None:
            os.makedirs(plot_dir, exist_ok=True)
            error_histogram_plot(
                os.path.join(plot_dir, "error_histogram.png"),
                report.bin_edges,
                report.counts,
            )
            hardest_poses_plot(
                os.path.join(plot_dir, "hardest_poses.png"),
                {os.path.basename(checkpoint): report.hardest_p_mean},
            )
    except (SkelGnnError, OSError) as e:
        return _fail(e, EXIT_RUNTIME)
    print(report.summary(), file=sys.stderr if report_out is None else sys.stdout)
    return EXIT_OK


def cmd_gradcheck(seed: int = 0) -> int:
    try:
        errors = gradient_suite(seed)
    except SkelGnnError as e:
        return _fail(e, EXIT_RUNTIME)
    width = max(len(name) for name in errors)
    for name, err in errors.items():
        status = "ok" if err < GRADCHECK_TOLERANCE else "FAIL"
        print(f"{name:<{width}}  {err:.3e}  {status}")
    if all(err < GRADCHECK_TOLERANCE for err in errors.values()):
        return EXIT_OK
    return EXIT_RUNTIME


def graph_listing(topology: str, max_hop: Optional[int] = None) -> str:
    topo = load_topology(topology)
    hops = compute_hop_partition(topo, 1)
    diameter = hops.diameter()
    max_hop = max_hop or topo.furthest_hop or diameter
    hops = compute_hop_partition(topo, max_hop)
    names = topo.joint_names or tuple(str(i) for i in range(topo.num_nodes))
    lines = [f"topology {topo.name}: {topo.num_nodes} joints, diameter {diameter}"]
    lines.append("hop distances:")
    for row in hops.hop_dist.astype(int):
        lines.append(" ".join(f"{d:2d}" for d in row))
    lines.append("hop rings:")
    for i in range(topo.num_nodes):
        parts = []
        for k in range(1, max_hop + 1):
            members = np.flatnonzero(hops.ring(k)[i]).tolist()
            if members:
                parts.append(f"hop{k}: {members}")
        lines.append(f"{i:2d} {names[i]}: " + "  ".join(parts))
    return "\n".join(lines) + "\n"


def cmd_graph(topology: str = "h36m17", max_hop: Optional[int] = None) -> int:
    try:
        text = graph_listing(topology, max_hop)
    except SkelGnnError as e:
        return _fail(e, EXIT_USAGE)
    sys.stdout.write(text)
    return EXIT_OK


def _rig_spec(args) -> SyntheticRigSpec:
    fields = {}
    if args.spec is not None:
        try:
            with open(os.path.expanduser(args.spec)) as f:
                fields = json.load(f)
        except OSError as e:
            raise IoFailure(f"cannot read rig spec {args.spec}: {e}") from e
        except json.JSONDecodeError as e:
            raise ConfigInvalid(f"rig spec {args.spec} is not valid JSON: {e}") from e
        if not isinstance(fields, dict):
            raise ConfigInvalid(f"rig spec {args.spec} must be a JSON object")
    topology = fields.pop("topology", args.topology)
    for key, value in (
        ("noise_std_2d", args.noise),
        ("seed", args.seed),
        ("outlier_prob", args.outlier_prob),
    ):
        if value is not None:
            fields[key] = value
    known = set(SyntheticRigSpec.__dataclass_fields__) - {"topology"}
    unknown = sorted(set(fields) - known)
    if unknown:
        raise ConfigInvalid(f"unknown rig spec keys: {', '.join(unknown)}")
    spec = SyntheticRigSpec(topology=load_topology(topology), **fields)
    spec.resolved()
    return spec


def cmd_synth(args) -> int:
    try:
        spec = _rig_spec(args)
        if args.n_samples < 0 or args.frames < 1:
            raise ConfigInvalid("--n-samples must be >= 0 and --frames >= 1")
    except SkelGnnError as e:
        return _fail(e, EXIT_USAGE)
    try:
        samples = synthesize_dataset(spec, args.n_samples, args.frames)
        save_dataset(samples, args.out)
    except (SkelGnnError, OSError) as e:
        return _fail(e, EXIT_RUNTIME)
    sequences = len({s.seq_id for s in samples})
    print(f"wrote {len(samples)} samples in {sequences} sequences to {args.out}")
    if samples:
        j2d = np.stack([s.joints_2d for s in samples])
        j3d = np.stack([s.joints_3d for s in samples])
        print(f"mean bone length: {mean_bone_length(spec):.2f}")
        print(f"2D range: [{j2d.min():.1f}, {j2d.max():.1f}] px")
        print(f"3D extent per axis: {np.ptp(j3d, axis=(0, 1)).round(1).tolist()}")
    return EXIT_OK


def cmd_ablate(
    config_path: str, study: str, seeds: int = 1, overrides: Sequence[str] = ()
) -> int:
    try:
        if study not in STUDIES:
            raise ConfigInvalid(f"unknown study '{study}', expected one of {STUDIES}")
        if seeds < 1:
            raise ConfigInvalid("--seeds must be >= 1")
        cfg, topo, train, test = _load_run(config_path, overrides)
    except SkelGnnError as e:
        return _fail(e, EXIT_USAGE)
    try:
        rows = run_ablation(
            study,
            cfg.model,
            topo,
            train,
            test or train,
            cfg.training,
            cfg.metrics,
            seeds=range(seeds),
        )
        table = format_ablation_table(rows, cfg.metrics.percentiles[-1:])
        run_dir = cfg.run_dir()
        os.makedirs(run_dir, exist_ok=True)
        with open(os.path.join(run_dir, f"ablation_{study}.txt"), "w") as f:
            f.write(table)
    except (SkelGnnError, OSError) as e:
        return _fail(e, EXIT_RUNTIME)
    sys.stdout.write(table)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="skelgnn", description="2D-to-3D pose lifting with GNNs")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)
    sub.required = True

    p = sub.add_parser("train", help="train a model from a run config")
    p.add_argument("config")
    p.add_argument("overrides", nargs="*", help="section.key=value")

    p = sub.add_parser("eval", help="evaluate a checkpoint on a dataset")
    p.add_argument("checkpoint")
    p.add_argument("data")
    p.add_argument("--report", default=None)
    p.add_argument("--config", default=None, help="run config for metric settings")
    p.add_argument("--no-flip", dest="flip", action="store_false", default=None)
    p.add_argument("--workers", type=int, default=None)
    p.add_argument("--plot", default=None, help="directory for figures")

    p = sub.add_parser("gradcheck", help="finite-difference gradient suite")
    p.add_argument("--seed", type=int, default=0)

    p = sub.add_parser("graph", help="print hop distances and rings")
    p.add_argument("--topology", default="h36m17")
    p.add_argument("--max-hop", type=int, default=None)

    p = sub.add_parser("synth", help="write a synthetic dataset")
    p.add_argument("--out", required=True)
    p.add_argument("--spec", default=None, help="JSON rig spec")
    p.add_argument("--topology", default="h36m17")
    p.add_argument("--n-samples", type=int, default=1000)
    p.add_argument("--frames", type=int, default=50)
    p.add_argument("--noise", type=float, default=None)
    p.add_argument("--outlier-prob", type=float, default=None)
    p.add_argument("--seed", type=int, default=None)

    p = sub.add_parser("ablate", help="train and compare model variants")
    p.add_argument("config")
    p.add_argument("overrides", nargs="*", help="section.key=value")
    p.add_argument("--study", required=True)
    p.add_argument("--seeds", type=int, default=1)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except ConfigInvalid as e:
        return _fail(e, EXIT_USAGE)
    if args.command == "train":
        return cmd_train(args.config, args.overrides)
    if args.command == "eval":
        return cmd_eval(
            args.checkpoint,
            args.data,
            args.report,
            args.config,
            args.flip,
            args.workers,
            args.plot,
        )
    if args.command == "gradcheck":
        return cmd_gradcheck(args.seed)
    if args.command == "graph":
        return cmd_graph(args.topology, args.max_hop)
    if args.command == "synth":
        return cmd_synth(args)
    return cmd_ablate(args.config, args.study, args.seeds, args.overrides)


if __name__ == "__main__":
    sys.exit(main())
