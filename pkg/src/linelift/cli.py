"""Command-line entry points: reconstruct, synth, eval, ablate.

Exit codes: 0 on success (including budget-limited incumbents), 2 on
schema violations (with field diagnostics on stderr), 3 when vanishing
point estimation fails and the instance has no direction labels.
"""

from __future__ import annotations

import argparse
import os
import sys

from . import evaluate, milp, sceneio, synth
from .config import load_default_config
from .errors import SchemaError, VanishingPointEstimationError
from .pipeline import reconstruct_instance

EXIT_OK = 0
EXIT_SCHEMA = 2
EXIT_VP_FAILURE = 3


def _add_solver_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--no-cycles", action="store_true",
                        help="drop cycle constraints")
    parser.add_argument("--no-planarity", action="store_true",
                        help="drop planarity constraints")
    parser.add_argument("--no-boundary", action="store_true",
                        help="drop boundary constraints")
    parser.add_argument("--strict-eq4", action="store_true",
                        help="emit intersection rows for all four endpoint pairs")
    parser.add_argument("--budget", type=float, metavar="S",
                        help="solver time budget in seconds (default 300)")
    parser.add_argument("--mu1", type=float, help="planarity objective weight")
    parser.add_argument("--mu2", type=float, help="boundary objective weight")
    parser.add_argument("--slack-penalty", type=float,
                        help="objective penalty per unit of slack")
    parser.add_argument("--extension-px", type=float,
                        help="segment extension in pixels (default 30)")
    parser.add_argument("--seed", type=int, help="seed for vanishing point RANSAC")
    parser.add_argument("--workers", type=int,
                        help="parallel LP solves in branch and bound")
    parser.add_argument("--dump-lp", metavar="PATH",
                        help="write the assembled model in LP text format")


def _config_from_args(args: argparse.Namespace):
    config = load_default_config()
    overrides = {}
    if args.no_cycles:
        overrides["use_cycles"] = False
    if args.no_planarity:
        overrides["use_planarity"] = False
    if args.no_boundary:
        overrides["use_boundary"] = False
    if args.strict_eq4:
        overrides["strict_eq4"] = True
    for attr, key in (("budget", "time_budget_s"), ("mu1", "mu1"), ("mu2", "mu2"),
                      ("slack_penalty", "slack_penalty"),
                      ("extension_px", "extension_px"), ("seed", "seed"),
                      ("workers", "workers")):
        value = getattr(args, attr)
        if value is not None:
            overrides[key] = value
    return config.replace(**overrides)


def cmd_reconstruct(args: argparse.Namespace) -> int:
    config = _config_from_args(args)
    instance = sceneio.read_instance(args.instance)
    result = reconstruct_instance(instance, config)
    if args.dump_lp:
        milp.write_lp(result.model, args.dump_lp)
    out = args.output or os.path.splitext(args.instance)[0] + ".recon"
    sceneio.write_reconstruction(result.reconstruction, out + ".json")
    sceneio.write_obj(result.reconstruction, out + ".obj")
    print(f"status: {result.solution.status.value}  "
          f"objective: {result.solution.objective:.6f}  "
          f"lines: {len(result.component.vertices)}  "
          f"edges: {len(result.component.edges)}")
    print(f"wrote {out}.json and {out}.obj")
    return EXIT_OK


def cmd_synth(args: argparse.Namespace) -> int:
    os.makedirs(args.out_dir, exist_ok=True)
    for idx in range(args.count):
        seed = args.seed + idx
        if args.preset in synth.PRESET_NAMES:
            spec = synth.preset(args.preset, seed)
        else:
            spec = synth.SceneSpec.from_dict(
                sceneio._load(args.preset, {"type": "object"}, "scene spec"))
            spec = synth.SceneSpec.from_dict({**spec.to_dict(), "rng_seed": seed})
        instance, gt = synth.generate_scene(spec)
        stem = os.path.join(args.out_dir, f"instance_{seed:04d}")
        sceneio.write_instance(instance, stem + ".json")
        synth.write_ground_truth(gt, stem + ".gt.json")
        print(f"wrote {stem}.json (+.gt.json): {len(instance.lines)} lines")
    return EXIT_OK


def _load_instances(directory: str):
    pairs = []
    for name in sorted(os.listdir(directory)):
        if not name.endswith(".json") or name.endswith(".gt.json"):
            continue
        if name.endswith(".recon.json"):
            continue
        instance = sceneio.read_instance(os.path.join(directory, name))
        if not instance.gt_edges:
            raise SchemaError(f"instance {name} carries no ground-truth edge labels")
        pairs.append((instance, instance.gt_edges))
    if not pairs:
        raise SchemaError(f"no labeled instance files found in {directory}")
    return pairs


def cmd_eval(args: argparse.Namespace) -> int:
    config = _config_from_args(args)
    instances = _load_instances(args.instance_dir)
    report = evaluate.evaluate_instances(instances, config)
    row = evaluate.AblationRow(
        config=evaluate.AblationConfig(cycles=config.use_cycles,
                                       planarity=config.use_planarity,
                                       boundary=config.use_boundary),
        report=report)
    print(evaluate.ablation_table([row]))
    if args.csv:
        with open(args.csv, "w", encoding="utf-8") as fh:
            fh.write(evaluate.ablation_csv([row]))
        print(f"wrote {args.csv}")
    return EXIT_OK


def cmd_ablate(args: argparse.Namespace) -> int:
    config = _config_from_args(args)
    instances = _load_instances(args.instance_dir)
    rows = evaluate.run_ablation(instances, config)
    print(evaluate.ablation_table(rows))
    if args.csv:
        with open(args.csv, "w", encoding="utf-8") as fh:
            fh.write(evaluate.ablation_csv(rows))
        print(f"wrote {args.csv}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="linelift",
        description="Single-view 3D Manhattan line reconstruction via MILP")
    sub = parser.add_subparsers(dest="command", required=True)

    p_rec = sub.add_parser("reconstruct", help="reconstruct one instance file")
    p_rec.add_argument("instance", help="instance JSON path")
    p_rec.add_argument("-o", "--output", help="output path prefix")
    _add_solver_flags(p_rec)
    p_rec.set_defaults(func=cmd_reconstruct)

    p_syn = sub.add_parser("synth", help="generate synthetic instances")
    p_syn.add_argument("preset",
                       help=f"preset name {synth.PRESET_NAMES} or a scene-spec JSON path")
    p_syn.add_argument("--seed", type=int, default=0)
    p_syn.add_argument("--count", type=int, default=1)
    p_syn.add_argument("--out-dir", default=".")
    p_syn.set_defaults(func=cmd_synth)

    p_eval = sub.add_parser("eval", help="score reconstructions against labels")
    p_eval.add_argument("instance_dir")
    p_eval.add_argument("--csv", help="also write the report as CSV")
    _add_solver_flags(p_eval)
    p_eval.set_defaults(func=cmd_eval)

    p_abl = sub.add_parser("ablate", help="run all 8 constraint configurations")
    p_abl.add_argument("instance_dir")
    p_abl.add_argument("--csv", help="also write the table as CSV")
    _add_solver_flags(p_abl)
    p_abl.set_defaults(func=cmd_ablate)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except SchemaError as exc:
        print(f"schema error: {exc}", file=sys.stderr)
        return EXIT_SCHEMA
    except VanishingPointEstimationError as exc:
        print(f"vanishing point estimation failed: {exc}", file=sys.stderr)
        return EXIT_VP_FAILURE


if __name__ == "__main__":
    sys.exit(main())
