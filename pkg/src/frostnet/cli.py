"""Command-line entry point.

Subcommands: train, eval, ablate, baseline, synth. Settings are resolved in
order: built-in defaults, then --config JSON, then --preset, then individual
flags. Every run echoes its effective config into the report. Exit code is
0 on success; any rejection prints a one-line diagnostic and exits 1.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import replace
from pathlib import Path

from .baselines import DEFAULT_K
from .harness import (
    HarnessConfig,
    LossMode,
    default_config,
    desk_preset,
    load_config,
    run_ablation,
    run_baseline,
    run_eval,
    run_synth,
    run_train,
)


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", help="JSON config file")
    parser.add_argument("--data", help="dataset CSV (features then a 0/1 label column)")
    parser.add_argument(
        "--synth", action="store_true", help="use the synthetic generator even if the config names a data file"
    )
    parser.add_argument("--preset", choices=["desk"], help="small fast configuration")
    parser.add_argument("--seed", type=int, help="training seed (split, init, shuffling)")
    parser.add_argument("--max-ratio", type=float, help="majority/minority cap for replication")
    parser.add_argument("--c", type=float, help="scale hyperparameter in the fixed factors")
    parser.add_argument("--no-standardize", action="store_true", help="skip per-band z-scoring")
    parser.add_argument("--no-figures", action="store_true", help="skip PNG rendering")


def _resolve_config(args) -> HarnessConfig:
    cfg = load_config(args.config) if args.config else default_config()
    if args.preset == "desk":
        cfg = desk_preset(cfg)
    if args.synth:
        cfg = replace(cfg, data_path=None)
    if args.data:
        cfg = replace(cfg, data_path=args.data)
    if getattr(args, "loss_mode", None):
        cfg = replace(cfg, loss_mode=LossMode(args.loss_mode))
    if args.seed is not None:
        cfg = replace(cfg, train=replace(cfg.train, seed=args.seed))
    if args.max_ratio is not None:
        cfg = replace(cfg, max_ratio=args.max_ratio)
    if args.c is not None:
        cfg = replace(cfg, train=replace(cfg.train, c=args.c))
    if args.no_standardize:
        cfg = replace(cfg, standardize=False)
    if args.no_figures:
        cfg = replace(cfg, write_figures=False)
    return cfg


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="frostnet",
        description="Cost-sensitive 1D-CNN for imbalanced spectral classification",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_train = sub.add_parser("train", help="train a model and write a report")
    _add_common(p_train)
    p_train.add_argument("--loss-mode", choices=[m.value for m in LossMode], dest="loss_mode")
    p_train.add_argument("--out", required=True, help="output directory")

    p_eval = sub.add_parser("eval", help="evaluate a checkpoint on a CSV dataset")
    p_eval.add_argument("--checkpoint", required=True)
    p_eval.add_argument("--data", required=True)
    p_eval.add_argument("--out", help="directory for eval_report.json (default: checkpoint dir)")

    p_ablate = sub.add_parser("ablate", help="run all four loss modes over several seeds")
    _add_common(p_ablate)
    p_ablate.add_argument("--seeds", default="0,1,2", help="comma-separated seed list")
    p_ablate.add_argument("--jobs", type=int, default=1, help="parallel worker processes")
    p_ablate.add_argument("--out", required=True)

    p_base = sub.add_parser("baseline", help="KNN baseline on the same split")
    _add_common(p_base)
    p_base.add_argument("--k", type=int, default=DEFAULT_K, help="number of neighbors (odd)")
    p_base.add_argument("--out", required=True)

    p_synth = sub.add_parser("synth", help="write a synthetic dataset as CSV")
    p_synth.add_argument("--out", required=True, help="output CSV path")
    p_synth.add_argument("--config", help="JSON config file (synth block)")
    p_synth.add_argument("--preset", choices=["desk"])
    p_synth.add_argument("--n0", type=int, help="healthy sample count")
    p_synth.add_argument("--n1", type=int, help="frosted sample count")
    p_synth.add_argument("--dim", type=int, help="number of bands")
    p_synth.add_argument("--noise", type=float, help="noise scale")
    p_synth.add_argument("--seed", type=int, help="generator seed")
    return parser


def _cmd_train(args) -> int:
    cfg = _resolve_config(args)
    result = run_train(cfg, args.out)
    metrics = result.report["metrics"]
    print(
        f"{result.report['run_id']}: accuracy {100 * metrics['accuracy']:.1f}%  "
        f"f1 {100 * metrics['f1']:.1f}%  (report in {args.out})"
    )
    return 0


def _cmd_eval(args) -> int:
    out = args.out if args.out else Path(args.checkpoint).parent
    report = run_eval(args.checkpoint, args.data, out)
    print(json.dumps(report["metrics"], indent=2))
    return 0


def _cmd_ablate(args) -> int:
    cfg = _resolve_config(args)
    seeds = [int(s) for s in args.seeds.split(",") if s.strip()]
    table = run_ablation(cfg, seeds, args.out, jobs=args.jobs)
    print((Path(args.out) / "ablation.txt").read_text(), end="")
    return 0


def _cmd_baseline(args) -> int:
    cfg = _resolve_config(args)
    report = run_baseline(cfg, args.k, args.out)
    metrics = report["metrics"]
    print(
        f"{report['run_id']}: accuracy {100 * metrics['accuracy']:.1f}%  "
        f"f1 {100 * metrics['f1']:.1f}%  (report in {args.out})"
    )
    return 0


def _cmd_synth(args) -> int:
    cfg = load_config(args.config) if args.config else default_config()
    if args.preset == "desk":
        cfg = desk_preset(cfg)
    spec = cfg.synth
    overrides = {}
    if args.n0 is not None or args.n1 is not None:
        overrides["n_per_class"] = (
            args.n0 if args.n0 is not None else spec.n_per_class[0],
            args.n1 if args.n1 is not None else spec.n_per_class[1],
        )
    if args.dim is not None:
        overrides["dim"] = args.dim
    if args.noise is not None:
        overrides["noise_scale"] = args.noise
    if args.seed is not None:
        overrides["seed"] = args.seed
    dataset = run_synth(replace(spec, **overrides), args.out)
    print(f"wrote {dataset.n} samples x {dataset.dim} bands to {args.out}")
    return 0


_COMMANDS = {
    "train": _cmd_train,
    "eval": _cmd_eval,
    "ablate": _cmd_ablate,
    "baseline": _cmd_baseline,
    "synth": _cmd_synth,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
