"""Experiment harness: the training loop, evaluation, ablation grid, reports.

A training run: stratified 70/30 split, per-band standardization fitted on
the training part, minority replication, then Adam over the configured
epochs. Cost weights are rebuilt once per epoch: the positive-class miss
rate is measured on the full (replicated) training set in eval mode at each
epoch end and feeds the next epoch's weights.

Every run writes report.json, an aligned report.txt, a per-epoch epochs.csv,
a checkpoint, the raw test split as CSV, and (unless disabled) PNG figures.
Reports are deterministic given (config, seed); the wall-clock field is the
only exception.
"""

from __future__ import annotations

import json
import statistics
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, fields, replace
from enum import Enum
from pathlib import Path

import numpy as np

from .baselines import DEFAULT_K, knn_fit, knn_predict
from .checkpoint import load_checkpoint, save_checkpoint
from .data import (
    DEFAULT_REPLICATION_RATIO,
    Dataset,
    Standardizer,
    SynthSpec,
    batch_iter,
    fit_standardizer,
    load_csv,
    replicate_minority,
    save_csv,
    stratified_split,
    synth_generate,
)
from .loss import (
    INITIAL_MISS_RATE,
    cost_sensitive_loss,
    cost_weights,
    inverse_frequency_alpha,
    positive_miss_rate,
    softmax_loss_gradient,
)
from .metrics import ConfusionMatrix, accuracy, confusion, precision_recall_f1
from .model import (
    ArchitectureConfig,
    ModelParams,
    backward,
    build_model,
    forward,
    predict_labels,
)
from .optim import AdamState, TrainConfig, adam_step, lr_at_epoch

DEFAULT_TRAIN_FRACTION = 0.7


class LossMode(Enum):
    """Which pieces of the cost weighting are active."""

    PLAIN_CE = "ce"
    ALPHA_ONLY = "alpha"
    ADJUST_ONLY = "r"
    FULL_CSBL = "csbl"

    @property
    def uses_alpha(self) -> bool:
        return self in (LossMode.ALPHA_ONLY, LossMode.FULL_CSBL)

    @property
    def uses_adjustment(self) -> bool:
        return self in (LossMode.ADJUST_ONLY, LossMode.FULL_CSBL)


ABLATION_ORDER = (LossMode.PLAIN_CE, LossMode.ALPHA_ONLY, LossMode.ADJUST_ONLY, LossMode.FULL_CSBL)
MODE_LABELS = {
    LossMode.PLAIN_CE: "baseline (plain CE)",
    LossMode.ALPHA_ONLY: "+ fixed factor",
    LossMode.ADJUST_ONLY: "+ adjustment factor",
    LossMode.FULL_CSBL: "CSBL (both factors)",
}


@dataclass(frozen=True)
class HarnessConfig:
    """Everything one run needs; serializes to/from the JSON config file."""

    arch: ArchitectureConfig
    train: TrainConfig
    synth: SynthSpec
    loss_mode: LossMode = LossMode.FULL_CSBL
    data_path: str | None = None
    train_fraction: float = DEFAULT_TRAIN_FRACTION
    max_ratio: float = DEFAULT_REPLICATION_RATIO
    standardize: bool = True
    write_figures: bool = True
    # test hooks: pin the weight ingredients regardless of loss_mode
    alpha_override: tuple[float, float] | None = None
    miss_rate_override: float | None = None


def default_config() -> HarnessConfig:
    return HarnessConfig(arch=ArchitectureConfig(), train=TrainConfig(), synth=SynthSpec())


def desk_preset(cfg: HarnessConfig) -> HarnessConfig:
    """Shrink to a configuration that trains in seconds.

    256-band input with a slimmer filter stack and window-3 pooling (the
    full-scale pooling windows do not fit a 256-band input), 150 epochs with
    decay every 30.
    """
    return replace(
        cfg,
        arch=ArchitectureConfig(
            input_length=256,
            conv_filters=(8, 16, 8),
            conv_kernel=7,
            pool_windows=(3, 3, 3),
            num_classes=cfg.arch.num_classes,
        ),
        train=replace(cfg.train, epochs=150, lr_decay_every=30),
        synth=replace(cfg.synth, dim=256),
    )


def _merged(instance, overrides: dict):
    known = {f.name for f in fields(instance)}
    unknown = set(overrides) - known
    if unknown:
        raise ValueError(f"unknown {type(instance).__name__} keys: {sorted(unknown)}")
    return replace(instance, **overrides)


def config_from_dict(raw: dict) -> HarnessConfig:
    """Build a config from a (possibly partial) JSON-style dict."""
    base = default_config()
    known = {
        "arch",
        "train",
        "synth",
        "loss_mode",
        "data",
        "train_fraction",
        "max_ratio",
        "standardize",
        "write_figures",
        "alpha_override",
        "miss_rate_override",
    }
    unknown = set(raw) - known
    if unknown:
        raise ValueError(f"unknown config keys: {sorted(unknown)}")
    alpha_override = raw.get("alpha_override")
    return HarnessConfig(
        arch=_merged(base.arch, raw.get("arch", {})),
        train=_merged(base.train, raw.get("train", {})),
        synth=_merged(base.synth, raw.get("synth", {})),
        loss_mode=LossMode(raw.get("loss_mode", base.loss_mode.value)),
        data_path=raw.get("data", base.data_path),
        train_fraction=raw.get("train_fraction", base.train_fraction),
        max_ratio=raw.get("max_ratio", base.max_ratio),
        standardize=raw.get("standardize", base.standardize),
        write_figures=raw.get("write_figures", base.write_figures),
        alpha_override=None if alpha_override is None else tuple(alpha_override),
        miss_rate_override=raw.get("miss_rate_override"),
    )


def config_to_dict(cfg: HarnessConfig) -> dict:
    def plain(obj):
        return {
            f.name: list(v) if isinstance(v := getattr(obj, f.name), tuple) else v
            for f in fields(obj)
        }

    return {
        "arch": plain(cfg.arch),
        "train": plain(cfg.train),
        "synth": plain(cfg.synth),
        "loss_mode": cfg.loss_mode.value,
        "data": cfg.data_path,
        "train_fraction": cfg.train_fraction,
        "max_ratio": cfg.max_ratio,
        "standardize": cfg.standardize,
        "write_figures": cfg.write_figures,
        "alpha_override": None if cfg.alpha_override is None else list(cfg.alpha_override),
        "miss_rate_override": cfg.miss_rate_override,
    }


def load_config(path) -> HarnessConfig:
    with Path(path).open() as fh:
        return config_from_dict(json.load(fh))


# ---------------------------------------------------------------------------
# shared pieces

def _resolve_dataset(cfg: HarnessConfig) -> tuple[Dataset, str]:
    if cfg.data_path is not None:
        return load_csv(cfg.data_path), str(cfg.data_path)
    return synth_generate(cfg.synth), "synthetic"


def _metrics_block(cm: ConfusionMatrix) -> dict:
    precision, recall, f1 = precision_recall_f1(cm)
    return {
        "accuracy": accuracy(cm),
        "precision": precision,
        "recall": recall,
        "f1": f1,
    }


def _write_json(payload: dict, path: Path) -> None:
    path.write_text(json.dumps(payload, indent=2) + "\n")


def _confusion_text(cm_list: list[int]) -> list[str]:
    n00, n01, n10, n11 = cm_list
    return [
        "                 pred 0   pred 1",
        f"  true 0 {n00:>12} {n01:>8}",
        f"  true 1 {n10:>12} {n11:>8}",
    ]


def _metrics_text(metrics: dict) -> list[str]:
    return [
        f"  accuracy  {100 * metrics['accuracy']:6.1f} %",
        f"  precision {100 * metrics['precision']:6.1f} %",
        f"  recall    {100 * metrics['recall']:6.1f} %",
        f"  f1        {100 * metrics['f1']:6.1f} %",
    ]


# ---------------------------------------------------------------------------
# training

@dataclass
class TrainResult:
    report: dict
    params: ModelParams
    standardizer: Standardizer | None
    test_raw: Dataset


def run_train(cfg: HarnessConfig, out_dir=None) -> TrainResult:
    """Train one model and assemble its report; writes artifacts if out_dir."""
    started = time.perf_counter()
    dataset, source = _resolve_dataset(cfg)
    if dataset.dim != cfg.arch.input_length:
        raise ValueError(
            f"dataset has {dataset.dim} bands, architecture expects {cfg.arch.input_length}"
        )

    train_raw, test_raw = stratified_split(dataset, cfg.train_fraction, cfg.train.seed)
    standardizer = fit_standardizer(train_raw.features) if cfg.standardize else None
    train_set = Dataset(
        standardizer.apply(train_raw.features) if standardizer else train_raw.features,
        train_raw.labels,
    )
    test_features = standardizer.apply(test_raw.features) if standardizer else test_raw.features
    split_counts = train_set.class_counts()
    train_set = replicate_minority(train_set, cfg.max_ratio)
    replicated_counts = train_set.class_counts()

    mode = cfg.loss_mode
    # fixed factors come from the split's class counts, before replication
    alpha = (
        inverse_frequency_alpha(split_counts, cfg.train.c)
        if mode.uses_alpha
        else np.ones(2)
    )
    if cfg.alpha_override is not None:
        alpha = np.asarray(cfg.alpha_override, dtype=np.float64)
    miss = INITIAL_MISS_RATE if mode.uses_adjustment else 0.0
    adaptive = mode.uses_adjustment and cfg.miss_rate_override is None
    if cfg.miss_rate_override is not None:
        miss = cfg.miss_rate_override
    weights = cost_weights(alpha, miss, cfg.train.c)

    params = build_model(cfg.arch, cfg.train.seed)
    trainable = params.trainable()
    state = AdamState.for_params(trainable)

    epoch_log: list[dict] = []
    for epoch in range(cfg.train.epochs):
        lr = lr_at_epoch(cfg.train, epoch)
        loss_total = 0.0
        for feats, labels in batch_iter(train_set, cfg.train.batch_size, cfg.train.seed, epoch):
            probs, fwd_cache = forward(params, feats, "train")
            batch_loss, _ = cost_sensitive_loss(probs[:, 1], labels, weights)
            d_logits = softmax_loss_gradient(probs, labels, weights)
            grads = backward(params, fwd_cache, d_logits)
            adam_step(trainable, grads, state, lr, cfg.train)
            loss_total += batch_loss * feats.shape[0]

        train_cm = confusion(predict_labels(params, train_set.features), train_set.labels)
        epoch_log.append(
            {
                "epoch": epoch,
                "lr": lr,
                "mean_loss": loss_total / train_set.n,
                "miss_rate": weights.miss_rate[1],
                "w0": weights.w[0],
                "w1": weights.w[1],
                "train_confusion": train_cm.as_list(),
            }
        )
        if adaptive:
            weights = weights.with_miss_rate(positive_miss_rate(train_cm, weights.miss_rate[1]))

    test_cm = confusion(predict_labels(params, test_features), test_raw.labels)
    report = {
        "run_id": f"train-{mode.value}-seed{cfg.train.seed}",
        "kind": "train",
        "method": "cnn",
        "loss_mode": mode.value,
        "seed": cfg.train.seed,
        "config": config_to_dict(cfg),
        "data": {
            "source": source,
            "train_class_counts": list(split_counts),
            "replicated_class_counts": list(replicated_counts),
            "test_class_counts": list(test_raw.class_counts()),
        },
        "epochs": epoch_log,
        "test_confusion": test_cm.as_list(),
        "metrics": _metrics_block(test_cm),
        "wall_clock_seconds": time.perf_counter() - started,
    }
    result = TrainResult(report, params, standardizer, test_raw)
    if out_dir is not None:
        _write_train_artifacts(result, cfg, Path(out_dir))
    return result


def _write_train_artifacts(result: TrainResult, cfg: HarnessConfig, out: Path) -> None:
    out.mkdir(parents=True, exist_ok=True)
    report = result.report
    _write_json(report, out / "report.json")
    save_checkpoint(result.params, out / "checkpoint.bin", result.standardizer)
    save_csv(result.test_raw, out / "test_split.csv")

    with (out / "epochs.csv").open("w") as fh:
        fh.write("epoch,lr,mean_loss,miss_rate,w0,w1,n00,n01,n10,n11\n")
        for entry in report["epochs"]:
            cm = ",".join(str(v) for v in entry["train_confusion"])
            fh.write(
                f"{entry['epoch']},{entry['lr']!r},{entry['mean_loss']!r},"
                f"{entry['miss_rate']!r},{entry['w0']!r},{entry['w1']!r},{cm}\n"
            )

    lines = [
        f"run {report['run_id']}",
        f"  method       cnn",
        f"  loss mode    {report['loss_mode']}",
        f"  seed         {report['seed']}",
        f"  data         {report['data']['source']}",
        f"  train counts {report['data']['train_class_counts']}"
        f" -> {report['data']['replicated_class_counts']} after replication",
        f"  test counts  {report['data']['test_class_counts']}",
        "",
        "final test confusion",
        *_confusion_text(report["test_confusion"]),
        "",
        "test metrics",
        *_metrics_text(report["metrics"]),
        "",
        f"wall clock   {report['wall_clock_seconds']:.1f} s",
    ]
    (out / "report.txt").write_text("\n".join(lines) + "\n")

    if cfg.write_figures:
        from . import figures

        figures.render_training_figures(report, out)


# ---------------------------------------------------------------------------
# evaluation of a saved checkpoint

def run_eval(checkpoint_path, data_path, out_dir=None) -> dict:
    started = time.perf_counter()
    params, standardizer = load_checkpoint(checkpoint_path)
    dataset = load_csv(data_path)
    if dataset.n == 0:
        raise ValueError(f"{data_path} contains no samples")
    if dataset.dim != params.config.input_length:
        raise ValueError(
            f"dataset has {dataset.dim} bands, checkpoint expects {params.config.input_length}"
        )
    feats = standardizer.apply(dataset.features) if standardizer else dataset.features
    cm = confusion(predict_labels(params, feats), dataset.labels)
    report = {
        "run_id": f"eval-{Path(checkpoint_path).stem}",
        "kind": "eval",
        "method": "cnn",
        "checkpoint": str(checkpoint_path),
        "data": str(data_path),
        "n_samples": dataset.n,
        "test_confusion": cm.as_list(),
        "metrics": _metrics_block(cm),
        "wall_clock_seconds": time.perf_counter() - started,
    }
    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        _write_json(report, out / "eval_report.json")
    return report


# ---------------------------------------------------------------------------
# KNN baseline

def run_baseline(cfg: HarnessConfig, k: int = DEFAULT_K, out_dir=None) -> dict:
    started = time.perf_counter()
    dataset, source = _resolve_dataset(cfg)
    train_raw, test_raw = stratified_split(dataset, cfg.train_fraction, cfg.train.seed)
    standardizer = fit_standardizer(train_raw.features) if cfg.standardize else None
    train_feats = standardizer.apply(train_raw.features) if standardizer else train_raw.features
    test_feats = standardizer.apply(test_raw.features) if standardizer else test_raw.features

    model = knn_fit(Dataset(train_feats, train_raw.labels), k)
    cm = confusion(knn_predict(model, test_feats), test_raw.labels)
    report = {
        "run_id": f"baseline-knn-k{k}-seed{cfg.train.seed}",
        "kind": "baseline",
        "method": "knn",
        "k": k,
        "seed": cfg.train.seed,
        "config": config_to_dict(cfg),
        "data": {
            "source": source,
            "train_class_counts": list(train_raw.class_counts()),
            "test_class_counts": list(test_raw.class_counts()),
        },
        "test_confusion": cm.as_list(),
        "metrics": _metrics_block(cm),
        "wall_clock_seconds": time.perf_counter() - started,
    }
    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        _write_json(report, out / "report.json")
        lines = [
            f"run {report['run_id']}",
            f"  method       knn (k={k})",
            f"  seed         {report['seed']}",
            f"  data         {source}",
            "",
            "test confusion",
            *_confusion_text(report["test_confusion"]),
            "",
            "test metrics",
            *_metrics_text(report["metrics"]),
        ]
        (out / "report.txt").write_text("\n".join(lines) + "\n")
    return report


# ---------------------------------------------------------------------------
# ablation grid

def _ablation_cell(cfg: HarnessConfig, mode_value: str, seed: int, out_dir: str | None) -> dict:
    cell_cfg = replace(
        cfg,
        loss_mode=LossMode(mode_value),
        train=replace(cfg.train, seed=seed),
        write_figures=False,
    )
    return run_train(cell_cfg, out_dir).report


def run_ablation(
    cfg: HarnessConfig, seeds: list[int], out_dir=None, jobs: int = 1
) -> dict:
    """Train every loss mode for every seed and tabulate the metrics.

    Cells are independent; with jobs > 1 they run in separate processes,
    which cannot change any cell's result.
    """
    if not seeds:
        raise ValueError("need at least one seed")
    started = time.perf_counter()
    out = Path(out_dir) if out_dir is not None else None
    tasks = [
        (mode, seed, str(out / "runs" / f"{mode.value}-seed{seed}") if out else None)
        for mode in ABLATION_ORDER
        for seed in seeds
    ]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            futures = [
                pool.submit(_ablation_cell, cfg, mode.value, seed, cell_out)
                for mode, seed, cell_out in tasks
            ]
            reports = [f.result() for f in futures]
    else:
        reports = [_ablation_cell(cfg, mode.value, seed, cell_out) for mode, seed, cell_out in tasks]

    by_cell = {(r["loss_mode"], r["seed"]): r for r in reports}
    rows = []
    for mode in ABLATION_ORDER:
        per_seed = {
            str(seed): by_cell[(mode.value, seed)]["metrics"] for seed in seeds
        }
        median = {
            key: statistics.median(per_seed[str(s)][key] for s in seeds)
            for key in ("accuracy", "precision", "recall", "f1")
        }
        rows.append(
            {
                "mode": mode.value,
                "label": MODE_LABELS[mode],
                "median": median,
                "per_seed": per_seed,
            }
        )

    table = {
        "kind": "ablation",
        "seeds": list(seeds),
        "config": config_to_dict(cfg),
        "rows": rows,
        "wall_clock_seconds": time.perf_counter() - started,
    }
    if out is not None:
        out.mkdir(parents=True, exist_ok=True)
        _write_json(table, out / "ablation.json")
        (out / "ablation.txt").write_text(_ablation_text(table))
        if cfg.write_figures:
            from . import figures

            figures.render_ablation_figure(table, out)
    return table


def _ablation_text(table: dict) -> str:
    header = f"{'mode':24} {'accuracy':>9} {'precision':>10} {'recall':>8} {'f1':>7}"
    lines = [f"ablation over seeds {table['seeds']} (median of per-seed metrics, %)", "", header]
    for row in table["rows"]:
        m = row["median"]
        lines.append(
            f"{row['label']:24} {100 * m['accuracy']:>8.1f} {100 * m['precision']:>9.1f} "
            f"{100 * m['recall']:>7.1f} {100 * m['f1']:>6.1f}"
        )
    lines.append("")
    for row in table["rows"]:
        lines.append(f"per-seed f1 for {row['label']}:")
        for seed in table["seeds"]:
            m = row["per_seed"][str(seed)]
            lines.append(
                f"  seed {seed}: acc {100 * m['accuracy']:.1f}  p {100 * m['precision']:.1f}  "
                f"r {100 * m['recall']:.1f}  f1 {100 * m['f1']:.1f}"
            )
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# synthetic data export

def run_synth(spec: SynthSpec, out_path) -> Dataset:
    dataset = synth_generate(spec)
    save_csv(dataset, out_path)
    return dataset
