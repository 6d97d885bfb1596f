"""Pipeline orchestration and the ``modharness`` command line.

Subcommands: ingest (parse + split + binarize into canonical corpora),
train (fine-tune every condition with restarts), evaluate (cross-dataset
F1 matrix, per-class breakdown, prediction dumps), embed (mean-token
embeddings + 2D PCA), report (re-render tables from stored metrics).

Every stage directory is content-addressed by a hash over the config
fields it depends on; completed stages are skipped on re-runs and nothing
is ever overwritten. Exit codes: 0 ok, 2 user/config error, 3 data error,
4 training failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import replace
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from .config import ConditionSpec, RunConfig, load_config, subset_id_for
from .errors import ConfigError, DataError, TrainingError
from .evaluation import EvalReport, breakdown_to_csv, cross_matrix, per_class_breakdown, write_prediction_dump
from .harness import load_bundle, run_restarts, save_bundle
from .ingest import concat_corpora, load_dataset, split_train_test, split_train_val
from .labels import binarize_all, class_counts, extract_private_subset
from .projection import attach_coords, extract_embeddings, fit_pca_2d, sample_per_dataset, write_embeddings_csv, write_pca_meta
from .records import GARM, TEST, TRAIN, VALIDATION, POSITIVE, TextRecord, read_corpus, write_corpus
from .sampling import BY_BOTH, BY_DATASET, compute_weights, write_weight_table
from .backbones import create_backbone

logger = logging.getLogger("modharness")


def _stage_complete(directory: Path, stage_hash: str) -> bool:
    marker = directory / ".complete"
    return marker.exists() and marker.read_text().strip() == stage_hash


def _mark_complete(directory: Path, stage_hash: str) -> None:
    (directory / ".complete").write_text(stage_hash)


# ---------------------------------------------------------------------------
# ingest


def corpus_table(corpora: Mapping[str, Sequence[TextRecord]]) -> str:
    """Per-dataset counts and test-split statistics, one row per corpus."""
    lines = [f"{'dataset':<18}{'#train':>10}{'#valid':>10}{'#test':>10}{'*#pos':>10}{'*avg_len':>10}"]
    for dataset, records in corpora.items():
        train = sum(1 for r in records if r.split == TRAIN)
        valid = sum(1 for r in records if r.split == VALIDATION)
        test = [r for r in records if r.split == TEST]
        positives = sum(1 for r in test if r.binary_label == POSITIVE)
        avg_len = f"{sum(len(r.text) for r in test) / len(test):.1f}" if test else "-"
        lines.append(
            f"{dataset:<18}{train:>10}{valid:>10}{len(test):>10}{positives if test else '-':>10}{avg_len:>10}"
        )
    lines.append("(* over the test split; avg length in characters)")
    return "\n".join(lines)


def cmd_ingest(config: RunConfig) -> Path:
    """Parse every registered dataset into canonical corpora plus stats."""
    corpora_dir = config.corpora_dir()
    stage_hash = config.ingest_hash()
    if _stage_complete(corpora_dir, stage_hash):
        logger.info("ingest: corpora up to date at %s", corpora_dir)
        return corpora_dir

    for dataset_id, entry in config.datasets.items():
        for _, path_entry in entry.paths:
            if not path_entry.path.exists():
                raise ConfigError(f"dataset {dataset_id!r}: path does not exist: {path_entry.path}")

    corpora: dict[str, list[TextRecord]] = {}
    all_stats = []
    garm_vocabulary = list(config.garm_vocabulary)
    for dataset_id, entry in config.datasets.items():
        descriptor = entry.descriptor
        vocabulary = garm_vocabulary if descriptor.label_kind == GARM else None
        records: list[TextRecord] = []
        paths = entry.path_map()
        if "full" in paths:
            path_entry = paths["full"]
            dsc = descriptor.with_columns(dict(path_entry.column_overrides)) if path_entry.column_overrides else descriptor
            loaded, stats = load_dataset(dsc, path_entry.path, garm_vocabulary=vocabulary)
            all_stats.append(stats)
            if entry.holdout_test:
                kept, held = split_train_test(loaded, config.split)
                records = kept + held
            else:
                records = loaded
        else:
            for key in (TRAIN, TEST):
                if key not in paths:
                    continue
                path_entry = paths[key]
                dsc = descriptor.with_columns(dict(path_entry.column_overrides)) if path_entry.column_overrides else descriptor
                loaded, stats = load_dataset(dsc, path_entry.path, source_split=key, garm_vocabulary=vocabulary)
                all_stats.append(stats)
                records.extend(loaded)

        train_part = [r for r in records if r.split == TRAIN]
        rest = [r for r in records if r.split != TRAIN]
        if train_part:
            kept, validation = split_train_val(train_part, config.split)
            records = kept + validation + rest
        records = binarize_all(records, config.rules)
        corpora[dataset_id] = records
        if entry.derive_subset:
            corpora[subset_id_for(dataset_id)] = extract_private_subset(
                records, subset_classes=config.subset_classes, subset_id=subset_id_for(dataset_id)
            )

    corpora_dir.mkdir(parents=True, exist_ok=True)
    for dataset_id, records in corpora.items():
        write_corpus(records, corpora_dir / f"{dataset_id}.jsonl")
    table = corpus_table(corpora)
    print(table)
    label_counts = class_counts([r for records in corpora.values() for r in records])
    stats_payload = {
        "config_hash": config.config_hash(),
        "stage_hash": stage_hash,
        "files": [s.to_json() for s in all_stats],
        "corpora": {
            dataset_id: {
                "train": sum(1 for r in records if r.split == TRAIN),
                "validation": sum(1 for r in records if r.split == VALIDATION),
                "test": sum(1 for r in records if r.split == TEST),
                "test_positives": sum(1 for r in records if r.split == TEST and r.binary_label == POSITIVE),
            }
            for dataset_id, records in corpora.items()
        },
        "class_counts": {f"{dataset}/{key}": count for (dataset, key), count in sorted(label_counts.items())},
    }
    (corpora_dir / "stats.json").write_text(json.dumps(stats_payload, indent=2))
    # full resolved config (including the binarization rule table) so label
    # policy changes are diffable across runs
    (corpora_dir / "resolved.json").write_text(json.dumps(config.resolved, indent=2, sort_keys=True))
    _mark_complete(corpora_dir, stage_hash)
    logger.info("ingest: wrote %d corpora to %s", len(corpora), corpora_dir)
    return corpora_dir


# ---------------------------------------------------------------------------
# train


def _load_corpora(config: RunConfig, dataset_ids: Sequence[str]) -> dict[str, list[TextRecord]]:
    corpora_dir = config.corpora_dir()
    if not _stage_complete(corpora_dir, config.ingest_hash()):
        raise DataError(f"no ingested corpora under {corpora_dir}; run `modharness ingest` first")
    corpora = {}
    for dataset_id in dataset_ids:
        path = corpora_dir / f"{dataset_id}.jsonl"
        if not path.exists():
            raise DataError(f"corpus file missing: {path}")
        corpora[dataset_id] = read_corpus(path)
    return corpora


def _train_condition(config: RunConfig, condition: ConditionSpec, corpora: Mapping[str, list[TextRecord]]) -> Path:
    condition_dir = config.condition_dir(condition)
    stage_hash = config.condition_hash(condition)
    if _stage_complete(condition_dir, stage_hash):
        logger.info("train: condition %r up to date at %s", condition.name, condition_dir)
        return condition_dir
    if len(condition.datasets) == 1 and condition.strategy in (BY_DATASET, BY_BOTH):
        logger.warning(
            "condition %r: strategy %r over a single dataset degenerates to its label-only/uniform form",
            condition.name,
            condition.strategy,
        )
    per_dataset_train = [[r for r in corpora[d] if r.split == TRAIN] for d in condition.datasets]
    if any(not members for members in per_dataset_train):
        empty = [d for d, members in zip(condition.datasets, per_dataset_train) if not members]
        raise TrainingError(f"condition {condition.name!r}: dataset(s) {empty} have no training records")
    train_records = concat_corpora(per_dataset_train)
    validation_records = [r for d in condition.datasets for r in corpora[d] if r.split == VALIDATION]
    train_config = replace(config.train, strategy=condition.strategy)
    logger.info(
        "train: condition %r (%d train / %d validation records, strategy=%s, %d restarts)",
        condition.name,
        len(train_records),
        len(validation_records),
        condition.strategy,
        train_config.restarts,
    )
    bundle = run_restarts(train_records, validation_records, train_config)
    save_bundle(
        bundle,
        condition_dir,
        extra_meta={
            "condition": condition.name,
            "datasets": list(condition.datasets),
            "config_hash": config.config_hash(),
            "stage_hash": stage_hash,
        },
    )
    write_weight_table(compute_weights(train_records, condition.strategy), condition_dir / "weights.csv")
    _mark_complete(condition_dir, stage_hash)
    return condition_dir


def cmd_train(config: RunConfig, condition_names: Sequence[str] | None = None, parallel: bool = False) -> Path:
    """Fine-tune every selected condition; returns the runs root."""
    conditions = config.select_conditions(condition_names)
    if not conditions:
        raise ConfigError("no training conditions configured")
    needed = sorted({dataset_id for c in conditions for dataset_id in c.datasets})
    corpora = _load_corpora(config, needed)
    if parallel:
        with ThreadPoolExecutor() as pool:
            futures = [pool.submit(_train_condition, config, c, corpora) for c in conditions]
            for future in futures:
                future.result()
    else:
        for condition in conditions:
            _train_condition(config, condition, corpora)
    return config.output_dir / "runs"


# ---------------------------------------------------------------------------
# evaluate


def _load_test_sets(config: RunConfig) -> dict[str, list[TextRecord]]:
    corpora = _load_corpora(config, config.test_sets)
    test_sets = {}
    for name, records in corpora.items():
        members = [r for r in records if r.split == TEST]
        if not members:
            raise DataError(f"test set {name!r} has no test-split records")
        test_sets[name] = members
    return test_sets


def cmd_evaluate(config: RunConfig, condition_names: Sequence[str] | None = None) -> Path:
    """Cross-dataset F1 matrix, per-class breakdown, prediction dumps."""
    if not config.test_sets:
        raise ConfigError("no test sets configured")
    conditions = config.select_conditions(condition_names)
    bundles = {}
    for condition in conditions:
        condition_dir = config.condition_dir(condition)
        if not _stage_complete(condition_dir, config.condition_hash(condition)):
            raise DataError(f"missing trained bundle for condition {condition.name!r}; run `modharness train` first")
        bundles[condition.name] = load_bundle(condition_dir)
    test_sets = _load_test_sets(config)

    report = cross_matrix(bundles, test_sets)
    reports_dir = config.reports_dir(conditions)
    reports_dir.mkdir(parents=True, exist_ok=True)
    hash_comment = f"config_hash={config.config_hash()}"
    (reports_dir / "cross_matrix.csv").write_text(report.to_csv(extra_comment=hash_comment))
    (reports_dir / "cross_matrix.md").write_text(report.to_markdown())
    metrics = {
        "config_hash": config.config_hash(),
        "stage_hash": config.report_hash(conditions),
        **report.to_json(),
    }

    derived = {subset_id_for(d) for d, entry in config.datasets.items() if entry.derive_subset}
    garm_sets = [
        name
        for name, records in test_sets.items()
        if name not in derived and records[0].raw_label.kind == GARM
    ]
    if garm_sets:
        prefix_classes = len(garm_sets) > 1
        breakdowns: dict[str, dict[str, float | None]] = {name: {} for name in bundles}
        for test_name in garm_sets:
            for condition_name, bundle in bundles.items():
                table = per_class_breakdown(bundle, test_sets[test_name], classes=list(config.garm_vocabulary))
                for class_name, value in table.items():
                    key = f"{test_name}:{class_name}" if prefix_classes else class_name
                    breakdowns[condition_name][key] = value
        (reports_dir / "per_class.csv").write_text(breakdown_to_csv(breakdowns, extra_comment=hash_comment))
        metrics["per_class"] = breakdowns

    predictions_root = reports_dir / "predictions"
    for (test_name, condition_name), cell in report.cells.items():
        condition_dir = predictions_root / condition_name
        write_prediction_dump(cell, condition_dir)
        (condition_dir / "meta.json").write_text(
            json.dumps({"config_hash": config.config_hash(), "condition": condition_name}, indent=2)
        )
    (reports_dir / "metrics.json").write_text(json.dumps(metrics, indent=2))
    _mark_complete(reports_dir, config.report_hash(conditions))
    print(report.to_markdown())
    logger.info("evaluate: report written to %s", reports_dir)
    return reports_dir


# ---------------------------------------------------------------------------
# embed


def cmd_embed(config: RunConfig, plot: bool = False) -> Path:
    """Layer-indexed mean-token embeddings projected to 2D, plus plot data."""
    embed_dir = config.embeddings_dir()
    stage_hash = config.embed_hash()
    if _stage_complete(embed_dir, stage_hash):
        logger.info("embed: up to date at %s", embed_dir)
        if plot:
            _render_scatter(embed_dir)
        return embed_dir
    dataset_ids = list(config.embedding.datasets or config.datasets)
    corpora = _load_corpora(config, dataset_ids)
    records = [r for dataset_id in dataset_ids for r in corpora[dataset_id]]
    sample = sample_per_dataset(records, k=config.embedding.per_dataset, seed=config.seed)
    if config.embedding.use_finetuned:
        condition = next(c for c in config.conditions if c.name == config.embedding.use_finetuned)
        condition_dir = config.condition_dir(condition)
        if not _stage_complete(condition_dir, config.condition_hash(condition)):
            raise DataError(f"embedding.use_finetuned={condition.name!r} has no trained bundle; run train first")
        backbone = load_bundle(condition_dir).models[0].backbone
    else:
        backbone = create_backbone(config.train.backbone, config.train.max_sequence_length)
    points = extract_embeddings(backbone, sample, layer=config.embedding.layer)
    pca = fit_pca_2d(np.stack([p.vector for p in points]))
    points = attach_coords(points, pca)
    embed_dir.mkdir(parents=True, exist_ok=True)
    write_embeddings_csv(points, embed_dir / "embeddings.csv", extra_comment=f"config_hash={config.config_hash()}")
    write_pca_meta(
        pca,
        embed_dir / "pca_meta.json",
        extra={"config_hash": config.config_hash(), "stage_hash": stage_hash, "layer": config.embedding.layer},
    )
    _mark_complete(embed_dir, stage_hash)
    logger.info("embed: wrote %d points to %s", len(points), embed_dir)
    if plot:
        _render_scatter(embed_dir)
    return embed_dir


def _render_scatter(embed_dir: Path) -> Path:
    try:
        import matplotlib

        matplotlib.use("Agg")
        import matplotlib.pyplot as plt
    except ImportError as exc:
        raise ConfigError(f"plotting needs matplotlib (install the 'plot' extra): {exc}") from exc
    import csv as _csv

    by_dataset: dict[str, tuple[list[float], list[float]]] = {}
    with open(embed_dir / "embeddings.csv", encoding="utf-8") as handle:
        rows = [line for line in handle if not line.startswith("#")]
    for row in _csv.DictReader(rows):
        xs, ys = by_dataset.setdefault(row["dataset"], ([], []))
        xs.append(float(row["x"]))
        ys.append(float(row["y"]))
    figure, axes = plt.subplots(figsize=(8, 6))
    for dataset, (xs, ys) in sorted(by_dataset.items()):
        axes.scatter(xs, ys, s=8, alpha=0.6, label=dataset)
    axes.legend(markerscale=2, fontsize=8)
    axes.set_xlabel("component 1")
    axes.set_ylabel("component 2")
    figure.tight_layout()
    out = embed_dir / "scatter.png"
    figure.savefig(out, dpi=150)
    plt.close(figure)
    logger.info("embed: scatter image at %s", out)
    return out


# ---------------------------------------------------------------------------
# report


def cmd_report(config: RunConfig, condition_names: Sequence[str] | None = None, plot: bool = False) -> Path:
    """Re-render the evaluation tables from stored metrics."""
    reports_dir = config.reports_dir(config.select_conditions(condition_names))
    metrics_path = reports_dir / "metrics.json"
    if not metrics_path.exists():
        raise DataError(f"no metrics at {metrics_path}; run `modharness evaluate` first")
    metrics = json.loads(metrics_path.read_text())
    report = EvalReport.from_json(metrics)
    (reports_dir / "cross_matrix.md").write_text(report.to_markdown())
    (reports_dir / "cross_matrix.csv").write_text(report.to_csv(extra_comment=f"config_hash={metrics['config_hash']}"))
    print(report.to_markdown())
    if plot:
        if "per_class" not in metrics:
            logger.warning("report: no per-class table in metrics; nothing to render")
        else:
            _render_heatmap(metrics["per_class"], reports_dir / "per_class_heatmap.png")
    return reports_dir


def _render_heatmap(per_class: Mapping[str, Mapping[str, float | None]], out: Path) -> Path:
    try:
        import matplotlib

        matplotlib.use("Agg")
        import matplotlib.pyplot as plt
    except ImportError as exc:
        raise ConfigError(f"plotting needs matplotlib (install the 'plot' extra): {exc}") from exc

    conditions = list(per_class)
    classes = sorted({name for table in per_class.values() for name in table})
    grid = np.full((len(classes), len(conditions)), np.nan)
    for j, condition in enumerate(conditions):
        for i, name in enumerate(classes):
            value = per_class[condition].get(name)
            if value is not None:
                grid[i, j] = 100.0 * value
    figure, axes = plt.subplots(figsize=(1.2 + 0.9 * len(conditions), 1.0 + 0.45 * len(classes)))
    image = axes.imshow(grid, cmap="viridis", vmin=0, vmax=100, aspect="auto")
    axes.set_xticks(range(len(conditions)), conditions, rotation=45, ha="right", fontsize=8)
    axes.set_yticks(range(len(classes)), classes, fontsize=8)
    for i in range(len(classes)):
        for j in range(len(conditions)):
            if not np.isnan(grid[i, j]):
                axes.text(j, i, f"{grid[i, j]:.0f}", ha="center", va="center", fontsize=7, color="white")
    figure.colorbar(image, label="F1 x 100")
    figure.tight_layout()
    figure.savefig(out, dpi=150)
    plt.close(figure)
    logger.info("report: heatmap at %s", out)
    return out


# ---------------------------------------------------------------------------
# entry point


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="modharness",
        description="Multi-dataset text moderation harness: ingest, train, evaluate, embed, report.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_text in (
        ("ingest", "parse datasets into canonical corpora and print stats"),
        ("train", "fine-tune every training condition with restarts"),
        ("evaluate", "cross-dataset F1 matrix, per-class breakdown, prediction dumps"),
        ("embed", "mean-token embeddings + 2D PCA projection"),
        ("report", "re-render tables from stored metrics"),
    ):
        cmd = sub.add_parser(name, help=help_text)
        cmd.add_argument("--config", required=True, help="run configuration file (YAML or JSON)")
        cmd.add_argument("--seed", type=int, default=None, help="override the config seed")
        cmd.add_argument("--out", default=None, help="override the output directory")
        cmd.add_argument(
            "--strategy",
            choices=["combined", "by_label", "by_dataset", "both"],
            default=None,
            help="override the sampling strategy of every condition",
        )
        cmd.add_argument("--conditions", default=None, help="comma-separated condition names to run")
        if name == "train":
            cmd.add_argument("--parallel", action="store_true", help="run conditions concurrently")
        if name == "embed":
            cmd.add_argument("--plot", action="store_true", help="render a scatter image (needs matplotlib)")
        if name == "report":
            cmd.add_argument("--plot", action="store_true", help="render a per-class heatmap (needs matplotlib)")
    return parser


def run(args: argparse.Namespace) -> int:
    overrides = {
        "seed": getattr(args, "seed", None),
        "output_dir": getattr(args, "out", None),
        "strategy": getattr(args, "strategy", None),
    }
    config = load_config(args.config, overrides=overrides)
    condition_names = None
    if getattr(args, "conditions", None):
        condition_names = [name.strip() for name in args.conditions.split(",") if name.strip()]
    if args.command == "ingest":
        cmd_ingest(config)
    elif args.command == "train":
        cmd_ingest(config)  # resumable; no-op when corpora exist
        cmd_train(config, condition_names=condition_names, parallel=getattr(args, "parallel", False))
    elif args.command == "evaluate":
        cmd_evaluate(config, condition_names=condition_names)
    elif args.command == "embed":
        cmd_embed(config, plot=getattr(args, "plot", False))
    elif args.command == "report":
        cmd_report(config, condition_names=condition_names, plot=getattr(args, "plot", False))
    return 0


def main(argv: Sequence[str] | None = None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(name)s: %(message)s")
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return run(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 3
    except TrainingError as exc:
        print(f"training error: {exc}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())
