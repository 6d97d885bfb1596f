"""Positive-class F1 metrics, cross-dataset matrices, per-class breakdowns.

The metric throughout is positive-class F1 (offensive = positive), never
macro-F1. Matrix cells are the mean of per-restart F1 values; degenerate
0/0 ratios are defined as 0.0 and flagged rather than inflated to 1.0.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from .records import GARM, NEGATIVE, POSITIVE, TextRecord

# Bundles are duck-typed here to keep this module free of training-side
# imports: anything with .models whose items implement
# .predict(records) -> list of objects with .record_id/.probability/.label.
TrainedModelBundleLike = object


@dataclass(frozen=True)
class ConfusionCounts:
    tp: int
    fp: int
    fn: int
    tn: int

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.fn + self.tn


@dataclass(frozen=True)
class F1Result:
    precision: float
    recall: float
    f1: float
    counts: ConfusionCounts
    degenerate: bool  # some 0/0 ratio was defined as 0.0


def f1_score(predictions: Sequence[str], golds: Sequence[str], positive: str = POSITIVE) -> F1Result:
    """Precision/recall/F1 of the positive class.

    Any 0/0 ratio (no predicted positives, no actual positives, or P+R=0)
    is defined as 0.0 and sets the degenerate flag.
    """
    if len(predictions) != len(golds):
        raise ValueError(f"length mismatch: {len(predictions)} predictions vs {len(golds)} golds")
    if not predictions:
        raise ValueError("cannot score an empty prediction list")
    tp = fp = fn = tn = 0
    for predicted, gold in zip(predictions, golds):
        if predicted == positive:
            if gold == positive:
                tp += 1
            else:
                fp += 1
        elif gold == positive:
            fn += 1
        else:
            tn += 1
    degenerate = False
    if tp + fp == 0:
        precision, degenerate = 0.0, True
    else:
        precision = tp / (tp + fp)
    if tp + fn == 0:
        recall, degenerate = 0.0, True
    else:
        recall = tp / (tp + fn)
    if precision + recall == 0.0:
        f1, degenerate = 0.0, True
    else:
        f1 = 2.0 * precision * recall / (precision + recall)
    return F1Result(precision, recall, f1, ConfusionCounts(tp, fp, fn, tn), degenerate)


@dataclass(frozen=True)
class RestartStats:
    mean: float
    minimum: float
    maximum: float
    stddev: float


def aggregate_restarts(scores: Sequence[float]) -> RestartStats:
    """Mean of per-restart scores plus spread statistics."""
    if not scores:
        raise ValueError("need at least one restart score")
    values = np.asarray(scores, dtype=np.float64)
    return RestartStats(
        mean=float(values.mean()),
        minimum=float(values.min()),
        maximum=float(values.max()),
        stddev=float(values.std()),
    )


@dataclass
class CellResult:
    """One (training condition, test set) matrix cell."""

    condition: str
    test_set: str
    per_restart: list[F1Result]
    stats: RestartStats
    # per restart: list of (record_id, probability, label, gold) rows
    predictions: list[list[tuple[str, float, str, str]]] = field(default_factory=list)

    @property
    def mean_f1(self) -> float:
        return self.stats.mean


@dataclass
class EvalReport:
    """Cross matrix (rows = test sets, columns = conditions) plus detail."""

    conditions: list[str]
    test_sets: list[str]
    cells: dict[tuple[str, str], CellResult]  # keyed (test_set, condition)

    def best_condition(self, test_set: str) -> str:
        row = [(self.cells[(test_set, c)].mean_f1, c) for c in self.conditions]
        return max(row)[1]

    def to_csv(self, extra_comment: str | None = None) -> str:
        lines = []
        if extra_comment:
            lines.append(f"# {extra_comment}")
        lines.append("test_set," + ",".join(self.conditions) + ",best_condition")
        for test_set in self.test_sets:
            cells = [f"{self.cells[(test_set, c)].mean_f1:.6f}" for c in self.conditions]
            lines.append(f"{test_set}," + ",".join(cells) + f",{self.best_condition(test_set)}")
        return "\n".join(lines) + "\n"

    def to_markdown(self) -> str:
        header = "| Test set | " + " | ".join(self.conditions) + " |"
        rule = "|---" * (len(self.conditions) + 1) + "|"
        lines = [header, rule]
        for test_set in self.test_sets:
            best = self.best_condition(test_set)
            row = [test_set]
            for condition in self.conditions:
                value = f"{self.cells[(test_set, condition)].mean_f1:.3f}"
                row.append(f"**{value}**" if condition == best else value)
            lines.append("| " + " | ".join(row) + " |")
        return "\n".join(lines) + "\n"

    def to_json(self) -> dict:
        detail = {}
        for (test_set, condition), cell in self.cells.items():
            detail[f"{test_set}::{condition}"] = {
                "per_restart_f1": [r.f1 for r in cell.per_restart],
                "per_restart_precision": [r.precision for r in cell.per_restart],
                "per_restart_recall": [r.recall for r in cell.per_restart],
                "degenerate": [r.degenerate for r in cell.per_restart],
                "mean_f1": cell.stats.mean,
                "min_f1": cell.stats.minimum,
                "max_f1": cell.stats.maximum,
                "stddev_f1": cell.stats.stddev,
            }
        return {"conditions": self.conditions, "test_sets": self.test_sets, "cells": detail}

    @staticmethod
    def from_json(obj: Mapping) -> "EvalReport":
        """Rebuild a renderable report (summary statistics only) from JSON."""
        cells: dict[tuple[str, str], CellResult] = {}
        for key, detail in obj["cells"].items():
            test_set, condition = key.split("::", 1)
            stats = RestartStats(
                mean=detail["mean_f1"],
                minimum=detail["min_f1"],
                maximum=detail["max_f1"],
                stddev=detail["stddev_f1"],
            )
            cells[(test_set, condition)] = CellResult(condition, test_set, [], stats)
        return EvalReport(conditions=list(obj["conditions"]), test_sets=list(obj["test_sets"]), cells=cells)


def cross_matrix(
    bundles: Mapping[str, "TrainedModelBundleLike"],
    test_sets: Mapping[str, Sequence[TextRecord]],
    keep_predictions: bool = True,
) -> EvalReport:
    """Evaluate every training condition on every test set.

    Cells are mean F1 over restarts. Test records must be binarized; the
    per-record predictions are retained so every reported number can be
    reproduced from the dumps.
    """
    if not bundles:
        raise ValueError("no training conditions to evaluate")
    if not test_sets:
        raise ValueError("no test sets to evaluate")
    for name, records in test_sets.items():
        if not records:
            raise ValueError(f"test set {name!r} is empty")
        for record in records:
            if record.binary_label is None:
                raise ValueError(f"test set {name!r} contains non-binarized record {record.record_id!r}")

    conditions = list(bundles)
    names = list(test_sets)
    cells: dict[tuple[str, str], CellResult] = {}
    for condition in conditions:
        bundle = bundles[condition]
        for test_name in names:
            records = test_sets[test_name]
            golds = [r.binary_label for r in records]
            per_restart: list[F1Result] = []
            dumps: list[list[tuple[str, float, str, str]]] = []
            for model in bundle.models:
                predictions = model.predict(records)
                per_restart.append(f1_score([p.label for p in predictions], golds))
                if keep_predictions:
                    dumps.append(
                        [(p.record_id, p.probability, p.label, gold) for p, gold in zip(predictions, golds)]
                    )
            stats = aggregate_restarts([r.f1 for r in per_restart])
            cells[(test_name, condition)] = CellResult(condition, test_name, per_restart, stats, dumps)
    return EvalReport(conditions=conditions, test_sets=names, cells=cells)


def per_class_breakdown(
    bundle: "TrainedModelBundleLike",
    records: Sequence[TextRecord],
    classes: Sequence[str] | None = None,
) -> dict[str, float | None]:
    """Mean F1 per brand-safety class against the shared safe pool.

    For class c the evaluation pool is the safe examples (empty class set)
    plus the examples carrying c; gold is positive iff the example carries
    c. Classes with no positives in the corpus map to None (n/a), never 0.
    Examples positive only for other classes are excluded from c's pool so
    the score isolates discrimination of c against safe content.
    """
    for record in records:
        if record.raw_label.kind != GARM:
            raise ValueError(f"per-class breakdown needs garm-labeled records, got {record.raw_label.kind!r}")
    if classes is None:
        observed: set[str] = set()
        for record in records:
            observed |= record.raw_label.classes
        classes = sorted(observed)

    # One inference pass per restart over the full corpus; pools then index
    # into the shared prediction list.
    per_restart_labels: list[list[str]] = []
    for model in bundle.models:
        predictions = model.predict(records)
        per_restart_labels.append([p.label for p in predictions])

    breakdown: dict[str, float | None] = {}
    for name in classes:
        pool: list[int] = []
        golds: list[str] = []
        positives = 0
        for index, record in enumerate(records):
            record_classes = record.raw_label.classes
            if not record_classes:
                pool.append(index)
                golds.append(NEGATIVE)
            elif name in record_classes:
                pool.append(index)
                golds.append(POSITIVE)
                positives += 1
        if positives == 0:
            breakdown[name] = None
            continue
        scores = [
            f1_score([labels[i] for i in pool], golds).f1
            for labels in per_restart_labels
        ]
        breakdown[name] = aggregate_restarts(scores).mean
    return breakdown


def breakdown_to_csv(breakdowns: Mapping[str, Mapping[str, float | None]], extra_comment: str | None = None) -> str:
    """Render per-condition class breakdowns, rows = classes, values F1 x 100."""
    conditions = list(breakdowns)
    classes: list[str] = sorted({name for table in breakdowns.values() for name in table})
    lines = ["# values are F1 x 100; n/a marks classes with no positives in the corpus"]
    if extra_comment:
        lines.append(f"# {extra_comment}")
    lines.append("class," + ",".join(conditions))
    for name in classes:
        row = [name]
        for condition in conditions:
            value = breakdowns[condition].get(name)
            row.append("n/a" if value is None else f"{100.0 * value:.1f}")
        lines.append(",".join(row))
    return "\n".join(lines) + "\n"


def write_prediction_dump(cell: CellResult, directory: str | Path) -> Path:
    """Write the per-record prediction JSONL dump for one matrix cell.

    One file per test set; rows carry a restart index so every per-restart
    score is recomputable from the dump.
    """
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    path = directory / f"{cell.test_set}.jsonl"
    with open(path, "w", encoding="utf-8") as handle:
        for restart, rows in enumerate(cell.predictions):
            for record_id, probability, label, gold in rows:
                handle.write(
                    json.dumps(
                        {
                            "record_id": record_id,
                            "probability": probability,
                            "label": label,
                            "gold": gold,
                            "restart": restart,
                        },
                        ensure_ascii=False,
                    )
                    + "\n"
                )
    return path
