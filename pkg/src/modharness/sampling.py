"""Training-time weighted sampling over the combined corpus.

Four regimes: uniform over the combined corpus, equal probability per
class, equal probability per dataset, and equal weight per (dataset, class)
cell. Weights are conceptually exact rationals (cell mass / cell size)
materialized in double precision; epochs are drawn i.i.d. with replacement
from the resulting categorical distribution.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import DataError
from .records import NEGATIVE, POSITIVE, TextRecord

COMBINED = "combined"
BY_LABEL = "by_label"
BY_DATASET = "by_dataset"
BY_BOTH = "both"
STRATEGIES = (COMBINED, BY_LABEL, BY_DATASET, BY_BOTH)

NORMALIZATION_TOL = 1e-9


@dataclass
class WeightTable:
    """Per-record sampling probabilities for one strategy.

    ``probabilities[i]`` belongs to the i-th record of the corpus the table
    was computed from; ``cells`` maps (dataset, class) to the member record
    positions. All probabilities are positive and sum to one.
    """

    strategy: str
    probabilities: np.ndarray
    cells: dict[tuple[str, str], np.ndarray]
    record_keys: list[tuple[str, str]]  # (dataset, record_id), aligned with probabilities

    def __len__(self) -> int:
        return len(self.probabilities)


def _require_binarized(records: Sequence[TextRecord]) -> None:
    for record in records:
        if record.binary_label is None:
            raise ValueError(f"record {record.record_id!r} is not binarized; run label unification first")


def compute_weights(records: Sequence[TextRecord], strategy: str) -> WeightTable:
    """Build the sampling distribution for one strategy.

    combined: p = 1/N. by_label: p = 1/(2*n_class). by_dataset:
    p = 1/(D*n_dataset). both: p = 1/(K*n_cell) over the K non-empty
    (dataset, class) cells. A dataset missing one of the two classes is a
    configuration error under by_label/both, reported by cell name.
    """
    if strategy not in STRATEGIES:
        raise ValueError(f"strategy must be one of {STRATEGIES}, got {strategy!r}")
    if not records:
        raise DataError("cannot compute sampling weights over an empty corpus")
    _require_binarized(records)

    n = len(records)
    datasets = sorted({r.dataset for r in records})
    labels = np.array([r.binary_label for r in records])
    dataset_of = np.array([r.dataset for r in records])

    cells: dict[tuple[str, str], np.ndarray] = {}
    for dataset in datasets:
        for label in (POSITIVE, NEGATIVE):
            members = np.flatnonzero((dataset_of == dataset) & (labels == label))
            cells[(dataset, label)] = members

    p = np.empty(n, dtype=np.float64)
    if strategy == COMBINED:
        p[:] = 1.0 / n
    elif strategy == BY_LABEL:
        for label in (POSITIVE, NEGATIVE):
            members = np.flatnonzero(labels == label)
            if members.size == 0:
                raise DataError(f"sampling cell (class={label!r}) is empty; by_label needs both classes")
            p[members] = 1.0 / (2.0 * members.size)
    elif strategy == BY_DATASET:
        d = len(datasets)
        for dataset in datasets:
            members = np.flatnonzero(dataset_of == dataset)
            p[members] = 1.0 / (d * members.size)
    else:  # both
        for (dataset, label), members in cells.items():
            if members.size == 0:
                raise DataError(
                    f"sampling cell (dataset={dataset!r}, class={label!r}) is empty; "
                    "'both' needs every dataset to contain both classes"
                )
        k = len(cells)
        for members in cells.values():
            p[members] = 1.0 / (k * members.size)

    total = p.sum()
    if abs(total - 1.0) > NORMALIZATION_TOL:
        raise AssertionError(f"weight normalization off by {total - 1.0:.3e}")
    return WeightTable(
        strategy=strategy,
        probabilities=p,
        cells=cells,
        record_keys=[(r.dataset, r.record_id) for r in records],
    )


def sample_epoch(weights: WeightTable, epoch_size: int | None = None, seed: int = 0) -> np.ndarray:
    """Draw one epoch of record indices, i.i.d. with replacement.

    Deterministic per seed. Defaults to one draw per corpus record so the
    per-epoch compute budget matches the unweighted baseline.
    """
    n = len(weights)
    size = n if epoch_size is None else int(epoch_size)
    if size < 1:
        raise ValueError(f"epoch_size must be >= 1, got {size}")
    rng = np.random.default_rng(seed)
    return rng.choice(n, size=size, replace=True, p=weights.probabilities)


@dataclass
class EmpiricalShares:
    """Exact frequency tables over a drawn index sequence."""

    by_class: dict[str, float]
    by_dataset: dict[str, float]
    by_cell: dict[tuple[str, str], float]


def empirical_distribution(indices: np.ndarray, records: Sequence[TextRecord]) -> EmpiricalShares:
    indices = np.asarray(indices)
    if indices.size == 0:
        raise ValueError("empty index sequence")
    if indices.min() < 0 or indices.max() >= len(records):
        raise ValueError("index out of range for the given records")
    _require_binarized(records)

    counts = np.bincount(indices, minlength=len(records))
    total = float(indices.size)
    by_class: dict[str, float] = {}
    by_dataset: dict[str, float] = {}
    by_cell: dict[tuple[str, str], float] = {}
    for position, count in enumerate(counts):
        if count == 0:
            continue
        record = records[position]
        by_class[record.binary_label] = by_class.get(record.binary_label, 0.0) + count
        by_dataset[record.dataset] = by_dataset.get(record.dataset, 0.0) + count
        key = (record.dataset, record.binary_label)
        by_cell[key] = by_cell.get(key, 0.0) + count
    return EmpiricalShares(
        by_class={k: v / total for k, v in by_class.items()},
        by_dataset={k: v / total for k, v in by_dataset.items()},
        by_cell={k: v / total for k, v in by_cell.items()},
    )


def write_weight_table(weights: WeightTable, path: str | Path) -> None:
    """Export (record_id, probability) rows for audit."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as handle:
        handle.write("record_id,probability\n")
        for (dataset, record_id), probability in zip(weights.record_keys, weights.probabilities):
            handle.write(f"{dataset}/{record_id},{float(probability)!r}\n")
