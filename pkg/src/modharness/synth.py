"""Synthetic corpora with controllable vocabulary overlap.

Desk-scale stand-ins for the real datasets: binary "toxicity" corpora built
from disjoint token vocabularies (so in-domain vs out-of-domain orderings
are forced by construction) and a multi-label brand-safety corpus whose
per-class vocabularies can deliberately overlap a training corpus.

Generators return unbinarized TextRecords and can also write the raw
on-disk formats the ingest descriptors expect, so the full pipeline can be
exercised end to end without licensed data.
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from .ingest import JSONL, DatasetDescriptor
from .records import GARM, TOXIC_BINARY, TEST, TRAIN, RawLabel, TextRecord
from .seeding import derive_seed


def token_vocab(prefix: str, n: int = 60) -> list[str]:
    """n distinct tokens sharing a prefix; different prefixes never collide."""
    return [f"{prefix}{i:03d}" for i in range(n)]


def _make_text(rng: np.random.Generator, vocab: Sequence[str], length_range: tuple[int, int]) -> str:
    length = int(rng.integers(length_range[0], length_range[1] + 1))
    return " ".join(rng.choice(vocab, size=length, replace=True))


def binary_corpus(
    dataset: str,
    n: int,
    positive_vocab: Sequence[str],
    negative_vocab: Sequence[str],
    seed: int = 0,
    positive_rate: float = 0.5,
    length_range: tuple[int, int] = (5, 12),
    split: str = TRAIN,
) -> list[TextRecord]:
    """Binary-labeled corpus: positives and negatives draw from their own vocab."""
    rng = np.random.default_rng(derive_seed(seed, dataset, "binary-corpus"))
    records = []
    for i in range(n):
        positive = bool(rng.random() < positive_rate)
        vocab = positive_vocab if positive else negative_vocab
        records.append(
            TextRecord(
                record_id=f"{dataset}-{i:05d}",
                dataset=dataset,
                split=split,
                text=_make_text(rng, vocab, length_range),
                raw_label=RawLabel.toxic_binary("toxic" if positive else "nontoxic"),
            )
        )
    return records


def garm_corpus(
    dataset: str,
    n: int,
    class_vocabs: Mapping[str, Sequence[str]],
    negative_vocab: Sequence[str],
    seed: int = 0,
    positive_rate: float = 0.5,
    multi_label_rate: float = 0.2,
    length_range: tuple[int, int] = (5, 12),
    split: str = TEST,
) -> list[TextRecord]:
    """Multi-label brand-safety corpus; a fraction of positives carry two classes."""
    rng = np.random.default_rng(derive_seed(seed, dataset, "garm-corpus"))
    class_names = sorted(class_vocabs)
    records = []
    for i in range(n):
        if rng.random() < positive_rate:
            count = 2 if (len(class_names) > 1 and rng.random() < multi_label_rate) else 1
            chosen = sorted(rng.choice(class_names, size=count, replace=False))
            tokens: list[str] = []
            per_class = max(length_range[0] // count, 2)
            for name in chosen:
                tokens.extend(_make_text(rng, class_vocabs[name], (per_class, per_class + 3)).split())
            text = " ".join(tokens)
            label = RawLabel.garm(chosen)
        else:
            text = _make_text(rng, negative_vocab, length_range)
            label = RawLabel.garm(())
        records.append(
            TextRecord(record_id=f"{dataset}-{i:05d}", dataset=dataset, split=split, text=text, raw_label=label)
        )
    return records


# -- raw-file round trip (so ingestion itself can be driven synthetically) --


def write_binary_jsonl(records: Sequence[TextRecord], path: str | Path) -> None:
    """Raw file format for a synthetic toxic/nontoxic dataset."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as handle:
        for record in records:
            if record.raw_label.kind != TOXIC_BINARY:
                raise ValueError(f"record {record.record_id!r} is not toxic_binary-labeled")
            row = {"id": record.record_id, "text": record.text, "label": record.raw_label.category}
            handle.write(json.dumps(row, ensure_ascii=False) + "\n")


def write_garm_jsonl(records: Sequence[TextRecord], path: str | Path) -> None:
    """Raw file format for a synthetic brand-safety dataset."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as handle:
        for record in records:
            if record.raw_label.kind != GARM:
                raise ValueError(f"record {record.record_id!r} is not garm-labeled")
            row = {"id": record.record_id, "text": record.text, "classes": sorted(record.raw_label.classes)}
            handle.write(json.dumps(row, ensure_ascii=False) + "\n")


def binary_descriptor(dataset: str, test_only: bool = False) -> DatasetDescriptor:
    """Descriptor matching write_binary_jsonl output."""
    return DatasetDescriptor(
        id=dataset,
        file_format=JSONL,
        label_kind=TOXIC_BINARY,
        columns=(("id", "id"), ("text", "text"), ("label", "label")),
        test_only=test_only,
    )


def garm_descriptor(dataset: str) -> DatasetDescriptor:
    """Descriptor matching write_garm_jsonl output (test-only, like the real set)."""
    return DatasetDescriptor(
        id=dataset,
        file_format=JSONL,
        label_kind=GARM,
        columns=(("id", "id"), ("text", "text"), ("classes", "classes")),
        test_only=True,
    )
