"""Core record types and the canonical JSON-lines corpus format.

A TextRecord is one text example with its source dataset, split, the raw
dataset-specific label, and (after unification) a binary label. Raw labels
are a tagged union over six concrete kinds; each kind has exactly one
binarization rule (see labels.py).
"""

from __future__ import annotations

import json
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Iterable, Iterator, Mapping, Sequence

# Well-known dataset ids. Synthetic or user-registered datasets may use any
# other string id.
AHS = "ahs"
SOLID = "solid"
SURGE = "surge"
KTC = "ktc"
JUB = "jub"
PRIVATE = "private"
PRIVATE_SUBSET = "private_subset"  # derived, never ingested directly

TRAIN = "train"
VALIDATION = "validation"
TEST = "test"
SPLITS = (TRAIN, VALIDATION, TEST)

POSITIVE = "positive"
NEGATIVE = "negative"
BINARY_LABELS = (POSITIVE, NEGATIVE)

# Raw-label kinds (tagged-union discriminators).
CATEGORICAL3 = "categorical3"    # hate / offensive / neither
OFF_NOT = "off_not"              # OFF / NOT
TOXIC_BINARY = "toxic_binary"    # toxic / nontoxic
MULTI_BINARY6 = "multi_binary6"  # six 0/1 toxicity flags
SCORED = "scored"                # continuous target in [0, 1] plus subtype scores
GARM = "garm"                    # set of brand-safety class names (empty = safe)
LABEL_KINDS = (CATEGORICAL3, OFF_NOT, TOXIC_BINARY, MULTI_BINARY6, SCORED, GARM)

CATEGORICAL3_VALUES = ("hate", "offensive", "neither")
OFF_NOT_VALUES = ("OFF", "NOT")
TOXIC_BINARY_VALUES = ("toxic", "nontoxic")
MULTI_BINARY6_FLAGS = ("toxic", "severe_toxic", "obscene", "threat", "insult", "identity_hate")


@dataclass(frozen=True)
class RawLabel:
    """Dataset-specific label; exactly one kind-specific payload is set.

    categorical3 / off_not / toxic_binary -> ``category``
    multi_binary6 -> ``flags`` (six 0/1 ints, order MULTI_BINARY6_FLAGS)
    scored -> ``score`` in [0, 1] plus optional ``subtype_scores``
    garm -> ``classes`` (frozenset of class names; empty set means safe)
    """

    kind: str
    category: str | None = None
    flags: tuple[int, ...] | None = None
    score: float | None = None
    subtype_scores: tuple[tuple[str, float], ...] = ()
    classes: frozenset[str] = frozenset()

    def __post_init__(self) -> None:
        if self.kind == CATEGORICAL3:
            if self.category not in CATEGORICAL3_VALUES:
                raise ValueError(f"categorical3 value must be one of {CATEGORICAL3_VALUES}, got {self.category!r}")
        elif self.kind == OFF_NOT:
            if self.category not in OFF_NOT_VALUES:
                raise ValueError(f"off_not value must be one of {OFF_NOT_VALUES}, got {self.category!r}")
        elif self.kind == TOXIC_BINARY:
            if self.category not in TOXIC_BINARY_VALUES:
                raise ValueError(f"toxic_binary value must be one of {TOXIC_BINARY_VALUES}, got {self.category!r}")
        elif self.kind == MULTI_BINARY6:
            if self.flags is None or len(self.flags) != len(MULTI_BINARY6_FLAGS):
                raise ValueError(f"multi_binary6 needs {len(MULTI_BINARY6_FLAGS)} flags, got {self.flags!r}")
            if any(f not in (0, 1) for f in self.flags):
                raise ValueError(f"multi_binary6 flags must be 0/1, got {self.flags!r}")
        elif self.kind == SCORED:
            if self.score is None or not (0.0 <= self.score <= 1.0):
                raise ValueError(f"scored target must lie in [0, 1], got {self.score!r}")
            for name, value in self.subtype_scores:
                if not (0.0 <= value <= 1.0):
                    raise ValueError(f"subtype score {name!r} must lie in [0, 1], got {value!r}")
        elif self.kind == GARM:
            if any(not isinstance(c, str) or not c for c in self.classes):
                raise ValueError("garm classes must be non-empty strings")
        else:
            raise ValueError(f"unknown label kind {self.kind!r}")

    # -- constructors ------------------------------------------------------

    @staticmethod
    def categorical3(value: str) -> "RawLabel":
        return RawLabel(kind=CATEGORICAL3, category=value)

    @staticmethod
    def off_not(value: str) -> "RawLabel":
        return RawLabel(kind=OFF_NOT, category=value)

    @staticmethod
    def toxic_binary(value: str) -> "RawLabel":
        return RawLabel(kind=TOXIC_BINARY, category=value)

    @staticmethod
    def multi_binary6(flags: Sequence[int]) -> "RawLabel":
        return RawLabel(kind=MULTI_BINARY6, flags=tuple(int(f) for f in flags))

    @staticmethod
    def scored(target: float, subtypes: Mapping[str, float] | None = None) -> "RawLabel":
        pairs = tuple(sorted((subtypes or {}).items()))
        return RawLabel(kind=SCORED, score=float(target), subtype_scores=pairs)

    @staticmethod
    def garm(classes: Iterable[str] = ()) -> "RawLabel":
        return RawLabel(kind=GARM, classes=frozenset(classes))

    # -- serialization -----------------------------------------------------

    def to_json(self) -> dict:
        if self.kind in (CATEGORICAL3, OFF_NOT, TOXIC_BINARY):
            return {"kind": self.kind, "value": self.category}
        if self.kind == MULTI_BINARY6:
            return {"kind": self.kind, "flags": list(self.flags)}
        if self.kind == SCORED:
            obj: dict = {"kind": self.kind, "target": self.score}
            if self.subtype_scores:
                obj["subtypes"] = dict(self.subtype_scores)
            return obj
        return {"kind": self.kind, "classes": sorted(self.classes)}

    @staticmethod
    def from_json(obj: Mapping) -> "RawLabel":
        kind = obj.get("kind")
        if kind == CATEGORICAL3:
            return RawLabel.categorical3(obj["value"])
        if kind == OFF_NOT:
            return RawLabel.off_not(obj["value"])
        if kind == TOXIC_BINARY:
            return RawLabel.toxic_binary(obj["value"])
        if kind == MULTI_BINARY6:
            return RawLabel.multi_binary6(obj["flags"])
        if kind == SCORED:
            return RawLabel.scored(obj["target"], obj.get("subtypes"))
        if kind == GARM:
            return RawLabel.garm(obj["classes"])
        raise ValueError(f"unknown label kind in tagged object: {kind!r}")


@dataclass(frozen=True)
class TextRecord:
    """One text example. Immutable; derived stages produce new records."""

    record_id: str
    dataset: str
    split: str
    text: str
    raw_label: RawLabel
    binary_label: str | None = None

    def __post_init__(self) -> None:
        if not self.record_id:
            raise ValueError("record_id must be non-empty")
        if not self.dataset:
            raise ValueError("dataset must be non-empty")
        if self.split not in SPLITS:
            raise ValueError(f"split must be one of {SPLITS}, got {self.split!r}")
        if not self.text:
            raise ValueError("text must be non-empty")
        if self.binary_label is not None and self.binary_label not in BINARY_LABELS:
            raise ValueError(f"binary_label must be one of {BINARY_LABELS} or None, got {self.binary_label!r}")

    def with_split(self, split: str) -> "TextRecord":
        return replace(self, split=split)

    def with_binary_label(self, label: str) -> "TextRecord":
        return replace(self, binary_label=label)


# -- canonical corpus format (JSON lines, one record per line) -------------

def record_to_json(record: TextRecord) -> dict:
    return {
        "record_id": record.record_id,
        "dataset": record.dataset,
        "split": record.split,
        "text": record.text,
        "raw_label": record.raw_label.to_json(),
        "binary_label": record.binary_label,
    }


def record_from_json(obj: Mapping) -> TextRecord:
    return TextRecord(
        record_id=obj["record_id"],
        dataset=obj["dataset"],
        split=obj["split"],
        text=obj["text"],
        raw_label=RawLabel.from_json(obj["raw_label"]),
        binary_label=obj.get("binary_label"),
    )


def write_corpus(records: Iterable[TextRecord], path: str | Path) -> int:
    """Write records as canonical JSON lines; returns the record count."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    n = 0
    with open(path, "w", encoding="utf-8") as handle:
        for record in records:
            handle.write(json.dumps(record_to_json(record), ensure_ascii=False) + "\n")
            n += 1
    return n


def iter_corpus(path: str | Path) -> Iterator[TextRecord]:
    with open(path, "r", encoding="utf-8") as handle:
        for line in handle:
            line = line.strip()
            if line:
                yield record_from_json(json.loads(line))


def read_corpus(path: str | Path) -> list[TextRecord]:
    return list(iter_corpus(path))
