"""Binary label unification and the brand-safety subset derivation.

Every raw-label kind has exactly one declarative binarization rule mapping
hateful/toxic/offensive labels to the positive class and everything else to
negative. Continuous scores use an inclusive 0.5 threshold: strictly below
is negative, the rest positive.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Callable, Iterable, Mapping, Sequence

from .errors import ConfigError, DataError
from .records import (
    CATEGORICAL3,
    GARM,
    LABEL_KINDS,
    MULTI_BINARY6,
    NEGATIVE,
    OFF_NOT,
    POSITIVE,
    PRIVATE_SUBSET,
    SCORED,
    TOXIC_BINARY,
    RawLabel,
    TextRecord,
)

DEFAULT_THRESHOLD = 0.5

# Brand-safety class vocabulary. The real vocabulary is config-supplied to
# match the annotation of the private dataset; this default covers the
# classes the harness refers to by name.
DEFAULT_GARM_VOCABULARY = (
    "Hate Speech",
    "Obscenity",
    "Debated Social Issues",
    "Explicit Sexual Content",
    "Crime",
    "Illegal Drugs",
    "Arms",
    "Spam",
    "Death/Injury",
    "Terrorism",
)

SUBSET_CLASSES = ("Hate Speech", "Obscenity")


@dataclass(frozen=True)
class BinarizationRule:
    """One declarative positive-class predicate for a raw-label kind."""

    kind: str
    predicate: str
    threshold: float = DEFAULT_THRESHOLD

    def to_json(self) -> dict:
        return {"kind": self.kind, "predicate": self.predicate, "threshold": self.threshold}

    @staticmethod
    def from_json(obj: Mapping) -> "BinarizationRule":
        return BinarizationRule(
            kind=obj["kind"],
            predicate=obj["predicate"],
            threshold=float(obj.get("threshold", DEFAULT_THRESHOLD)),
        )


def _hate_or_offensive(label: RawLabel, rule: BinarizationRule) -> bool:
    return label.category in ("hate", "offensive")


def _is_off(label: RawLabel, rule: BinarizationRule) -> bool:
    return label.category == "OFF"


def _is_toxic(label: RawLabel, rule: BinarizationRule) -> bool:
    return label.category == "toxic"


def _any_flag_set(label: RawLabel, rule: BinarizationRule) -> bool:
    return any(flag == 1 for flag in label.flags)


def _score_at_least(label: RawLabel, rule: BinarizationRule) -> bool:
    if not (0.0 <= label.score <= 1.0):
        raise DataError(f"scored label outside [0, 1]: {label.score!r}")
    return label.score >= rule.threshold


def _any_garm_class(label: RawLabel, rule: BinarizationRule) -> bool:
    return len(label.classes) > 0


PREDICATES: dict[str, Callable[[RawLabel, BinarizationRule], bool]] = {
    "hate_or_offensive": _hate_or_offensive,
    "is_off": _is_off,
    "is_toxic": _is_toxic,
    "any_flag_set": _any_flag_set,
    "score_at_least": _score_at_least,
    "any_garm_class": _any_garm_class,
}


def default_rules() -> dict[str, BinarizationRule]:
    """The stock rule table: exactly one rule per raw-label kind."""
    return {
        CATEGORICAL3: BinarizationRule(CATEGORICAL3, "hate_or_offensive"),
        OFF_NOT: BinarizationRule(OFF_NOT, "is_off"),
        TOXIC_BINARY: BinarizationRule(TOXIC_BINARY, "is_toxic"),
        MULTI_BINARY6: BinarizationRule(MULTI_BINARY6, "any_flag_set"),
        SCORED: BinarizationRule(SCORED, "score_at_least", DEFAULT_THRESHOLD),
        GARM: BinarizationRule(GARM, "any_garm_class"),
    }


def rules_to_json(rules: Mapping[str, BinarizationRule]) -> dict:
    return {kind: rule.to_json() for kind, rule in sorted(rules.items())}


def rules_from_json(obj: Mapping) -> dict[str, BinarizationRule]:
    rules = default_rules()
    for kind, rule_obj in obj.items():
        if kind not in LABEL_KINDS:
            raise ConfigError(f"unknown label kind in rule table: {kind!r}")
        rule = BinarizationRule.from_json({"kind": kind, **rule_obj})
        if rule.predicate not in PREDICATES:
            raise ConfigError(f"unknown predicate {rule.predicate!r} for kind {kind!r}")
        rules[kind] = rule
    return rules


def binarize(record: TextRecord, rules: Mapping[str, BinarizationRule] | None = None) -> TextRecord:
    """Return the record with its binary label derived from the rule table.

    Idempotent: the label is recomputed from the raw label every time.
    """
    rules = default_rules() if rules is None else rules
    rule = rules.get(record.raw_label.kind)
    if rule is None:
        raise ConfigError(f"no binarization rule for label kind {record.raw_label.kind!r}")
    predicate = PREDICATES.get(rule.predicate)
    if predicate is None:
        raise ConfigError(f"unknown predicate {rule.predicate!r}")
    label = POSITIVE if predicate(record.raw_label, rule) else NEGATIVE
    return record.with_binary_label(label)


def binarize_all(
    records: Iterable[TextRecord], rules: Mapping[str, BinarizationRule] | None = None
) -> list[TextRecord]:
    rules = default_rules() if rules is None else rules
    return [binarize(record, rules) for record in records]


def extract_private_subset(
    records: Sequence[TextRecord],
    subset_classes: Sequence[str] = SUBSET_CLASSES,
    subset_id: str = PRIVATE_SUBSET,
) -> list[TextRecord]:
    """Derive the near-domain brand-safety test subset.

    Keeps safe examples (empty class set, negative) and examples whose
    classes are a non-empty subset of ``subset_classes`` (positive).
    Examples carrying any other class are excluded even when they also
    carry a subset class. Record ids and raw labels are preserved; the
    dataset id is rewritten to ``subset_id``.
    """
    allowed = set(subset_classes)
    subset: list[TextRecord] = []
    for record in records:
        if record.raw_label.kind != GARM:
            raise DataError(
                f"private-subset extraction needs garm-labeled records, got kind "
                f"{record.raw_label.kind!r} (record {record.record_id!r})"
            )
        classes = record.raw_label.classes
        if not classes:
            subset.append(replace(record, dataset=subset_id, binary_label=NEGATIVE))
        elif classes <= allowed:
            subset.append(replace(record, dataset=subset_id, binary_label=POSITIVE))
    return subset


def class_counts(records: Iterable[TextRecord]) -> dict[tuple[str, str], int]:
    """Count positives/negatives per dataset, plus per-class counts for
    garm-labeled datasets (one example may count toward several classes)."""
    counts: dict[tuple[str, str], int] = {}
    for record in records:
        if record.binary_label is None:
            raise ValueError(f"record {record.record_id!r} is not binarized")
        key = (record.dataset, record.binary_label)
        counts[key] = counts.get(key, 0) + 1
        if record.raw_label.kind == GARM:
            for name in record.raw_label.classes:
                key = (record.dataset, name)
                counts[key] = counts.get(key, 0) + 1
    return counts
