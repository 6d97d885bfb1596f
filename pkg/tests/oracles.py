"""Independent oracles used to cross-check the library implementations.

Everything here is deliberately coded on a different path than the
package: truth tables instead of predicates, pair-counting instead of
incremental confusion updates, eigendecomposition instead of SVD. Keep it
that way — these exist to catch shared-bug failure modes.
"""

from __future__ import annotations

from collections import Counter

import numpy as np

POS = "positive"
NEG = "negative"


def oracle_binarize(label, threshold: float = 0.5) -> str:
    """Reference label decision via explicit per-kind truth tables."""
    kind = label.kind
    if kind == "categorical3":
        return {"hate": POS, "offensive": POS, "neither": NEG}[label.category]
    if kind == "off_not":
        return {"OFF": POS, "NOT": NEG}[label.category]
    if kind == "toxic_binary":
        return {"toxic": POS, "nontoxic": NEG}[label.category]
    if kind == "multi_binary6":
        return POS if sum(label.flags) >= 1 else NEG
    if kind == "scored":
        return NEG if label.score < threshold else POS
    if kind == "garm":
        return POS if len(label.classes) >= 1 else NEG
    raise AssertionError(f"oracle has no rule for kind {kind!r}")


def oracle_subset_decision(classes: frozenset, pair=("Hate Speech", "Obscenity")) -> tuple[bool, str | None]:
    """Reference keep/exclude + label decision for the near-domain subset."""
    if len(classes) == 0:
        return True, NEG
    outside = [c for c in classes if c not in pair]
    if outside:
        return False, None
    return True, POS


def oracle_confusion(predictions, golds, positive=POS):
    """Pair-count confusion via Counter, then closed-form P/R/F1."""
    pairs = Counter(zip(predictions, golds))
    tp = sum(n for (p, g), n in pairs.items() if p == positive and g == positive)
    fp = sum(n for (p, g), n in pairs.items() if p == positive and g != positive)
    fn = sum(n for (p, g), n in pairs.items() if p != positive and g == positive)
    tn = sum(n for (p, g), n in pairs.items() if p != positive and g != positive)
    precision = tp / (tp + fp) if tp + fp else 0.0
    recall = tp / (tp + fn) if tp + fn else 0.0
    f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
    return {"tp": tp, "fp": fp, "fn": fn, "tn": tn, "precision": precision, "recall": recall, "f1": f1}


def oracle_pca_2d(x: np.ndarray):
    """Top-2 axes via an explicit covariance eigendecomposition."""
    x = np.asarray(x, dtype=np.float64)
    mean = x.mean(axis=0)
    centered = x - mean
    covariance = centered.T @ centered / (x.shape[0] - 1)
    eigenvalues, eigenvectors = np.linalg.eigh(covariance)
    order = np.argsort(eigenvalues)[::-1]
    components = eigenvectors[:, order[:2]].T
    coords = centered @ components.T
    return mean, components, eigenvalues[order[:2]], coords


def align_signs(reference: np.ndarray, other: np.ndarray) -> np.ndarray:
    """Flip rows of ``other`` to match the sign orientation of ``reference``."""
    flipped = other.copy()
    for i in range(reference.shape[0]):
        if np.dot(reference[i], flipped[i]) < 0:
            flipped[i] = -flipped[i]
    return flipped


def random_raw_label(rng: np.random.Generator, kind: str):
    """Uniformly random raw label of the given kind."""
    from modharness.records import RawLabel

    if kind == "categorical3":
        return RawLabel.categorical3(rng.choice(["hate", "offensive", "neither"]))
    if kind == "off_not":
        return RawLabel.off_not(rng.choice(["OFF", "NOT"]))
    if kind == "toxic_binary":
        return RawLabel.toxic_binary(rng.choice(["toxic", "nontoxic"]))
    if kind == "multi_binary6":
        return RawLabel.multi_binary6(rng.integers(0, 2, size=6).tolist())
    if kind == "scored":
        return RawLabel.scored(float(rng.random()))
    if kind == "garm":
        vocabulary = ["Hate Speech", "Obscenity", "Crime", "Spam", "Arms", "Terrorism"]
        count = int(rng.integers(0, len(vocabulary) + 1))
        chosen = rng.choice(vocabulary, size=count, replace=False) if count else []
        return RawLabel.garm(list(chosen))
    raise AssertionError(f"no generator for kind {kind!r}")
