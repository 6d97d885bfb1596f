from __future__ import annotations

import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))  # make `oracles` importable

from modharness.records import TEST, TRAIN, RawLabel, TextRecord
from modharness.labels import binarize_all
from modharness.synth import binary_corpus, garm_corpus, token_vocab


@pytest.fixture
def rng():
    return np.random.default_rng(20240117)


def make_records(n, dataset="synth", split=TRAIN, positive_rate=0.5, seed=0):
    """Small binarizable corpus with deterministic toxic/nontoxic labels."""
    generator = np.random.default_rng(seed)
    records = []
    for i in range(n):
        positive = bool(generator.random() < positive_rate)
        records.append(
            TextRecord(
                record_id=f"{dataset}-{i:05d}",
                dataset=dataset,
                split=split,
                text=f"text number {i} token{i % 17}",
                raw_label=RawLabel.toxic_binary("toxic" if positive else "nontoxic"),
            )
        )
    return records


@pytest.fixture
def separable_corpus():
    """Two-vocabulary corpus a linear model can fit exactly."""
    records = binary_corpus("sep", 200, token_vocab("hot"), token_vocab("cold"), seed=11)
    return binarize_all(records)


@pytest.fixture
def garm_fixture():
    vocabs = {
        "Hate Speech": token_vocab("hs"),
        "Obscenity": token_vocab("ob"),
        "Crime": token_vocab("cr"),
        "Spam": token_vocab("sp"),
    }
    records = garm_corpus("bs", 300, vocabs, token_vocab("safe"), seed=5, split=TEST)
    return binarize_all(records)


GARM_VOCAB = ["Hate Speech", "Obscenity", "Crime", "Spam", "Arms", "Terrorism"]


def build_workspace(root: Path, n: int = 500, seed: int = 7, restarts: int = 3, epochs: int = 3) -> Path:
    """Write a complete synthetic run: raw data files + config.yaml.

    Three toxicity corpora with pairwise-disjoint vocabularies, plus one
    brand-safety corpus whose Hate Speech / Obscenity vocabularies are
    drawn from corpus 1's positive vocabulary (the other classes mix fresh
    tokens with corpus 1's safe vocabulary, so they read as safe-ish to a
    corpus-1 model). Returns the config path.
    """
    from modharness.synth import write_binary_jsonl, write_garm_jsonl

    data_dir = root / "data"
    data_dir.mkdir(parents=True, exist_ok=True)
    vocabs = {}
    for i in (1, 2, 3):
        pos, neg = token_vocab(f"s{i}pos"), token_vocab(f"s{i}neg")
        vocabs[f"syn{i}"] = (pos, neg)
        write_binary_jsonl(binary_corpus(f"syn{i}", n, pos, neg, seed=seed + i), data_dir / f"syn{i}.jsonl")
    s1pos, s1neg = vocabs["syn1"]
    class_vocabs = {
        "Hate Speech": s1pos[:30],
        "Obscenity": s1pos[30:],
        "Crime": token_vocab("crfar", 30) + s1neg[:30],
        "Spam": token_vocab("spfar", 30) + s1neg[30:],
        "Arms": token_vocab("arfar", 30) + s1neg[:30],
        "Terrorism": token_vocab("tefar", 30) + s1neg[30:],
    }
    write_garm_jsonl(garm_corpus("synbs", n, class_vocabs, s1neg, seed=seed + 9), data_dir / "synbs.jsonl")

    toxicity_entry = (
        "    format: jsonl\n"
        "    label_kind: toxic_binary\n"
        "    columns: {id: id, text: text, label: label}\n"
        "    holdout_test: true\n"
    )
    config_text = (
        f"seed: {seed}\n"
        "output_dir: out\n"
        "garm:\n"
        f"  vocabulary: [{', '.join(GARM_VOCAB)}]\n"
        "  subset_classes: [Hate Speech, Obscenity]\n"
        "datasets:\n"
        + "".join(
            f"  syn{i}:\n{toxicity_entry}    paths: {{full: data/syn{i}.jsonl}}\n" for i in (1, 2, 3)
        )
        + "  synbs:\n"
        "    format: jsonl\n"
        "    label_kind: garm\n"
        "    columns: {id: id, text: text, classes: classes}\n"
        "    test_only: true\n"
        "    derive_subset: true\n"
        "    paths: {test: data/synbs.jsonl}\n"
        "train:\n"
        "  backbone: tiny\n"
        f"  epochs: {epochs}\n"
        "  per_device_batch: 16\n"
        f"  restarts: {restarts}\n"
        "conditions:\n"
        "  - {name: syn1_only, datasets: [syn1], strategy: combined}\n"
        "  - {name: syn2_only, datasets: [syn2], strategy: combined}\n"
        "  - {name: syn3_only, datasets: [syn3], strategy: combined}\n"
        "  - {name: comb_combined, datasets: [syn1, syn2, syn3], strategy: combined}\n"
        "  - {name: comb_by_label, datasets: [syn1, syn2, syn3], strategy: by_label}\n"
        "  - {name: comb_by_dataset, datasets: [syn1, syn2, syn3], strategy: by_dataset}\n"
        "  - {name: comb_both, datasets: [syn1, syn2, syn3], strategy: both}\n"
        "test_sets: [syn1, syn2, syn3, synbs, synbs_subset]\n"
        "embedding:\n"
        "  per_dataset: 60\n"
        "  layer: 4\n"
    )
    config_path = root / "config.yaml"
    config_path.write_text(config_text)
    return config_path
