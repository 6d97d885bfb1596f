"""Desk-scale reproduction of the cross-dataset experiment grid.

Three disjoint-vocabulary toxicity corpora and one brand-safety corpus are
trained under all seven conditions (three single-dataset models plus the
combined corpus under four sampling strategies) with three restarts each,
then every model is scored on every test set. Because the vocabularies are
disjoint, models must score best on their own test set — visible on the
matrix diagonal. Run with `python demos/03_train_and_cross_matrix.py`.
"""

from dataclasses import replace
from pathlib import Path

from modharness import (
    TrainConfig,
    binarize_all,
    concat_corpora,
    cross_matrix,
    extract_private_subset,
    run_restarts,
)
from modharness.records import TEST
from modharness.synth import binary_corpus, garm_corpus, token_vocab

OUT = Path(__file__).parent / "out" / "03"
OUT.mkdir(parents=True, exist_ok=True)

# ── corpora: pairwise-disjoint vocabularies; the brand-safety set shares ─────
#    its Hate Speech / Obscenity vocabulary with corpus a

train_sets, test_sets = {}, {}
vocabs = {}
for name in ("a", "b", "c"):
    pos, neg = token_vocab(name + "pos"), token_vocab(name + "neg")
    vocabs[name] = (pos, neg)
    train_sets[name] = binarize_all(binary_corpus(name, 400, pos, neg, seed=1))
    test_sets[name] = binarize_all(
        binary_corpus(name + "_test", 120, pos, neg, seed=2, split=TEST)
    )

apos, aneg = vocabs["a"]
brand_safety = binarize_all(
    garm_corpus(
        "bs",
        400,
        class_vocabs={
            "Hate Speech": apos[:30],
            "Obscenity": apos[30:],
            "Crime": token_vocab("crime", 30) + aneg[:30],
            "Spam": token_vocab("spam", 30) + aneg[30:],
        },
        negative_vocab=aneg,
        seed=3,
    )
)
test_sets["bs"] = brand_safety
test_sets["bs_subset"] = extract_private_subset(brand_safety, subset_id="bs_subset")

# ── seven training conditions, three restarts each ───────────────────────────

base = TrainConfig(backbone="tiny", epochs=3, restarts=3, seed=7)
combined = concat_corpora([train_sets["a"], train_sets["b"], train_sets["c"]])
bundles = {}
for name in ("a", "b", "c"):
    bundles[f"{name}_only"] = run_restarts(train_sets[name], [], base)
for strategy in ("combined", "by_label", "by_dataset", "both"):
    bundles[f"comb_{strategy}"] = run_restarts(combined, [], replace(base, strategy=strategy))

report = cross_matrix(bundles, test_sets)
markdown = report.to_markdown()
print(markdown)
(OUT / "cross_matrix.md").write_text(markdown)
(OUT / "cross_matrix.csv").write_text(report.to_csv())
print(f"wrote {OUT / 'cross_matrix.csv'}")

for name in ("a", "b", "c"):
    own = report.cells[(name, f"{name}_only")].mean_f1
    others = [report.cells[(name, f"{o}_only")].mean_f1 for o in "abc" if o != name]
    print(f"test {name}: own model {own:.3f} vs transfer best {max(others):.3f}")
