"""Build two small corpora, unify their labels, and derive the near-domain subset.

Walks the ingestion path end to end on synthetic data: raw files on disk,
descriptor-driven parsing, train/validation/test splitting, binarization,
and the brand-safety subset rule. Run with `python demos/01_corpora_and_labels.py`.
"""

from pathlib import Path

from modharness import (
    SplitSpec,
    binarize_all,
    class_counts,
    extract_private_subset,
    load_dataset,
    split_train_test,
    split_train_val,
)
from modharness.synth import (
    binary_corpus,
    binary_descriptor,
    garm_corpus,
    garm_descriptor,
    token_vocab,
    write_binary_jsonl,
    write_garm_jsonl,
)

OUT = Path(__file__).parent / "out" / "01"
OUT.mkdir(parents=True, exist_ok=True)

# ── 1. write raw dataset files the way a publisher would ship them ──────────

toxicity = binary_corpus("toy_tox", 300, token_vocab("bad"), token_vocab("ok"), seed=1)
write_binary_jsonl(toxicity, OUT / "toy_tox.jsonl")

brand_safety = garm_corpus(
    "toy_bs",
    300,
    class_vocabs={
        "Hate Speech": token_vocab("hate"),
        "Obscenity": token_vocab("obsc"),
        "Crime": token_vocab("crime"),
        "Spam": token_vocab("spam"),
    },
    negative_vocab=token_vocab("fine"),
    seed=2,
)
write_garm_jsonl(brand_safety, OUT / "toy_bs.jsonl")

# ── 2. parse them back through their descriptors ────────────────────────────

tox_records, tox_stats = load_dataset(binary_descriptor("toy_tox"), OUT / "toy_tox.jsonl")
bs_records, bs_stats = load_dataset(garm_descriptor("toy_bs"), OUT / "toy_bs.jsonl")
print(f"loaded {tox_stats.records} toxicity rows ({tox_stats.malformed} malformed, "
      f"{tox_stats.empty_text} empty)")
print(f"loaded {bs_stats.records} brand-safety rows")

# ── 3. splits: carve a 10% test holdout, then 10% of the rest for validation ─

spec = SplitSpec(seed=7)
remaining, test = split_train_test(tox_records, spec)
train, validation = split_train_val(remaining, spec)
print(f"toxicity splits: {len(train)} train / {len(validation)} validation / {len(test)} test")

# ── 4. binarize everything with the default rule table ──────────────────────

train = binarize_all(train)
bs_records = binarize_all(bs_records)
print("first record:", train[0].binary_label, "<-", train[0].raw_label.category)

# ── 5. derive the near-domain subset: safe examples plus examples labeled ───
#       only Hate Speech and/or Obscenity

subset = extract_private_subset(bs_records, subset_id="toy_bs_subset")
print(f"subset: {len(subset)} of {len(bs_records)} records kept")

counts = class_counts(bs_records + subset)
for (dataset, key), value in sorted(counts.items()):
    print(f"  {dataset:12s} {key:14s} {value}")
