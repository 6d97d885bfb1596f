"""Project per-dataset embedding samples to 2D and write plot-ready data.

Samples a fixed number of records per dataset, embeds each text as the
mean of its token vectors at one backbone layer, fits a shared 2D PCA,
and writes embeddings.csv + pca_meta.json (plus a scatter image when
matplotlib is installed). Run with `python demos/04_embeddings_pca.py`.
"""

from pathlib import Path

import numpy as np

from modharness import extract_embeddings, fit_pca_2d, sample_per_dataset
from modharness.backbones import TinyBackbone
from modharness.projection import attach_coords, write_embeddings_csv, write_pca_meta
from modharness.synth import binary_corpus, token_vocab

OUT = Path(__file__).parent / "out" / "04"
OUT.mkdir(parents=True, exist_ok=True)

records = []
for name in ("news", "forums", "chat", "reviews"):
    records += binary_corpus(name, 400, token_vocab(name + "p"), token_vocab(name + "n"), seed=11)

sample = sample_per_dataset(records, k=200, seed=5)
print(f"sampled {len(sample)} records from {len(set(r.dataset for r in sample))} datasets")

backbone = TinyBackbone()  # pre-trained view: frozen token table, no fitting
points = extract_embeddings(backbone, sample, layer=4)
pca = fit_pca_2d(np.stack([p.vector for p in points]))
points = attach_coords(points, pca)
print("explained variance ratio:", np.round(pca.explained_variance_ratio, 4))

write_embeddings_csv(points, OUT / "embeddings.csv")
write_pca_meta(pca, OUT / "pca_meta.json")
print(f"wrote {OUT / 'embeddings.csv'}")

try:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt
except ImportError:
    print("matplotlib not installed; skipping the scatter image")
else:
    figure, axes = plt.subplots(figsize=(7, 5))
    for dataset in sorted({p.dataset for p in points}):
        xs = [p.coords2d[0] for p in points if p.dataset == dataset]
        ys = [p.coords2d[1] for p in points if p.dataset == dataset]
        axes.scatter(xs, ys, s=8, alpha=0.6, label=dataset)
    axes.legend()
    figure.tight_layout()
    figure.savefig(OUT / "scatter.png", dpi=150)
    print(f"wrote {OUT / 'scatter.png'}")
