"""Per-dataset sampling, mean-token embeddings, and 2D PCA projection.

Produces plot-ready data: a fixed-size uniform sample per dataset is
embedded as the arithmetic mean of its token vectors at one transformer
layer, then the pooled points are projected onto the top-2 principal
components fit jointly across datasets.
"""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Sequence

import numpy as np

from .backbones import TextClassifier
from .errors import DataError
from .records import TextRecord
from .seeding import derive_seed

SIGN_TOL = 1e-12
RANK_TOL = 1e-12


@dataclass
class EmbeddingPoint:
    record_id: str
    dataset: str
    vector: np.ndarray
    coords2d: tuple[float, float] | None = None


@dataclass(frozen=True)
class PcaModel:
    """Top-2 principal axes of the pooled embedding sample.

    Components are unit-norm, mutually orthogonal, sign-fixed (first
    nonzero coordinate positive) so outputs are comparable across runs.
    """

    mean: np.ndarray
    components: np.ndarray  # (2, d)
    explained_variance: np.ndarray  # (2,)
    explained_variance_ratio: np.ndarray  # (2,)


def sample_per_dataset(records: Sequence[TextRecord], k: int = 200, seed: int = 0) -> list[TextRecord]:
    """Uniform random sample of k records per dataset, deterministic per seed.

    Datasets smaller than k contribute everything, with a warning.
    """
    if not records:
        raise DataError("cannot sample from an empty corpus")
    by_dataset: dict[str, list[TextRecord]] = {}
    for record in records:
        by_dataset.setdefault(record.dataset, []).append(record)
    sampled: list[TextRecord] = []
    for dataset in sorted(by_dataset):
        members = sorted(by_dataset[dataset], key=lambda r: r.record_id)
        if len(members) < k:
            warnings.warn(f"dataset {dataset!r} has only {len(members)} records (< {k}); taking all")
            sampled.extend(members)
            continue
        rng = np.random.default_rng(derive_seed(seed, dataset, "embed-sample"))
        chosen = rng.choice(len(members), size=k, replace=False)
        sampled.extend(members[i] for i in sorted(chosen))
    return sampled


def extract_embeddings(backbone: TextClassifier, records: Sequence[TextRecord], layer: int = 4) -> list[EmbeddingPoint]:
    """Mean-over-token vectors at the given layer, one point per record."""
    if not records:
        return []
    vectors = backbone.embed([r.text for r in records], layer)
    return [
        EmbeddingPoint(record_id=r.record_id, dataset=r.dataset, vector=np.asarray(v))
        for r, v in zip(records, vectors)
    ]


def _fix_signs(components: np.ndarray) -> np.ndarray:
    fixed = components.copy()
    for i in range(fixed.shape[0]):
        nonzero = np.flatnonzero(np.abs(fixed[i]) > SIGN_TOL)
        if nonzero.size and fixed[i, nonzero[0]] < 0:
            fixed[i] = -fixed[i]
    return fixed


def fit_pca_2d(vectors: np.ndarray) -> PcaModel:
    """Fit the top-2 principal components of the sample covariance.

    Mean-centers, factorizes by SVD, and reports explained variance per
    component. Collinear inputs (rank < 2) are rejected by name.
    """
    x = np.asarray(vectors, dtype=np.float64)
    if x.ndim != 2 or x.shape[0] < 3:
        raise ValueError(f"need at least 3 vectors, got shape {x.shape}")
    if x.shape[1] < 2:
        raise ValueError(f"need dimensionality >= 2, got {x.shape[1]}")
    mean = x.mean(axis=0)
    centered = x - mean
    _, singular, vt = np.linalg.svd(centered, full_matrices=False)
    if singular[0] <= 0 or singular[1] <= RANK_TOL * max(1.0, singular[0]):
        raise ValueError("degenerate input: points are collinear (rank < 2), no 2D projection exists")
    components = _fix_signs(vt[:2])
    n = x.shape[0]
    variances = singular**2 / (n - 1)
    total = variances.sum()
    return PcaModel(
        mean=mean,
        components=components,
        explained_variance=variances[:2],
        explained_variance_ratio=variances[:2] / total,
    )


def project(model: PcaModel, vectors: np.ndarray) -> np.ndarray:
    """(n, 2) coordinates: centered vectors dotted with the components."""
    x = np.asarray(vectors, dtype=np.float64)
    single = x.ndim == 1
    if single:
        x = x[None, :]
    coords = (x - model.mean) @ model.components.T
    return coords[0] if single else coords


def attach_coords(points: Sequence[EmbeddingPoint], model: PcaModel) -> list[EmbeddingPoint]:
    vectors = np.stack([p.vector for p in points])
    coords = project(model, vectors)
    return [replace(p, coords2d=(float(c[0]), float(c[1]))) for p, c in zip(points, coords)]


def write_embeddings_csv(points: Sequence[EmbeddingPoint], path: str | Path, extra_comment: str | None = None) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as handle:
        if extra_comment:
            handle.write(f"# {extra_comment}\n")
        handle.write("record_id,dataset,x,y\n")
        for point in points:
            if point.coords2d is None:
                raise ValueError(f"point {point.record_id!r} has no 2D coordinates; project first")
            handle.write(f"{point.record_id},{point.dataset},{point.coords2d[0]!r},{point.coords2d[1]!r}\n")


def write_pca_meta(model: PcaModel, path: str | Path, extra: dict | None = None) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    meta = {
        "explained_variance": model.explained_variance.tolist(),
        "explained_variance_ratio": model.explained_variance_ratio.tolist(),
        "component_norms": np.linalg.norm(model.components, axis=1).tolist(),
        "component_orthogonality": float(abs(model.components[0] @ model.components[1])),
    }
    if extra:
        meta.update(extra)
    path.write_text(json.dumps(meta, indent=2))
