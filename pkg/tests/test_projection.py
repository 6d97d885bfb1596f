from __future__ import annotations

import numpy as np
import pytest

from modharness.backbones import TinyBackbone
from modharness.errors import DataError
from modharness.projection import (
    attach_coords,
    extract_embeddings,
    fit_pca_2d,
    project,
    sample_per_dataset,
    write_embeddings_csv,
)
from conftest import make_records
from oracles import align_signs, oracle_pca_2d


# -- sampling -------------------------------------------------------------------


def test_sample_200_per_dataset_six_datasets():
    records = []
    for i in range(6):
        records.extend(make_records(400, dataset=f"d{i}", seed=i))
    sampled = sample_per_dataset(records, k=200, seed=1)
    assert len(sampled) == 1200
    per_dataset = {f"d{i}": sum(1 for r in sampled if r.dataset == f"d{i}") for i in range(6)}
    assert set(per_dataset.values()) == {200}


def test_small_dataset_clamped_with_warning():
    records = make_records(150, dataset="small") + make_records(300, dataset="big")
    with pytest.warns(UserWarning, match="small"):
        sampled = sample_per_dataset(records, k=200, seed=0)
    assert sum(1 for r in sampled if r.dataset == "small") == 150
    assert sum(1 for r in sampled if r.dataset == "big") == 200


def test_sampling_deterministic_per_seed():
    records = make_records(500, dataset="d")
    first = sample_per_dataset(records, k=100, seed=5)
    second = sample_per_dataset(records, k=100, seed=5)
    assert [r.record_id for r in first] == [r.record_id for r in second]
    different = sample_per_dataset(records, k=100, seed=6)
    assert [r.record_id for r in first] != [r.record_id for r in different]


def test_sampling_rejects_empty_corpus():
    with pytest.raises(DataError):
        sample_per_dataset([], k=10, seed=0)


# -- embedding extraction ----------------------------------------------------------


def test_extract_embeddings_shapes_and_ids():
    backbone = TinyBackbone(hidden_size=32)
    records = make_records(12, dataset="d")
    points = extract_embeddings(backbone, records, layer=4)
    assert len(points) == 12
    assert all(p.vector.shape == (32,) for p in points)
    assert [p.record_id for p in points] == [r.record_id for r in records]
    assert all(np.isfinite(p.vector).all() for p in points)


def test_extract_layer_out_of_range():
    backbone = TinyBackbone(num_layers=6)
    with pytest.raises(ValueError):
        extract_embeddings(backbone, make_records(3), layer=9)


# -- pca ------------------------------------------------------------------------------


def _planted_rank2(n=300, d=10, noise=1e-6, seed=0):
    rng = np.random.default_rng(seed)
    basis = np.linalg.qr(rng.standard_normal((d, 2)))[0].T  # (2, d)
    coords = rng.standard_normal((n, 2)) * np.array([3.0, 1.5])
    return coords @ basis + rng.standard_normal((n, d)) * noise + rng.standard_normal(d)


def test_planted_plane_recovered():
    x = _planted_rank2()
    model = fit_pca_2d(x)
    assert model.explained_variance_ratio.sum() >= 0.999


def test_components_orthonormal_and_ordered():
    x = _planted_rank2(noise=0.05)
    model = fit_pca_2d(x)
    assert abs(np.linalg.norm(model.components[0]) - 1.0) < 1e-8
    assert abs(np.linalg.norm(model.components[1]) - 1.0) < 1e-8
    assert abs(model.components[0] @ model.components[1]) < 1e-8
    assert model.explained_variance[0] >= model.explained_variance[1]


def test_isotropic_data_explains_one_over_d():
    rng = np.random.default_rng(3)
    x = rng.standard_normal((20000, 8))
    model = fit_pca_2d(x)
    for ratio in model.explained_variance_ratio:
        assert ratio == pytest.approx(1 / 8, abs=0.02)


def test_mean_projects_to_origin():
    x = _planted_rank2()
    model = fit_pca_2d(x)
    coords = project(model, x.mean(axis=0))
    assert np.max(np.abs(coords)) < 1e-8


def test_matches_eigendecomposition_oracle():
    rng = np.random.default_rng(11)
    for _ in range(10):
        x = rng.standard_normal((20, 5))
        model = fit_pca_2d(x)
        _, reference_components, reference_variance, reference_coords = oracle_pca_2d(x)
        aligned = align_signs(model.components, reference_components)
        assert np.max(np.abs(aligned - model.components)) < 1e-6
        assert np.max(np.abs(model.explained_variance - reference_variance)) < 1e-6
        coords = project(model, x)
        aligned_coords = reference_coords * np.sign(
            np.sum(reference_components * model.components, axis=1)
        )
        assert np.max(np.abs(coords - aligned_coords)) < 1e-6


def test_collinear_input_rejected_by_name():
    direction = np.array([1.0, 2.0, 3.0])
    x = np.outer(np.arange(10), direction)
    with pytest.raises(ValueError, match="collinear"):
        fit_pca_2d(x)


def test_minimum_input_requirements():
    with pytest.raises(ValueError):
        fit_pca_2d(np.zeros((2, 5)))
    with pytest.raises(ValueError):
        fit_pca_2d(np.zeros((5, 1)))


def test_sign_convention_first_nonzero_positive():
    x = _planted_rank2(seed=4)
    model = fit_pca_2d(x)
    for component in model.components:
        first = component[np.flatnonzero(np.abs(component) > 1e-12)[0]]
        assert first > 0


def test_translation_invariance_of_pairwise_distances():
    x = _planted_rank2(n=50, seed=7)
    shifted = x + 13.7
    coords_a = project(fit_pca_2d(x), x)
    coords_b = project(fit_pca_2d(shifted), shifted)
    def pairwise(c):
        return np.linalg.norm(c[:, None, :] - c[None, :, :], axis=-1)
    assert np.max(np.abs(pairwise(coords_a) - pairwise(coords_b))) < 1e-8


def test_attach_and_write_csv(tmp_path):
    backbone = TinyBackbone(hidden_size=16)
    records = make_records(20, dataset="d")
    points = extract_embeddings(backbone, records, layer=2)
    model = fit_pca_2d(np.stack([p.vector for p in points]))
    points = attach_coords(points, model)
    assert all(p.coords2d is not None for p in points)
    path = tmp_path / "embeddings.csv"
    write_embeddings_csv(points, path, extra_comment="config_hash=test")
    lines = path.read_text().splitlines()
    assert lines[0] == "# config_hash=test"
    assert lines[1] == "record_id,dataset,x,y"
    assert len(lines) == 2 + 20
