"""Fine-tuning protocol: deterministic sampling streams, restarts, prediction.

A training run consumes exactly epochs x |train| instances drawn from the
strategy's weight table (one seeded stream per epoch). Restarts rerun the
same data splits with seeds seed+0 .. seed+restarts-1, so restart variation
comes from head initialization and sampling order only.
"""

from __future__ import annotations

import json
import time
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path
from typing import Sequence

import numpy as np

from .backbones import TextClassifier, create_backbone, load_backbone
from .errors import TrainingError
from .evaluation import F1Result, f1_score
from .records import NEGATIVE, POSITIVE, TextRecord
from .sampling import COMBINED, STRATEGIES, compute_weights, sample_epoch
from .seeding import derive_seed


@dataclass(frozen=True)
class TrainConfig:
    """Fine-tuning protocol parameters.

    Learning rate, weight decay, and warmup default to the backbone
    framework's published values (None here); the resolved numbers are
    recorded in every checkpoint's config snapshot.
    """

    epochs: int = 3
    per_device_batch: int = 16
    restarts: int = 3
    seed: int = 0
    max_sequence_length: int = 512
    backbone: str = "tiny"
    strategy: str = COMBINED
    learning_rate: float | None = None
    weight_decay: float | None = None
    warmup_steps: int | None = None

    def __post_init__(self) -> None:
        if self.epochs < 1:
            raise ValueError(f"epochs must be >= 1, got {self.epochs}")
        if self.restarts < 1:
            raise ValueError(f"restarts must be >= 1, got {self.restarts}")
        if self.per_device_batch < 1:
            raise ValueError(f"per_device_batch must be >= 1, got {self.per_device_batch}")
        if self.max_sequence_length < 1:
            raise ValueError(f"max_sequence_length must be >= 1, got {self.max_sequence_length}")
        if self.strategy not in STRATEGIES:
            raise ValueError(f"strategy must be one of {STRATEGIES}, got {self.strategy!r}")

    def to_json(self) -> dict:
        return asdict(self)

    @staticmethod
    def from_json(obj: dict) -> "TrainConfig":
        return TrainConfig(**obj)


@dataclass(frozen=True)
class Prediction:
    record_id: str
    probability: float
    label: str
    truncated: bool = False


@dataclass
class TrainedModel:
    """Handle for one fine-tuned classifier plus its training metadata."""

    backbone: TextClassifier
    config: TrainConfig
    seed: int
    wall_time: float
    validation_f1: F1Result | None
    resolved_hyperparams: dict

    def predict(self, records: Sequence[TextRecord]) -> list[Prediction]:
        return predict(self, records)


@dataclass
class TrainedModelBundle:
    """All restarts of one training condition (exactly config.restarts)."""

    models: list[TrainedModel] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.models)


def _check_fit_inputs(train: Sequence[TextRecord]) -> None:
    if not train:
        raise TrainingError("training corpus is empty")
    for record in train:
        if record.binary_label is None:
            raise TrainingError(f"training record {record.record_id!r} is not binarized")


def fine_tune(
    train: Sequence[TextRecord],
    validation: Sequence[TextRecord],
    config: TrainConfig,
    backbone: TextClassifier | None = None,
) -> TrainedModel:
    """One fine-tuning run over the configured sampling stream.

    The per-epoch index sequences are drawn up front from the strategy's
    weight table (epoch length = |train|), so the records the backbone
    consumes are exactly reproducible from (seed, strategy, corpus).
    """
    _check_fit_inputs(train)
    weights = compute_weights(train, config.strategy)
    epoch_indices = [
        sample_epoch(weights, len(train), seed=derive_seed(config.seed, "epoch", epoch))
        for epoch in range(config.epochs)
    ]
    if backbone is None:
        backbone = create_backbone(config.backbone, config.max_sequence_length)
    started = time.perf_counter()
    backbone.fit(train, validation, config, epoch_indices)
    wall_time = time.perf_counter() - started

    validation_f1 = None
    if validation:
        probabilities = backbone.predict_proba([r.text for r in validation])
        predicted = [POSITIVE if p >= 0.5 else NEGATIVE for p in probabilities]
        validation_f1 = f1_score(predicted, [r.binary_label for r in validation])
    return TrainedModel(
        backbone=backbone,
        config=config,
        seed=config.seed,
        wall_time=wall_time,
        validation_f1=validation_f1,
        resolved_hyperparams=backbone.resolved_hyperparams(config),
    )


def run_restarts(
    train: Sequence[TextRecord],
    validation: Sequence[TextRecord],
    config: TrainConfig,
) -> TrainedModelBundle:
    """Independent fine-tuning restarts over identical data splits."""
    bundle = TrainedModelBundle()
    for restart in range(config.restarts):
        restart_config = replace(config, seed=config.seed + restart)
        bundle.models.append(fine_tune(train, validation, restart_config))
    return bundle


def predict(model: TrainedModel, records: Sequence[TextRecord]) -> list[Prediction]:
    """Order-preserving batch inference; probability >= 0.5 labels positive.

    Over-length texts are truncated silently and flagged, never rejected.
    """
    if not records:
        return []
    texts = [r.text for r in records]
    probabilities = model.backbone.predict_proba(texts)
    truncated = model.backbone.truncation_flags(texts)
    return [
        Prediction(
            record_id=record.record_id,
            probability=float(p),
            label=POSITIVE if p >= 0.5 else NEGATIVE,
            truncated=flag,
        )
        for record, p, flag in zip(records, probabilities, truncated)
    ]


# -- checkpoint layout: <dir>/restart-<k>/{model/, config.json, metrics.json}


def save_bundle(bundle: TrainedModelBundle, directory: str | Path, extra_meta: dict | None = None) -> None:
    directory = Path(directory)
    for index, model in enumerate(bundle.models):
        restart_dir = directory / f"restart-{index}"
        model.backbone.save(restart_dir / "model")
        snapshot = {
            "train_config": model.config.to_json(),
            "resolved_hyperparams": model.resolved_hyperparams,
        }
        if extra_meta:
            snapshot.update(extra_meta)
        (restart_dir / "config.json").write_text(json.dumps(snapshot, indent=2))
        metrics = {
            "seed": model.seed,
            "strategy": model.config.strategy,
            "wall_time_seconds": model.wall_time,
            "validation_f1": model.validation_f1.f1 if model.validation_f1 else None,
            "validation_precision": model.validation_f1.precision if model.validation_f1 else None,
            "validation_recall": model.validation_f1.recall if model.validation_f1 else None,
        }
        (restart_dir / "metrics.json").write_text(json.dumps(metrics, indent=2))


def load_bundle(directory: str | Path) -> TrainedModelBundle:
    directory = Path(directory)
    restart_dirs = sorted(directory.glob("restart-*"), key=lambda p: int(p.name.split("-")[1]))
    if not restart_dirs:
        raise TrainingError(f"no restart checkpoints under {directory}")
    bundle = TrainedModelBundle()
    for restart_dir in restart_dirs:
        snapshot = json.loads((restart_dir / "config.json").read_text())
        metrics = json.loads((restart_dir / "metrics.json").read_text())
        config = TrainConfig.from_json(snapshot["train_config"])
        backbone = load_backbone(restart_dir / "model")
        bundle.models.append(
            TrainedModel(
                backbone=backbone,
                config=config,
                seed=metrics["seed"],
                wall_time=metrics["wall_time_seconds"],
                validation_f1=None,
                resolved_hyperparams=snapshot["resolved_hyperparams"],
            )
        )
    return bundle
