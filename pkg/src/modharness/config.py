"""Declarative run configuration.

One YAML/JSON file describes the whole experiment: dataset schemas and
paths, split fractions, the binarization rule table, training conditions,
test sets, and embedding settings. Stages are content-addressed by hashes
over the config fields they depend on, so re-running an identical config
overwrites nothing and completed stages are skipped.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Sequence

import yaml

from .errors import ConfigError
from .harness import TrainConfig
from .ingest import DatasetDescriptor, SplitSpec, builtin_descriptors
from .labels import DEFAULT_GARM_VOCABULARY, SUBSET_CLASSES, BinarizationRule, default_rules, rules_from_json
from .records import GARM, LABEL_KINDS
from .sampling import STRATEGIES


@dataclass(frozen=True)
class PathEntry:
    path: Path
    column_overrides: tuple[tuple[str, str], ...] = ()


@dataclass(frozen=True)
class DatasetEntry:
    descriptor: DatasetDescriptor
    paths: tuple[tuple[str, PathEntry], ...]  # keys: full | train | test
    holdout_test: bool = False  # carve a test split from the single file (90-10 style)
    derive_subset: bool = False  # garm only: derive the near-domain subset corpus

    def path_map(self) -> dict[str, PathEntry]:
        return dict(self.paths)


@dataclass(frozen=True)
class ConditionSpec:
    name: str
    datasets: tuple[str, ...]
    strategy: str


@dataclass(frozen=True)
class EmbeddingSpec:
    datasets: tuple[str, ...] | None = None  # None -> every non-derived ingested dataset
    per_dataset: int = 200
    layer: int = 4
    use_finetuned: str | None = None  # condition name; None -> raw pre-trained backbone


def subset_id_for(dataset: str) -> str:
    return f"{dataset}_subset"


@dataclass
class RunConfig:
    seed: int
    output_dir: Path
    split: SplitSpec
    garm_vocabulary: tuple[str, ...]
    subset_classes: tuple[str, ...]
    datasets: dict[str, DatasetEntry]
    rules: dict[str, BinarizationRule]
    train: TrainConfig
    conditions: list[ConditionSpec]
    test_sets: list[str]
    embedding: EmbeddingSpec
    resolved: dict = field(default_factory=dict)  # canonical dict for hashing

    # -- hashing / content addressing ---------------------------------------

    def _hash(self, payload: object) -> str:
        data = json.dumps(payload, sort_keys=True, default=str).encode("utf-8")
        return hashlib.sha256(data).hexdigest()

    def config_hash(self) -> str:
        return self._hash(self.resolved)

    def ingest_hash(self) -> str:
        keys = ("seed", "split", "garm", "rules", "datasets")
        return self._hash({k: self.resolved.get(k) for k in keys})

    def condition_hash(self, condition: ConditionSpec) -> str:
        return self._hash(
            {
                "ingest": self.ingest_hash(),
                "train": self.resolved.get("train"),
                "seed": self.seed,
                "condition": {"name": condition.name, "datasets": list(condition.datasets), "strategy": condition.strategy},
            }
        )

    def report_hash(self, conditions: Sequence[ConditionSpec] | None = None) -> str:
        selected = self.conditions if conditions is None else list(conditions)
        return self._hash(
            {
                "conditions": {c.name: self.condition_hash(c) for c in selected},
                "test_sets": self.test_sets,
            }
        )

    def embed_hash(self) -> str:
        return self._hash(
            {
                "ingest": self.ingest_hash(),
                "embedding": self.resolved.get("embedding"),
                "backbone": self.train.backbone,
            }
        )

    # -- stage directories ---------------------------------------------------

    def corpora_dir(self) -> Path:
        return self.output_dir / "corpora" / self.ingest_hash()[:12]

    def condition_dir(self, condition: ConditionSpec) -> Path:
        return self.output_dir / "runs" / f"{self.condition_hash(condition)[:12]}-{condition.name}"

    def reports_dir(self, conditions: Sequence[ConditionSpec] | None = None) -> Path:
        return self.output_dir / "reports" / self.report_hash(conditions)[:12]

    def embeddings_dir(self) -> Path:
        return self.output_dir / "embeddings" / self.embed_hash()[:12]

    def select_conditions(self, names: Sequence[str] | None) -> list[ConditionSpec]:
        if names is None:
            return list(self.conditions)
        by_name = {c.name: c for c in self.conditions}
        missing = [n for n in names if n not in by_name]
        if missing:
            raise ConfigError(f"unknown condition(s) {missing}; configured: {sorted(by_name)}")
        return [by_name[n] for n in names]


def _as_mapping(obj, what: str) -> Mapping:
    if not isinstance(obj, Mapping):
        raise ConfigError(f"{what} must be a mapping, got {type(obj).__name__}")
    return obj


def _build_descriptor(dataset_id: str, spec: Mapping) -> DatasetDescriptor:
    builtin = builtin_descriptors().get(dataset_id)
    if builtin is None and "label_kind" not in spec:
        raise ConfigError(f"dataset {dataset_id!r} is not builtin; its entry must declare label_kind and columns")

    file_format = spec.get("format", builtin.file_format if builtin else "delimited")
    label_kind = spec.get("label_kind", builtin.label_kind if builtin else None)
    if label_kind not in LABEL_KINDS:
        raise ConfigError(f"dataset {dataset_id!r}: unknown label_kind {label_kind!r}")
    delimiter = spec.get("delimiter", builtin.delimiter if builtin else ",")

    if "columns" in spec:
        columns = tuple((str(role), str(column)) for role, column in _as_mapping(spec["columns"], "columns").items())
    elif builtin:
        columns = builtin.columns
    else:
        raise ConfigError(f"dataset {dataset_id!r}: columns are required")

    if "label_values" in spec:
        label_values = tuple((str(k), str(v)) for k, v in _as_mapping(spec["label_values"], "label_values").items())
    else:
        label_values = builtin.label_values if builtin else ()

    try:
        return DatasetDescriptor(
            id=dataset_id,
            file_format=file_format,
            label_kind=label_kind,
            columns=columns,
            delimiter=delimiter,
            label_values=label_values,
            has_predefined_test=bool(spec.get("predefined_test", builtin.has_predefined_test if builtin else False)),
            test_only=bool(spec.get("test_only", builtin.test_only if builtin else False)),
        )
    except ValueError as exc:
        raise ConfigError(f"dataset {dataset_id!r}: {exc}") from exc


def _build_paths(dataset_id: str, spec: Mapping, base_dir: Path) -> tuple[tuple[str, PathEntry], ...]:
    paths_obj = _as_mapping(spec.get("paths", {}), f"dataset {dataset_id!r} paths")
    entries = []
    for key, value in paths_obj.items():
        if key not in ("full", "train", "test"):
            raise ConfigError(f"dataset {dataset_id!r}: path key must be full/train/test, got {key!r}")
        if isinstance(value, Mapping):
            path = Path(str(value["path"]))
            overrides = tuple(
                (str(role), str(column))
                for role, column in _as_mapping(value.get("columns", {}), "column overrides").items()
            )
        else:
            path = Path(str(value))
            overrides = ()
        if not path.is_absolute():
            path = base_dir / path
        entries.append((key, PathEntry(path=path, column_overrides=overrides)))
    if not entries:
        raise ConfigError(f"dataset {dataset_id!r}: at least one path is required")
    keys = [k for k, _ in entries]
    if "full" in keys and len(keys) > 1:
        raise ConfigError(f"dataset {dataset_id!r}: 'full' cannot be combined with train/test paths")
    return tuple(entries)


def load_config(path: str | Path, overrides: Mapping | None = None) -> RunConfig:
    """Parse and validate a run configuration file.

    ``overrides`` (from CLI flags) replace top-level fields before
    validation: seed, output_dir, strategy (applied to every condition),
    and conditions (a name filter is applied later, not here).
    """
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file not found: {path}")
    text = path.read_text(encoding="utf-8")
    raw = yaml.safe_load(text) if path.suffix in (".yaml", ".yml") else json.loads(text)
    raw = _as_mapping(raw, "config root")
    raw = dict(raw)
    overrides = overrides or {}
    if overrides.get("seed") is not None:
        raw["seed"] = int(overrides["seed"])
    if overrides.get("output_dir") is not None:
        raw["output_dir"] = str(overrides["output_dir"])
    if overrides.get("strategy") is not None:
        for condition in raw.get("conditions", []):
            condition["strategy"] = overrides["strategy"]

    base_dir = path.parent
    seed = int(raw.get("seed", 0))
    output_dir = Path(str(raw.get("output_dir", "out")))
    if not output_dir.is_absolute():
        output_dir = base_dir / output_dir

    split_obj = _as_mapping(raw.get("split", {}), "split")
    try:
        split = SplitSpec(
            validation_fraction=float(split_obj.get("validation_fraction", 0.10)),
            holdout_test_fraction=float(split_obj.get("holdout_test_fraction", 0.10)),
            seed=seed,
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc

    garm_obj = _as_mapping(raw.get("garm", {}), "garm")
    garm_vocabulary = tuple(garm_obj.get("vocabulary", DEFAULT_GARM_VOCABULARY))
    subset_classes = tuple(garm_obj.get("subset_classes", SUBSET_CLASSES))
    if len(set(garm_vocabulary)) != len(garm_vocabulary):
        raise ConfigError("garm vocabulary names must be unique")
    unknown_subset = [c for c in subset_classes if c not in garm_vocabulary]
    if unknown_subset:
        raise ConfigError(f"subset_classes {unknown_subset} are not in the garm vocabulary")

    datasets: dict[str, DatasetEntry] = {}
    for dataset_id, spec in _as_mapping(raw.get("datasets", {}), "datasets").items():
        spec = _as_mapping(spec, f"dataset {dataset_id!r}")
        descriptor = _build_descriptor(str(dataset_id), spec)
        entry = DatasetEntry(
            descriptor=descriptor,
            paths=_build_paths(str(dataset_id), spec, base_dir),
            holdout_test=bool(spec.get("holdout_test", False)),
            derive_subset=bool(spec.get("derive_subset", False)),
        )
        if entry.derive_subset and descriptor.label_kind != GARM:
            raise ConfigError(f"dataset {dataset_id!r}: derive_subset needs garm labels")
        if entry.holdout_test and (descriptor.test_only or descriptor.has_predefined_test):
            raise ConfigError(f"dataset {dataset_id!r}: holdout_test conflicts with predefined/test-only splits")
        datasets[str(dataset_id)] = entry
    if not datasets:
        raise ConfigError("no datasets configured")

    rules = rules_from_json(_as_mapping(raw.get("rules", {}), "rules")) if raw.get("rules") else default_rules()

    train_obj = _as_mapping(raw.get("train", {}), "train")
    try:
        train = TrainConfig(
            epochs=int(train_obj.get("epochs", 3)),
            per_device_batch=int(train_obj.get("per_device_batch", 16)),
            restarts=int(train_obj.get("restarts", 3)),
            seed=seed,
            max_sequence_length=int(train_obj.get("max_sequence_length", 512)),
            backbone=str(train_obj.get("backbone", "tiny")),
            learning_rate=train_obj.get("learning_rate"),
            weight_decay=train_obj.get("weight_decay"),
            warmup_steps=train_obj.get("warmup_steps"),
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc

    derived_ids = {subset_id_for(d) for d, entry in datasets.items() if entry.derive_subset}

    conditions: list[ConditionSpec] = []
    for obj in raw.get("conditions", []):
        obj = _as_mapping(obj, "condition")
        name = str(obj.get("name", ""))
        if not name:
            raise ConfigError("every condition needs a name")
        strategy = str(obj.get("strategy", "combined"))
        if strategy not in STRATEGIES:
            raise ConfigError(f"condition {name!r}: unknown strategy {strategy!r} (choose from {STRATEGIES})")
        members = tuple(str(d) for d in obj.get("datasets", []))
        if not members:
            raise ConfigError(f"condition {name!r}: needs at least one dataset")
        for dataset_id in members:
            if dataset_id not in datasets:
                raise ConfigError(f"condition {name!r}: dataset {dataset_id!r} is not registered")
            if datasets[dataset_id].descriptor.test_only:
                raise ConfigError(f"condition {name!r}: dataset {dataset_id!r} is test-only and cannot be trained on")
        conditions.append(ConditionSpec(name=name, datasets=members, strategy=strategy))
    names = [c.name for c in conditions]
    if len(set(names)) != len(names):
        raise ConfigError(f"condition names must be unique, got {names}")

    test_sets = [str(t) for t in raw.get("test_sets", [])]
    for test_set in test_sets:
        if test_set not in datasets and test_set not in derived_ids:
            raise ConfigError(f"test set {test_set!r} is neither a registered dataset nor a derived subset")

    embed_obj = _as_mapping(raw.get("embedding", {}), "embedding")
    embed_datasets = embed_obj.get("datasets")
    embedding = EmbeddingSpec(
        datasets=tuple(str(d) for d in embed_datasets) if embed_datasets else None,
        per_dataset=int(embed_obj.get("per_dataset", 200)),
        layer=int(embed_obj.get("layer", 4)),
        use_finetuned=embed_obj.get("use_finetuned"),
    )
    if embedding.use_finetuned is not None and embedding.use_finetuned not in {c.name for c in conditions}:
        raise ConfigError(f"embedding.use_finetuned names unknown condition {embedding.use_finetuned!r}")
    if embedding.datasets:
        for dataset_id in embedding.datasets:
            if dataset_id not in datasets:
                raise ConfigError(f"embedding dataset {dataset_id!r} is not registered")

    resolved = {
        "seed": seed,
        "split": {"validation_fraction": split.validation_fraction, "holdout_test_fraction": split.holdout_test_fraction},
        "garm": {"vocabulary": list(garm_vocabulary), "subset_classes": list(subset_classes)},
        "rules": {kind: rule.to_json() for kind, rule in sorted(rules.items())},
        "datasets": {
            dataset_id: {
                "descriptor": {
                    "format": entry.descriptor.file_format,
                    "label_kind": entry.descriptor.label_kind,
                    "columns": dict(entry.descriptor.columns),
                    "delimiter": entry.descriptor.delimiter,
                    "label_values": dict(entry.descriptor.label_values),
                    "predefined_test": entry.descriptor.has_predefined_test,
                    "test_only": entry.descriptor.test_only,
                },
                "paths": {
                    key: {"path": str(p.path), "columns": dict(p.column_overrides)} for key, p in entry.paths
                },
                "holdout_test": entry.holdout_test,
                "derive_subset": entry.derive_subset,
            }
            for dataset_id, entry in sorted(datasets.items())
        },
        "train": train.to_json(),
        "conditions": [
            {"name": c.name, "datasets": list(c.datasets), "strategy": c.strategy} for c in conditions
        ],
        "test_sets": test_sets,
        "embedding": {
            "datasets": list(embedding.datasets) if embedding.datasets else None,
            "per_dataset": embedding.per_dataset,
            "layer": embedding.layer,
            "use_finetuned": embedding.use_finetuned,
        },
    }

    return RunConfig(
        seed=seed,
        output_dir=output_dir,
        split=split,
        garm_vocabulary=garm_vocabulary,
        subset_classes=subset_classes,
        datasets=datasets,
        rules=rules,
        train=train,
        conditions=conditions,
        test_sets=test_sets,
        embedding=embedding,
        resolved=resolved,
    )
