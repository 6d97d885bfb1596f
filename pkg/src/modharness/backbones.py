"""Text classifier backbones.

Two implementations of the TextClassifier interface:

* TinyBackbone — a frozen hash-addressed bag-of-token-embeddings feeding a
  single trained linear layer. No vocabulary files, exact bit-level
  determinism, fast enough for desk-scale runs and tests.
* HFTransformerBackbone — a Hugging Face sequence-classification wrapper
  (e.g. distilbert-base-uncased) for full-scale runs. torch/transformers
  are imported lazily; install the ``hf`` extra to use it.

Both expose predict_proba (positive-class probability per text) and
embed(texts, layer) (arithmetic mean of the token vectors at that layer,
special tokens included).
"""

from __future__ import annotations

import json
import os
from abc import ABC, abstractmethod
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from .errors import TrainingError
from .records import POSITIVE, TextRecord
from .seeding import derive_seed

CACHE_ENV = "MODHARNESS_CACHE"

# Hyperparameter defaults recorded per backbone family so runs stay
# reproducible if upstream defaults drift.
TINY_DEFAULTS = {"learning_rate": 4.0, "weight_decay": 0.0, "warmup_steps": 0}
HF_DEFAULTS = {"learning_rate": 5e-5, "weight_decay": 0.0, "warmup_steps": 0, "adam_epsilon": 1e-8, "max_grad_norm": 1.0}


class TextClassifier(ABC):
    """Pluggable binary text classifier with hidden-state access."""

    hidden_size: int
    num_layers: int

    @abstractmethod
    def fit(
        self,
        train: Sequence[TextRecord],
        validation: Sequence[TextRecord],
        config,
        epoch_indices: Sequence[np.ndarray],
    ) -> None:
        """Train on exactly the given per-epoch index streams, in order."""

    @abstractmethod
    def predict_proba(self, texts: Sequence[str]) -> np.ndarray:
        """Positive-class probability per text, each in [0, 1]."""

    @abstractmethod
    def embed(self, texts: Sequence[str], layer: int) -> np.ndarray:
        """(n, hidden_size) mean-over-token vectors at the given layer."""

    @abstractmethod
    def truncation_flags(self, texts: Sequence[str]) -> list[bool]:
        """Whether each text exceeds the maximum sequence length."""

    @abstractmethod
    def resolved_hyperparams(self, config) -> dict:
        """The concrete optimizer settings this backbone will train with."""

    @abstractmethod
    def save(self, directory: str | Path) -> None: ...


class TinyBackbone(TextClassifier):
    """Deterministic desk-scale backbone.

    Token vectors are pseudo-random unit-scale projections derived from a
    hash of the token string (frozen: never trained). ``num_layers`` fixed
    orthogonal tanh mixers provide layer-indexed views for embedding
    extraction (layer 0 is the raw token table). The classifier head is a
    single logistic layer over the layer-0 bag mean, trained by minibatch
    SGD over the provided sampling stream.
    """

    def __init__(self, hidden_size: int = 64, num_layers: int = 6, max_sequence_length: int = 512, hash_seed: int = 0):
        self.hidden_size = hidden_size
        self.num_layers = num_layers
        self.max_sequence_length = max_sequence_length
        self.hash_seed = hash_seed
        self._token_cache: dict[str, np.ndarray] = {}
        self._mixers = [self._orthogonal(layer) for layer in range(1, num_layers + 1)]
        self.weights: np.ndarray | None = None
        self.bias: float = 0.0
        self.consumed_indices: list[np.ndarray] = []  # instrumentation for stream verification

    def _orthogonal(self, layer: int) -> np.ndarray:
        rng = np.random.default_rng(derive_seed(self.hash_seed, "mixer", layer))
        q, _ = np.linalg.qr(rng.standard_normal((self.hidden_size, self.hidden_size)))
        return q

    def _tokenize(self, text: str) -> tuple[list[str], bool]:
        tokens = text.lower().split()
        if len(tokens) > self.max_sequence_length:
            return tokens[: self.max_sequence_length], True
        return tokens, False

    def _token_vector(self, token: str) -> np.ndarray:
        vector = self._token_cache.get(token)
        if vector is None:
            rng = np.random.default_rng(derive_seed(self.hash_seed, "token", token))
            vector = rng.standard_normal(self.hidden_size) / np.sqrt(self.hidden_size)
            self._token_cache[token] = vector
        return vector

    def _features(self, texts: Sequence[str]) -> np.ndarray:
        out = np.zeros((len(texts), self.hidden_size))
        for i, text in enumerate(texts):
            tokens, _ = self._tokenize(text)
            if tokens:
                out[i] = np.mean([self._token_vector(t) for t in tokens], axis=0)
        return out

    def _head_features(self, texts: Sequence[str]) -> np.ndarray:
        # unit-norm bag means keep the logistic head's step size text-length
        # independent; embed() stays the plain token mean
        features = self._features(texts)
        norms = np.linalg.norm(features, axis=1, keepdims=True)
        return features / np.maximum(norms, 1e-12)

    def fit(self, train, validation, config, epoch_indices) -> None:
        del validation  # final-epoch model is kept; no early stopping
        params = self.resolved_hyperparams(config)
        lr = params["learning_rate"]
        rng = np.random.default_rng(derive_seed(config.seed, "head-init"))
        w = rng.normal(0.0, 0.01, self.hidden_size)
        b = 0.0
        features = self._head_features([r.text for r in train])
        targets = np.array([1.0 if r.binary_label == POSITIVE else 0.0 for r in train])
        batch = config.per_device_batch  # single-device contract
        self.consumed_indices = []
        for indices in epoch_indices:
            indices = np.asarray(indices)
            self.consumed_indices.append(indices.copy())
            for start in range(0, indices.size, batch):
                chunk = indices[start : start + batch]
                x = features[chunk]
                y = targets[chunk]
                z = x @ w + b
                grad = _sigmoid(z) - y
                w -= lr * (x.T @ grad) / chunk.size
                b -= lr * float(grad.mean())
        self.weights = w
        self.bias = b

    def predict_proba(self, texts: Sequence[str]) -> np.ndarray:
        if self.weights is None:
            raise TrainingError("tiny backbone is not fitted")
        if not texts:
            return np.zeros(0)
        return _sigmoid(self._head_features(texts) @ self.weights + self.bias)

    def embed(self, texts: Sequence[str], layer: int) -> np.ndarray:
        if not (0 <= layer <= self.num_layers):
            raise ValueError(f"layer must lie in [0, {self.num_layers}], got {layer}")
        out = np.zeros((len(texts), self.hidden_size))
        for i, text in enumerate(texts):
            tokens, _ = self._tokenize(text)
            if not tokens:
                continue
            vectors = np.stack([self._token_vector(t) for t in tokens])
            for mixer in self._mixers[:layer]:
                vectors = np.tanh(vectors @ mixer.T)
            out[i] = vectors.mean(axis=0)
        return out

    def truncation_flags(self, texts: Sequence[str]) -> list[bool]:
        return [self._tokenize(text)[1] for text in texts]

    def resolved_hyperparams(self, config) -> dict:
        params = dict(TINY_DEFAULTS)
        if config.learning_rate is not None:
            params["learning_rate"] = config.learning_rate
        if config.weight_decay is not None:
            params["weight_decay"] = config.weight_decay
        if config.warmup_steps is not None:
            params["warmup_steps"] = config.warmup_steps
        return params

    def save(self, directory: str | Path) -> None:
        directory = Path(directory)
        directory.mkdir(parents=True, exist_ok=True)
        meta = {
            "type": "tiny",
            "hidden_size": self.hidden_size,
            "num_layers": self.num_layers,
            "max_sequence_length": self.max_sequence_length,
            "hash_seed": self.hash_seed,
        }
        (directory / "meta.json").write_text(json.dumps(meta, indent=2))
        if self.weights is not None:
            np.savez(directory / "params.npz", weights=self.weights, bias=np.array([self.bias]))

    @staticmethod
    def load(directory: str | Path) -> "TinyBackbone":
        directory = Path(directory)
        meta = json.loads((directory / "meta.json").read_text())
        backbone = TinyBackbone(
            hidden_size=meta["hidden_size"],
            num_layers=meta["num_layers"],
            max_sequence_length=meta["max_sequence_length"],
            hash_seed=meta["hash_seed"],
        )
        params_path = directory / "params.npz"
        if params_path.exists():
            params = np.load(params_path)
            backbone.weights = params["weights"]
            backbone.bias = float(params["bias"][0])
        return backbone


def _sigmoid(z: np.ndarray) -> np.ndarray:
    out = np.empty_like(z, dtype=np.float64)
    positive = z >= 0
    out[positive] = 1.0 / (1.0 + np.exp(-z[positive]))
    ez = np.exp(z[~positive])
    out[~positive] = ez / (1.0 + ez)
    return out


class HFTransformerBackbone(TextClassifier):
    """Sequence-classification transformer fine-tuned with framework-default
    hyperparameters (AdamW, lr 5e-5, linear decay, grad clip 1.0).

    Single-device semantics: the effective batch is per_device_batch on the
    one visible device. Multi-device data parallelism is outside the
    determinism contract and not implemented here.
    """

    def __init__(self, model_name: str = "distilbert-base-uncased", max_sequence_length: int = 512, device: str | None = None):
        try:
            import torch
            from transformers import AutoModelForSequenceClassification, AutoTokenizer
        except ImportError as exc:  # pragma: no cover - exercised only without the extra
            raise TrainingError(f"backbone {model_name!r} needs the 'hf' extra (torch + transformers): {exc}") from exc
        self._torch = torch
        cache_dir = os.environ.get(CACHE_ENV)
        try:
            self.tokenizer = AutoTokenizer.from_pretrained(model_name, cache_dir=cache_dir)
            self.model = AutoModelForSequenceClassification.from_pretrained(
                model_name, num_labels=2, cache_dir=cache_dir
            )
        except Exception as exc:
            raise TrainingError(f"backbone {model_name!r} unavailable: {exc}") from exc
        self.model_name = model_name
        self.max_sequence_length = max_sequence_length
        self.device = device or ("cuda" if torch.cuda.is_available() else "cpu")
        self.model.to(self.device)
        self.hidden_size = int(self.model.config.hidden_size)
        self.num_layers = int(getattr(self.model.config, "num_hidden_layers", None) or self.model.config.n_layers)

    def _encode(self, texts: Sequence[str]):
        return self.tokenizer(
            list(texts),
            truncation=True,
            max_length=self.max_sequence_length,
            padding=True,
            return_tensors="pt",
        ).to(self.device)

    def fit(self, train, validation, config, epoch_indices) -> None:
        del validation
        torch = self._torch
        params = self.resolved_hyperparams(config)
        torch.manual_seed(config.seed)
        texts = [r.text for r in train]
        targets = [1 if r.binary_label == POSITIVE else 0 for r in train]
        total_steps = sum(-(-len(np.asarray(ix)) // config.per_device_batch) for ix in epoch_indices)
        optimizer = torch.optim.AdamW(
            self.model.parameters(),
            lr=params["learning_rate"],
            weight_decay=params["weight_decay"],
            eps=params["adam_epsilon"],
        )
        from transformers import get_linear_schedule_with_warmup

        scheduler = get_linear_schedule_with_warmup(optimizer, params["warmup_steps"], total_steps)
        self.consumed_indices = []
        self.model.train()
        try:
            for indices in epoch_indices:
                indices = np.asarray(indices)
                self.consumed_indices.append(indices.copy())
                for start in range(0, indices.size, config.per_device_batch):
                    chunk = indices[start : start + config.per_device_batch]
                    encoded = self._encode([texts[i] for i in chunk])
                    labels = torch.tensor([targets[i] for i in chunk], device=self.device)
                    loss = self.model(**encoded, labels=labels).loss
                    optimizer.zero_grad()
                    loss.backward()
                    torch.nn.utils.clip_grad_norm_(self.model.parameters(), params["max_grad_norm"])
                    optimizer.step()
                    scheduler.step()
        except torch.cuda.OutOfMemoryError as exc:  # pragma: no cover - device-specific
            raise TrainingError(
                f"out of device memory at per_device_batch={config.per_device_batch}; "
                "reduce per_device_batch (halving is usually enough) or shorten max_sequence_length"
            ) from exc
        self.model.eval()

    def predict_proba(self, texts: Sequence[str]) -> np.ndarray:
        torch = self._torch
        if not texts:
            return np.zeros(0)
        probs = []
        self.model.eval()
        with torch.no_grad():
            for start in range(0, len(texts), 32):
                encoded = self._encode(texts[start : start + 32])
                logits = self.model(**encoded).logits
                probs.append(torch.softmax(logits, dim=-1)[:, 1].cpu().numpy())
        return np.concatenate(probs)

    def embed(self, texts: Sequence[str], layer: int) -> np.ndarray:
        torch = self._torch
        if not (0 <= layer <= self.num_layers):
            raise ValueError(f"layer must lie in [0, {self.num_layers}], got {layer}")
        vectors = []
        self.model.eval()
        with torch.no_grad():
            for start in range(0, len(texts), 32):
                encoded = self._encode(texts[start : start + 32])
                hidden = self.model(**encoded, output_hidden_states=True).hidden_states[layer]
                mask = encoded["attention_mask"].unsqueeze(-1).to(hidden.dtype)
                summed = (hidden * mask).sum(dim=1)
                counts = mask.sum(dim=1).clamp(min=1)
                vectors.append((summed / counts).cpu().numpy())
        return np.concatenate(vectors)

    def truncation_flags(self, texts: Sequence[str]) -> list[bool]:
        flags = []
        for text in texts:
            ids = self.tokenizer(text, truncation=False, add_special_tokens=True)["input_ids"]
            flags.append(len(ids) > self.max_sequence_length)
        return flags

    def resolved_hyperparams(self, config) -> dict:
        params = dict(HF_DEFAULTS)
        if config.learning_rate is not None:
            params["learning_rate"] = config.learning_rate
        if config.weight_decay is not None:
            params["weight_decay"] = config.weight_decay
        if config.warmup_steps is not None:
            params["warmup_steps"] = config.warmup_steps
        return params

    def save(self, directory: str | Path) -> None:
        directory = Path(directory)
        directory.mkdir(parents=True, exist_ok=True)
        meta = {"type": "hf", "model_name": self.model_name, "max_sequence_length": self.max_sequence_length}
        (directory / "meta.json").write_text(json.dumps(meta, indent=2))
        self.model.save_pretrained(directory / "model")
        self.tokenizer.save_pretrained(directory / "model")

    @staticmethod
    def load(directory: str | Path) -> "HFTransformerBackbone":
        directory = Path(directory)
        meta = json.loads((directory / "meta.json").read_text())
        return HFTransformerBackbone(
            model_name=str(directory / "model"),
            max_sequence_length=meta["max_sequence_length"],
        )


BackboneFactory = Callable[[str, int], TextClassifier]

_FACTORIES: dict[str, BackboneFactory] = {}


def register_backbone(prefix: str, factory: BackboneFactory) -> None:
    """Register a backbone family under an identifier prefix."""
    _FACTORIES[prefix] = factory


def _tiny_factory(identifier: str, max_sequence_length: int) -> TextClassifier:
    hidden = 64
    if "-" in identifier:
        hidden = int(identifier.split("-", 1)[1])
    return TinyBackbone(hidden_size=hidden, max_sequence_length=max_sequence_length)


def _hf_factory(identifier: str, max_sequence_length: int) -> TextClassifier:
    model_name = identifier.split(":", 1)[1]
    return HFTransformerBackbone(model_name=model_name, max_sequence_length=max_sequence_length)


register_backbone("tiny", _tiny_factory)
register_backbone("hf", _hf_factory)


def create_backbone(identifier: str, max_sequence_length: int = 512) -> TextClassifier:
    """Build a backbone from its identifier ("tiny", "tiny-32", "hf:<model>")."""
    prefix = identifier.split(":", 1)[0].split("-", 1)[0]
    factory = _FACTORIES.get(prefix)
    if factory is None:
        raise TrainingError(f"unknown backbone {identifier!r}; registered families: {sorted(_FACTORIES)}")
    return factory(identifier, max_sequence_length)


def load_backbone(directory: str | Path) -> TextClassifier:
    """Reload a saved backbone from its checkpoint directory."""
    meta = json.loads((Path(directory) / "meta.json").read_text())
    if meta["type"] == "tiny":
        return TinyBackbone.load(directory)
    if meta["type"] == "hf":
        return HFTransformerBackbone.load(directory)
    raise TrainingError(f"unknown backbone checkpoint type {meta['type']!r}")
