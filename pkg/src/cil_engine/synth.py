"""Synthetic embedding banks for full-pipeline tests without a real encoder.

Each class gets a random direction on the unit sphere; samples and text
vectors are noisy copies of it, re-normalized, so the geometry matches the
cosine classifiers downstream. Every draw comes from a SplitMix64 stream
keyed by (seed, class, role, index) with gaussians via Box-Muller, which
makes generation order-independent and reproducible bit-for-bit.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .bank import EmbeddingBank
from .errors import ValidationError
from .rng import SplitMix64, derive_seed

# Stream roles; part of the generator's determinism contract.
_ROLE_DIRECTION = 0
_ROLE_TRAIN = 1
_ROLE_TEST = 2
_ROLE_TEXT = 3


@dataclass(frozen=True)
class SynthSpec:
    num_classes: int
    dim: int
    per_class_train: int
    per_class_test: int
    sigma_between: float = 1.0
    sigma_within: float = 0.3
    sigma_text: float = 0.0
    seed: int = 0

    def validate(self) -> None:
        if self.num_classes < 1:
            raise ValidationError(f"num_classes must be >= 1, got {self.num_classes}")
        if self.dim < 2:
            raise ValidationError(f"dim must be >= 2, got {self.dim}")
        if self.per_class_train < 1 or self.per_class_test < 1:
            raise ValidationError("per-class sample counts must be positive")
        for name in ("sigma_between", "sigma_within", "sigma_text"):
            v = getattr(self, name)
            if not np.isfinite(v):
                raise ValidationError(f"{name} must be finite, got {v}")
        if self.sigma_between <= 0:
            raise ValidationError("sigma_between must be positive")
        if self.sigma_within < 0 or self.sigma_text < 0:
            raise ValidationError("noise scales must be non-negative")


def _gauss_vector(seed: int, cid: int, role: int, index: int, dim: int) -> np.ndarray:
    stream = SplitMix64(derive_seed(seed, cid, role, index))
    return np.asarray(stream.gaussians(dim), dtype=np.float64)


def _unit(v: np.ndarray) -> np.ndarray:
    norm = np.linalg.norm(v)
    if norm == 0.0:  # pragma: no cover - measure-zero for gaussian draws
        raise ValidationError("degenerate zero-norm gaussian draw")
    return v / norm


def generate(spec: SynthSpec) -> tuple[EmbeddingBank, EmbeddingBank]:
    """Build (train, test) banks; text embeddings ride on the train bank."""
    spec.validate()
    c, dim = spec.num_classes, spec.dim

    directions = np.empty((c, dim))
    for cid in range(c):
        directions[cid] = spec.sigma_between * _unit(
            _gauss_vector(spec.seed, cid, _ROLE_DIRECTION, 0, dim)
        )

    def sample_block(role: int, per_class: int) -> tuple[np.ndarray, np.ndarray]:
        rows = np.empty((c * per_class, dim), dtype=np.float32)
        labels = np.empty(c * per_class, dtype=np.int64)
        pos = 0
        for cid in range(c):
            for idx in range(per_class):
                noise = _gauss_vector(spec.seed, cid, role, idx, dim)
                rows[pos] = _unit(
                    directions[cid] + spec.sigma_within * noise
                ).astype(np.float32)
                labels[pos] = cid
                pos += 1
        return rows, labels

    train_rows, train_labels = sample_block(_ROLE_TRAIN, spec.per_class_train)
    test_rows, test_labels = sample_block(_ROLE_TEST, spec.per_class_test)

    text = np.empty((c, dim), dtype=np.float32)
    for cid in range(c):
        noise = _gauss_vector(spec.seed, cid, _ROLE_TEXT, 0, dim)
        text[cid] = _unit(directions[cid] + spec.sigma_text * noise).astype(
            np.float32
        )

    names = [f"class_{cid:03d}" for cid in range(c)]
    train = EmbeddingBank(
        dim=dim,
        images=train_rows,
        labels=train_labels,
        class_names=names,
        split_tag="train",
        text_embeddings=text,
    )
    test = EmbeddingBank(
        dim=dim,
        images=test_rows,
        labels=test_labels,
        class_names=list(names),
        split_tag="test",
        text_embeddings=None,
    )
    return train, test
