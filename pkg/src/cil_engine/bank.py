"""Embedding banks: the dataset model and its bit-exact C3EB on-disk format.

A bank replaces a live encoder: a float32 image-feature matrix with integer
labels and class names, plus an optional per-class text-feature matrix on
train banks. Embeddings are stored raw (unnormalized); normalization is a
learner-side decision.

C3EB layout (little-endian throughout):

    bytes 0-3   magic "C3EB"
    u32         version (currently 1)
    u32         dim
    u64         N (number of image rows)
    u32         C (number of classes)
    u8          split tag (0 = train, 1 = test)
    u8          has_text flag (0/1)
    6 bytes     reserved, zero
    N*dim f32   image matrix, row-major
    N u32       labels
    C times     u32 byte length + UTF-8 class name
    C*dim f32   text matrix, row-major (only when has_text = 1)
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import FormatError, IoError, ValidationError

MAGIC = b"C3EB"
VERSION = 1
_HEADER = struct.Struct("<4sIIQIBB6s")

SPLIT_TAGS = {"train": 0, "test": 1}
_TAG_SPLITS = {v: k for k, v in SPLIT_TAGS.items()}


@dataclass
class EmbeddingBank:
    """Immutable-by-convention container for one split's embeddings."""

    dim: int
    images: np.ndarray            # (N, dim) float32, raw features
    labels: np.ndarray            # (N,) int64, values in [0, C)
    class_names: list[str]
    split_tag: str                # "train" | "test"
    text_embeddings: np.ndarray | None = None   # (C, dim) float32

    @property
    def num_samples(self) -> int:
        return int(self.images.shape[0])

    @property
    def num_classes(self) -> int:
        return len(self.class_names)


@dataclass
class ClassSubsetView:
    """Row indices of a bank restricted to a class set; indices ascend."""

    bank: EmbeddingBank
    class_ids: frozenset[int]
    indices: np.ndarray = field(repr=False)   # (k,) int64, strictly increasing


def validate_bank(bank: EmbeddingBank) -> None:
    """Check every bank invariant; raise ValidationError naming the offender."""
    if bank.dim < 1:
        raise ValidationError(f"dim must be positive, got {bank.dim}")
    if bank.split_tag not in SPLIT_TAGS:
        raise ValidationError(f"unknown split tag {bank.split_tag!r}")
    images = bank.images
    if images.ndim != 2 or images.shape[1] != bank.dim:
        raise ValidationError(
            f"images must be (N, {bank.dim}), got shape {images.shape}"
        )
    if images.dtype != np.float32:
        raise ValidationError(f"images must be float32, got {images.dtype}")
    n = images.shape[0]
    c = bank.num_classes
    if c < 1:
        raise ValidationError("bank must define at least one class")
    labels = bank.labels
    if labels.shape != (n,):
        raise ValidationError(
            f"labels must be ({n},), got shape {labels.shape}"
        )
    bad = np.flatnonzero((labels < 0) | (labels >= c))
    if bad.size:
        i = int(bad[0])
        raise ValidationError(
            f"label {int(labels[i])} out of range [0, {c}) at row {i}"
        )
    zero = np.flatnonzero(~images.any(axis=1))
    if zero.size:
        raise ValidationError(f"image row {int(zero[0])} is all-zero")
    if bank.split_tag == "train":
        present = np.zeros(c, dtype=bool)
        present[labels] = True
        missing = np.flatnonzero(~present)
        if missing.size:
            raise ValidationError(
                f"class {int(missing[0])} has no samples in the train split"
            )
    text = bank.text_embeddings
    if text is not None:
        if text.shape != (c, bank.dim):
            raise ValidationError(
                f"text_embeddings must be ({c}, {bank.dim}), got {text.shape}"
            )
        if text.dtype != np.float32:
            raise ValidationError(
                f"text_embeddings must be float32, got {text.dtype}"
            )
        zero = np.flatnonzero(~text.any(axis=1))
        if zero.size:
            raise ValidationError(f"text row {int(zero[0])} is all-zero")


def write_bank(bank: EmbeddingBank, path: str | Path) -> None:
    """Serialize a validated bank to the C3EB layout."""
    validate_bank(bank)
    has_text = bank.text_embeddings is not None
    header = _HEADER.pack(
        MAGIC,
        VERSION,
        bank.dim,
        bank.num_samples,
        bank.num_classes,
        SPLIT_TAGS[bank.split_tag],
        int(has_text),
        b"\x00" * 6,
    )
    try:
        with open(path, "wb") as fh:
            fh.write(header)
            fh.write(np.ascontiguousarray(bank.images, dtype="<f4").tobytes())
            fh.write(bank.labels.astype("<u4").tobytes())
            for name in bank.class_names:
                raw = name.encode("utf-8")
                fh.write(struct.pack("<I", len(raw)))
                fh.write(raw)
            if has_text:
                fh.write(
                    np.ascontiguousarray(
                        bank.text_embeddings, dtype="<f4"
                    ).tobytes()
                )
    except OSError as exc:
        raise IoError(f"writing bank {path}: {exc}") from exc


def load_bank(path: str | Path) -> EmbeddingBank:
    """Read and fully validate a C3EB bank; the file is never mutated."""
    try:
        with open(path, "rb") as fh:
            blob = fh.read()
    except OSError as exc:
        raise IoError(f"reading bank {path}: {exc}") from exc

    if len(blob) < _HEADER.size or blob[:4] != MAGIC:
        raise FormatError(f"{path}: not a C3EB bank (bad magic)")
    magic, version, dim, n, c, tag, has_text, _ = _HEADER.unpack_from(blob, 0)
    if version != VERSION:
        raise FormatError(f"{path}: unsupported version {version}")
    if tag not in _TAG_SPLITS:
        raise ValidationError(f"{path}: unknown split tag byte {tag}")
    if has_text not in (0, 1):
        raise ValidationError(f"{path}: bad has_text flag {has_text}")

    off = _HEADER.size

    def take(nbytes: int, what: str) -> bytes:
        nonlocal off
        if off + nbytes > len(blob):
            raise ValidationError(f"{path}: truncated payload in {what}")
        chunk = blob[off : off + nbytes]
        off += nbytes
        return chunk

    images = np.frombuffer(
        take(4 * n * dim, "image matrix"), dtype="<f4"
    ).reshape(n, dim)
    labels = np.frombuffer(take(4 * n, "labels"), dtype="<u4").astype(np.int64)
    names = []
    for i in range(c):
        (ln,) = struct.unpack("<I", take(4, f"name length {i}"))
        names.append(take(ln, f"name {i}").decode("utf-8"))
    text = None
    if has_text:
        text = np.frombuffer(
            take(4 * c * dim, "text matrix"), dtype="<f4"
        ).reshape(c, dim)

    bank = EmbeddingBank(
        dim=dim,
        images=images,
        labels=labels,
        class_names=names,
        split_tag=_TAG_SPLITS[tag],
        text_embeddings=text,
    )
    validate_bank(bank)
    return bank


def subset_by_classes(bank: EmbeddingBank, class_ids) -> ClassSubsetView:
    """View covering exactly the rows whose label is in class_ids."""
    ids = frozenset(int(c) for c in class_ids)
    for cid in ids:
        if not 0 <= cid < bank.num_classes:
            raise ValidationError(
                f"class id {cid} out of range [0, {bank.num_classes})"
            )
    if ids:
        mask = np.isin(bank.labels, np.fromiter(ids, dtype=np.int64))
        indices = np.flatnonzero(mask).astype(np.int64)
    else:
        indices = np.empty(0, dtype=np.int64)
    return ClassSubsetView(bank=bank, class_ids=ids, indices=indices)


def manifest_path(bank_path: str | Path) -> Path:
    return Path(bank_path).with_suffix(".json")


def write_manifest(
    bank: EmbeddingBank, bank_path: str | Path, dataset: str, backbone_type: str
) -> None:
    """Write the JSON sidecar describing a bank file."""
    payload = {
        "dataset": dataset,
        "dim": bank.dim,
        "n": bank.num_samples,
        "c": bank.num_classes,
        "split": bank.split_tag,
        "backbone_type": backbone_type,
    }
    manifest_path(bank_path).write_text(
        json.dumps(payload, indent=2) + "\n", encoding="utf-8"
    )


def read_manifest(bank_path: str | Path) -> dict | None:
    """Load the sidecar if present; None when the bank ships without one."""
    p = manifest_path(bank_path)
    if not p.exists():
        return None
    return json.loads(p.read_text(encoding="utf-8"))
