"""Standalone writer for the C3EB embedding-bank format.

This tool talks to the evaluation engine only through its file formats, so
the byte layout is implemented here rather than imported. Layout
(little-endian): magic "C3EB", u32 version=1, u32 dim, u64 N, u32 C,
u8 split (0 train / 1 test), u8 has_text, 6 zero bytes; then the N x dim
float32 image matrix, N u32 labels, C length-prefixed UTF-8 names, and an
optional C x dim float32 text matrix.
"""

from __future__ import annotations

import json
import struct
from pathlib import Path

import numpy as np

MAGIC = b"C3EB"
VERSION = 1
_SPLITS = {"train": 0, "test": 1}


def write_c3eb(
    path: str | Path,
    images: np.ndarray,
    labels: np.ndarray,
    class_names: list[str],
    split: str,
    text_embeddings: np.ndarray | None = None,
) -> None:
    images = np.ascontiguousarray(images, dtype="<f4")
    labels = np.asarray(labels)
    n, dim = images.shape
    c = len(class_names)
    if labels.shape != (n,):
        raise ValueError(f"labels must be ({n},), got {labels.shape}")
    if labels.size and (labels.min() < 0 or labels.max() >= c):
        raise ValueError("labels out of range for the class table")
    if text_embeddings is not None:
        text_embeddings = np.ascontiguousarray(text_embeddings, dtype="<f4")
        if text_embeddings.shape != (c, dim):
            raise ValueError(
                f"text matrix must be ({c}, {dim}), got {text_embeddings.shape}"
            )
    header = struct.pack(
        "<4sIIQIBB6s",
        MAGIC,
        VERSION,
        dim,
        n,
        c,
        _SPLITS[split],
        int(text_embeddings is not None),
        b"\x00" * 6,
    )
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(images.tobytes())
        fh.write(labels.astype("<u4").tobytes())
        for name in class_names:
            raw = name.encode("utf-8")
            fh.write(struct.pack("<I", len(raw)))
            fh.write(raw)
        if text_embeddings is not None:
            fh.write(text_embeddings.tobytes())


def write_manifest(
    bank_path: str | Path,
    dataset: str,
    dim: int,
    n: int,
    c: int,
    split: str,
    backbone_type: str,
) -> None:
    payload = {
        "dataset": dataset,
        "dim": dim,
        "n": n,
        "c": c,
        "split": split,
        "backbone_type": backbone_type,
    }
    Path(bank_path).with_suffix(".json").write_text(
        json.dumps(payload, indent=2) + "\n", encoding="utf-8"
    )
