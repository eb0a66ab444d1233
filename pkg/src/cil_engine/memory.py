"""Herding exemplar selection and the per-class exemplar store.

Herding greedily picks the points whose running mean best tracks the class
mean of L2-normalized features (the cosine geometry every learner here uses).
Selection order is kept: the k-exemplar set is always a prefix of the
(k+1)-exemplar set.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .bank import EmbeddingBank
from .errors import ValidationError

log = logging.getLogger(__name__)


@dataclass
class ExemplarStore:
    capacity_per_class: int
    per_class: dict[int, list[int]] = field(default_factory=dict)

    def total(self) -> int:
        return sum(len(v) for v in self.per_class.values())


def herding_select(features: np.ndarray, k: int) -> list[int]:
    """Greedy herding over one class's feature rows; returns row indices.

    Features are L2-normalized first. At step t the pick minimizes
    ||mu - (sum_selected + x_i) / t||; ties go to the lowest row index.
    All arithmetic runs in float64 regardless of the input dtype.
    """
    feats = np.asarray(features, dtype=np.float64)
    if feats.ndim != 2 or feats.shape[0] < 1:
        raise ValidationError(f"features must be (M, dim) with M >= 1, got {feats.shape}")
    m = feats.shape[0]
    if not 1 <= k <= m:
        raise ValidationError(f"k={k} outside [1, {m}]")
    norms = np.linalg.norm(feats, axis=1)
    zero = np.flatnonzero(norms == 0.0)
    if zero.size:
        raise ValidationError(f"feature row {int(zero[0])} has zero norm")
    x = feats / norms[:, None]
    mu = x.mean(axis=0)

    selected: list[int] = []
    running = np.zeros_like(mu)
    available = np.ones(m, dtype=bool)
    for t in range(1, k + 1):
        cand = (running[None, :] + x) / t
        dist = ((cand - mu[None, :]) ** 2).sum(axis=1)
        dist[~available] = np.inf
        pick = int(np.argmin(dist))   # argmin returns the lowest tied index
        selected.append(pick)
        available[pick] = False
        running += x[pick]
    return selected


def update_store(
    store: ExemplarStore, bank: EmbeddingBank, new_classes: list[int]
) -> ExemplarStore:
    """Extend the store with herded exemplars for each new class.

    Existing entries are never touched (fixed per-class capacity, no
    shrinking). A class with fewer samples than the capacity keeps them
    all, with a warning.
    """
    for cid in new_classes:
        if cid in store.per_class:
            raise ValidationError(f"class {cid} already has stored exemplars")
    for cid in new_classes:
        rows = np.flatnonzero(bank.labels == cid).astype(np.int64)
        if rows.size == 0:
            raise ValidationError(f"class {cid} has no train samples")
        k = store.capacity_per_class
        if rows.size < k:
            log.warning(
                "class %d has only %d samples; keeping all of them "
                "(capacity %d)", cid, rows.size, k,
            )
            k = int(rows.size)
        picks = herding_select(bank.images[rows], k)
        store.per_class[cid] = [int(rows[p]) for p in picks]
    return store


def replay_view(store: ExemplarStore, bank: EmbeddingBank) -> list[int]:
    """All stored exemplar rows, ordered by class id then selection order."""
    out: list[int] = []
    for cid in sorted(store.per_class):
        out.extend(store.per_class[cid])
    return out
