"""Accuracy bookkeeping and the three run-level metrics.

The accuracy matrix holds a[l][b]: the accuracy on task b's test rows
measured after stage l, defined for b <= l. From it the engine reports the
last accuracy, the average accuracy over stages, and the forgetting measure

    F_B = (1 / (B - 1)) * sum_{b=1}^{B-1} max_{l in b..B-1} (a[l][b] - a[B][b]),

the mean drop from each task's best-achieved accuracy to its final one.
Forgetting may be negative under backward transfer and is undefined at B = 1.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import StateError, UndefinedMetricError, ValidationError


@dataclass
class AccuracyMatrix:
    num_stages: int
    values: np.ndarray = field(init=False, repr=False)   # (B+1, B+1) float64, 1-indexed
    defined: np.ndarray = field(init=False, repr=False)  # same shape, bool

    def __post_init__(self):
        if self.num_stages < 1:
            raise ValidationError(
                f"stage count must be positive, got {self.num_stages}"
            )
        side = self.num_stages + 1
        self.values = np.full((side, side), np.nan)
        self.defined = np.zeros((side, side), dtype=bool)

    def get(self, l: int, b: int) -> float:
        self._check_cell(l, b)
        if not self.defined[l, b]:
            raise StateError(f"cell a[{l}][{b}] was never recorded")
        return float(self.values[l, b])

    def leading(self, upto: int) -> "AccuracyMatrix":
        """The upper-left upto x upto submatrix as a fresh matrix."""
        if not 1 <= upto <= self.num_stages:
            raise ValidationError(f"upto={upto} outside [1, {self.num_stages}]")
        sub = AccuracyMatrix(upto)
        sub.values[: upto + 1, : upto + 1] = self.values[: upto + 1, : upto + 1]
        sub.defined[: upto + 1, : upto + 1] = self.defined[: upto + 1, : upto + 1]
        return sub

    def _check_cell(self, l: int, b: int) -> None:
        if not 1 <= l <= self.num_stages:
            raise ValidationError(f"stage {l} outside [1, {self.num_stages}]")
        if not 1 <= b <= l:
            raise ValidationError(
                f"task {b} has no accuracy at stage {l} (need b <= l)"
            )


def accuracy(predictions, labels) -> float:
    """Fraction of exact matches, in float64."""
    preds = np.asarray(predictions)
    labs = np.asarray(labels)
    if preds.shape != labs.shape or preds.ndim != 1:
        raise ValidationError(
            f"predictions {preds.shape} and labels {labs.shape} must be "
            f"equal-length vectors"
        )
    if preds.size == 0:
        raise ValidationError("accuracy of an empty prediction list is undefined")
    return float(np.float64(int((preds == labs).sum())) / np.float64(preds.size))


def record_task_accuracies(
    matrix: AccuracyMatrix, l: int, per_task: list[tuple[int, float]]
) -> AccuracyMatrix:
    """Populate row l with (task, accuracy) pairs; cells are write-once."""
    for b, acc in per_task:
        matrix._check_cell(l, b)
        if matrix.defined[l, b]:
            raise StateError(f"cell a[{l}][{b}] already recorded")
        if not 0.0 <= acc <= 1.0:
            raise ValidationError(f"accuracy {acc} outside [0, 1]")
        matrix.values[l, b] = acc
        matrix.defined[l, b] = True
    return matrix


def average_accuracy(per_stage_acc) -> float:
    """Arithmetic mean of the per-stage accuracies (exactly rounded sum)."""
    vals = list(per_stage_acc)
    if not vals:
        raise ValidationError("average of an empty accuracy list is undefined")
    return math.fsum(vals) / len(vals)


def forgetting(matrix: AccuracyMatrix) -> float:
    """The forgetting measure over a fully recorded matrix.

    For each task b < B, take the best accuracy it ever reached through
    stage B-1, subtract its final accuracy, and average the drops. Never
    reads the final diagonal cell a[B][B].
    """
    big_b = matrix.num_stages
    if big_b < 2:
        raise UndefinedMetricError(
            "forgetting needs at least two stages (its normalizer is B - 1)"
        )
    total = 0.0
    for b in range(1, big_b):
        best = max(matrix.get(l, b) for l in range(b, big_b))
        total += best - matrix.get(big_b, b)
    return total / (big_b - 1)


@dataclass(frozen=True)
class RunMetrics:
    per_stage_acc: tuple[float, ...]
    last_acc: float
    avg_acc: float
    forgetting: float | None    # None when B < 2

    @classmethod
    def from_run(
        cls, per_stage_acc: list[float], matrix: AccuracyMatrix
    ) -> "RunMetrics":
        if len(per_stage_acc) != matrix.num_stages:
            raise ValidationError(
                f"{len(per_stage_acc)} stage accuracies for a "
                f"{matrix.num_stages}-stage matrix"
            )
        fb = forgetting(matrix) if matrix.num_stages >= 2 else None
        return cls(
            per_stage_acc=tuple(per_stage_acc),
            last_acc=per_stage_acc[-1],
            avg_acc=average_accuracy(per_stage_acc),
            forgetting=fb,
        )
