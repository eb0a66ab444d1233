"""Seeded class ordering and the B-m Inc-n stage schedule.

The class order is a Fisher-Yates shuffle driven by SplitMix64, so the same
(num_classes, seed) pair produces the same permutation on every platform.
A schedule slices that order into an initial stage of m classes (m = 0 means
the first stage also holds n classes) followed by stages of n classes each.
"""

from __future__ import annotations

from dataclasses import dataclass

from .errors import ScheduleError, ValidationError
from .rng import SplitMix64


@dataclass(frozen=True)
class ClassOrder:
    order: tuple[int, ...]     # permutation of [0, C)
    seed: int

    @property
    def num_classes(self) -> int:
        return len(self.order)


@dataclass(frozen=True)
class StageSchedule:
    order: ClassOrder
    init_cls: int
    increment: int
    stages: tuple[tuple[int, ...], ...]   # partition of order.order

    @property
    def num_stages(self) -> int:
        return len(self.stages)


def shuffle_classes(
    num_classes: int, seed: int, shuffle: bool = True
) -> ClassOrder:
    """Permutation of [0, num_classes); identity when shuffle is disabled."""
    if num_classes < 1:
        raise ValidationError(
            f"num_classes must be positive, got {num_classes}"
        )
    order = list(range(num_classes))
    if shuffle:
        SplitMix64(seed).shuffle(order)
    return ClassOrder(order=tuple(order), seed=seed)


def build_schedule(
    order: ClassOrder,
    init_cls: int,
    increment: int,
    allow_ragged: bool = False,
) -> StageSchedule:
    """Slice the class order into B-m Inc-n stages.

    init_cls = 0 means the first stage uses `increment` classes. A final
    short stage is an error unless allow_ragged is set.
    """
    if init_cls < 0:
        raise ScheduleError(f"init_cls must be non-negative, got {init_cls}")
    if increment < 1:
        raise ScheduleError(f"increment must be positive, got {increment}")
    c = order.num_classes
    m_eff = init_cls if init_cls > 0 else increment
    if m_eff > c:
        raise ScheduleError(
            f"initial stage of {m_eff} classes exceeds the {c} available"
        )
    remaining = c - m_eff
    if remaining % increment and not allow_ragged:
        raise ScheduleError(
            f"{remaining} classes after the initial stage are not divisible "
            f"by increment {increment}; pass allow_ragged to permit a short "
            f"final stage"
        )
    sizes = [m_eff]
    while remaining > 0:
        step = min(increment, remaining)
        sizes.append(step)
        remaining -= step
    stages = []
    start = 0
    for size in sizes:
        stages.append(tuple(order.order[start : start + size]))
        start += size
    return StageSchedule(
        order=order,
        init_cls=init_cls,
        increment=increment,
        stages=tuple(stages),
    )


def stage_classes(
    schedule: StageSchedule, b: int
) -> tuple[list[int], set[int]]:
    """New classes of stage b (1-indexed) and the cumulative seen set."""
    if not 1 <= b <= schedule.num_stages:
        raise ValidationError(
            f"stage {b} out of range [1, {schedule.num_stages}]"
        )
    new_classes = list(schedule.stages[b - 1])
    seen: set[int] = set()
    for stage in schedule.stages[:b]:
        seen.update(stage)
    return new_classes, seen
