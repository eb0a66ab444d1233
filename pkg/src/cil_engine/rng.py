"""Deterministic randomness: SplitMix64, seeded shuffles, Box-Muller gaussians.

Everything random in the engine flows through this module so that a run is
reproducible bit-for-bit across platforms and process invocations. SplitMix64
is the single core generator; child streams are derived by hashing integer
keys into the seed, which lets per-class / per-epoch work run in any order
(or in parallel) without changing results.
"""

from __future__ import annotations

import math

_M64 = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15


def _mix64(z: int) -> int:
    """SplitMix64 output function (finalizer)."""
    z &= _M64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _M64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _M64
    return z ^ (z >> 31)


class SplitMix64:
    """The SplitMix64 generator (Steele et al.); 64-bit state, 64-bit output."""

    __slots__ = ("_state",)

    def __init__(self, seed: int):
        self._state = seed & _M64

    def next_u64(self) -> int:
        self._state = (self._state + _GOLDEN) & _M64
        return _mix64(self._state)

    def next_below(self, bound: int) -> int:
        """Uniform integer in [0, bound) via the rejection-free multiply-shift
        of the 64-bit output (Lemire's reduction without rejection)."""
        if bound <= 0:
            raise ValueError(f"bound must be positive, got {bound}")
        return (self.next_u64() * bound) >> 64

    def next_unit_open(self) -> float:
        """Uniform double in (0, 1]; never zero, so safe under log()."""
        return ((self.next_u64() >> 11) + 1) * 2.0 ** -53

    def next_unit(self) -> float:
        """Uniform double in [0, 1)."""
        return (self.next_u64() >> 11) * 2.0 ** -53

    def shuffle(self, items: list) -> None:
        """In-place Fisher-Yates, descending, one next_below draw per step."""
        for i in range(len(items) - 1, 0, -1):
            j = self.next_below(i + 1)
            items[i], items[j] = items[j], items[i]

    def gaussians(self, n: int) -> list[float]:
        """n standard-normal variates via the Box-Muller transform.

        Draws ceil(n/2) (u1, u2) pairs; u1 in (0, 1], u2 in [0, 1). The
        second variate of a trailing half-pair is discarded so a stream
        asked for n and one asked for n+1 agree on the first n values only
        when n is even; callers key streams per vector, never resuming.
        """
        out: list[float] = []
        for _ in range((n + 1) // 2):
            u1 = self.next_unit_open()
            u2 = self.next_unit()
            r = math.sqrt(-2.0 * math.log(u1))
            theta = 2.0 * math.pi * u2
            out.append(r * math.cos(theta))
            out.append(r * math.sin(theta))
        return out[:n]


def derive_seed(seed: int, *keys: int) -> int:
    """Deterministic child-stream seed from a parent seed and integer keys.

    Each key is finalized independently and folded in with xor, so distinct
    key tuples map to distinct streams with overwhelming probability and the
    derivation order of sibling streams never matters.
    """
    s = seed & _M64
    for k in keys:
        s = _mix64(s ^ _mix64((k & _M64) + _GOLDEN))
    return s
