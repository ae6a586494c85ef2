"""Portable deterministic random streams for the measurement simulator.

Seeding convention, used everywhere runs are generated:

* a 64-bit run seed is expanded by a splitmix64 chain into the four state
  words of a xoshiro256** stream; draws come only from that stream;
* batch run ``i`` of a batch with base seed ``s`` uses run seed ``s ^ i``;
* substream ``k`` of a run seed ``s`` (used when one run drives several
  independent apparatuses) uses run seed ``splitmix64(s + k)``.

Identical seed therefore means bit-identical draws on any platform.
"""

from __future__ import annotations

_MASK64 = (1 << 64) - 1


def splitmix64(state: int) -> int:
    """One splitmix64 output for the given state word."""
    z = (state + 0x9E3779B97F4A7C15) & _MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return (z ^ (z >> 31)) & _MASK64


def _rotl(x: int, k: int) -> int:
    return ((x << k) | (x >> (64 - k))) & _MASK64


class Xoshiro256StarStar:
    """xoshiro256** stream seeded through a splitmix64 chain."""

    def __init__(self, seed: int):
        s = seed & _MASK64
        state = []
        for _ in range(4):
            s = splitmix64(s)
            state.append(s)
        # all-zero state is invalid for xoshiro; splitmix output cannot
        # produce it for all four words, but guard anyway
        if not any(state):
            state[0] = 0x9E3779B97F4A7C15
        self._s = state

    def next_u64(self) -> int:
        s0, s1, s2, s3 = self._s
        result = (_rotl((s1 * 5) & _MASK64, 7) * 9) & _MASK64
        t = (s1 << 17) & _MASK64
        s2 ^= s0
        s3 ^= s1
        s1 ^= s2
        s0 ^= s3
        s2 ^= t
        s3 = _rotl(s3, 45)
        self._s = [s0, s1, s2, s3]
        return result

    def uniform(self) -> float:
        """Uniform double in [0, 1) with 53 significant bits."""
        return (self.next_u64() >> 11) * 2.0**-53


def run_seed(base_seed: int, run_index: int) -> int:
    """Seed for batch run ``run_index`` under ``base_seed``."""
    return (base_seed ^ run_index) & _MASK64


def substream_seed(seed: int, k: int) -> int:
    """Seed for independent substream ``k`` of a run."""
    return splitmix64((seed + k) & _MASK64)
