"""Deterministic random streams.

All randomness in the package flows through counter-based Philox generators
keyed by (seed, domain, path...).  Two calls with the same key produce the
same bit stream on any machine and under any worker scheduling, which is what
makes Monte Carlo results reproducible independently of parallelism.

Domains keep unrelated consumers (oracles, Monte Carlo blocks, derived seeds)
on disjoint keys so streams never collide.
"""

from __future__ import annotations

from numpy.random import Generator, Philox, SeedSequence

_MASK64 = (1 << 64) - 1

# Key domains; the first path element after the seed.
ORACLE = 1
MC_BLOCK = 2
DERIVED = 3


def substream(seed: int, *path: int) -> Generator:
    """Independent generator keyed by a 64-bit seed and an integer path."""
    entropy = (int(seed) & _MASK64,) + tuple(int(k) & _MASK64 for k in path)
    return Generator(Philox(SeedSequence(entropy=entropy)))


def fold_seed(seed: int, *path: int) -> int:
    """Derive a 64-bit child seed, stable across runs and platforms."""
    entropy = (int(seed) & _MASK64, DERIVED) + tuple(int(k) & _MASK64 for k in path)
    return int(SeedSequence(entropy=entropy).generate_state(2, dtype="uint64")[0])
