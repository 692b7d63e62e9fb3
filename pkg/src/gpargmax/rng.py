"""Seed management for reproducible, scheduling-independent Monte Carlo.

Every replicate gets its own substream derived from (master_seed, key, r),
so results are bit-identical regardless of batch size or worker count.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True)
class RngPolicy:
    """Derives independent per-replicate random streams from a master seed."""

    master_seed: int
    key: tuple[int, ...] = field(default=())

    def __post_init__(self):
        if not (0 <= int(self.master_seed) < 2**64):
            raise ValueError("master_seed must be a 64-bit unsigned integer")

    def substream(self, r: int) -> np.random.Generator:
        """Generator for replicate ``r``; identical (seed, key, r) gives identical draws."""
        ss = np.random.SeedSequence(entropy=self.master_seed, spawn_key=self.key + (r,))
        return np.random.Generator(np.random.PCG64(ss))

    def child(self, *tags: int | str) -> "RngPolicy":
        """Policy for an independent sub-experiment (e.g. a refinement level).

        Integer tags are used as-is; string tags are hashed to a stable
        32-bit word so labelled sub-experiments stay reproducible.
        """
        return RngPolicy(self.master_seed, self.key + tuple(_tag_word(t) for t in tags))


def _tag_word(tag: int | str) -> int:
    if isinstance(tag, str):
        digest = hashlib.sha256(tag.encode("utf-8")).digest()
        return int.from_bytes(digest[:4], "little")
    return int(tag)
