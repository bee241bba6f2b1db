"""Counter-based, stream-addressable random number generation.

A :class:`RngSeed` names a position in a tree of independent streams.  The
generator for a node depends only on the root seed and the path to the node,
never on how many draws other nodes made, so restarts and Monte-Carlo
replicates can run in any order (or concurrently) and still reproduce.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class RngSeed:
    seed: int
    stream: tuple[int, ...] = ()

    def __post_init__(self):
        if isinstance(self.stream, (int, np.integer)):
            object.__setattr__(self, "stream", (int(self.stream),))
        else:
            object.__setattr__(self, "stream", tuple(int(s) for s in self.stream))
        if not 0 <= int(self.seed) < 2**64:
            raise ValueError("seed must be a 64-bit unsigned integer")
        if any(s < 0 for s in self.stream):
            raise ValueError("stream indices must be non-negative")

    def child(self, index: int) -> "RngSeed":
        """Sub-stream ``index`` below this node."""
        return RngSeed(self.seed, self.stream + (int(index),))

    def generator(self) -> np.random.Generator:
        ss = np.random.SeedSequence(int(self.seed), spawn_key=self.stream)
        return np.random.Generator(np.random.Philox(ss))


def as_seed(rng) -> RngSeed:
    if isinstance(rng, RngSeed):
        return rng
    return RngSeed(int(rng))
