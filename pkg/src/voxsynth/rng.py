"""Counter-based, splittable random number streams.

Every stochastic operation in the engine consumes an :class:`RngStream`,
keyed by a 64-bit seed and a 64-bit stream id. Streams with distinct
(seed, id) pairs are statistically independent Philox sequences, and the
same pair always replays identically, which is what makes whole-pipeline
generation a pure function of the seed.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

_MASK64 = (1 << 64) - 1


def splitmix64(x: int) -> int:
    """Finalizer-style 64-bit mix, used to derive child stream ids."""
    x = (x + 0x9E3779B97F4A7C15) & _MASK64
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & _MASK64
    return x ^ (x >> 31)


@dataclass(frozen=True)
class RngStream:
    """A (seed, stream id) pair naming one independent random sequence."""

    seed: int
    stream_id: int = 0

    def generator(self) -> np.random.Generator:
        """Fresh generator at the start of this stream's sequence."""
        key = np.array([self.seed & _MASK64, self.stream_id & _MASK64],
                       dtype=np.uint64)
        return np.random.Generator(np.random.Philox(key=key))

    def child(self, index: int) -> "RngStream":
        """Derive an independent sub-stream, stable under replay."""
        mixed = splitmix64(self.stream_id ^ splitmix64(index + 1))
        return RngStream(self.seed, mixed)

    def child_named(self, name: str) -> "RngStream":
        """Derive a sub-stream from a label, e.g. one per pipeline stage."""
        h = 0
        for byte in name.encode():
            h = splitmix64(h ^ byte)
        return self.child(h)
