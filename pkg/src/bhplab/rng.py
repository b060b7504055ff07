"""Counter-based splittable random number streams.

Built on numpy's Philox bit generator: the (seed, stream) pair is folded
into the 128-bit Philox key, so distinct stream ids give statistically
independent sequences and every draw is reproducible from
(seed, stream, position) alone.  Streams are cheap value objects; the
actual generator is created lazily and never shared.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

_MASK64 = (1 << 64) - 1


@dataclass(frozen=True)
class RngStream:
    """Handle naming one reproducible random stream."""

    seed: int
    stream: int = 0

    def __post_init__(self):
        if not (0 <= self.seed <= _MASK64):
            raise ValueError("seed must fit in 64 bits")
        if self.stream < 0:
            raise ValueError("stream id must be nonnegative")

    def generator(self) -> np.random.Generator:
        """Fresh generator positioned at the start of this stream."""
        key = (self.seed << 64) | (self.stream & _MASK64)
        # fold any overflow of the stream id back into the key
        key ^= (self.stream >> 64) & _MASK64
        return np.random.Generator(np.random.Philox(key=key))

    def substream(self, i: int) -> "RngStream":
        """Derived stream i; substreams of distinct streams never collide."""
        return RngStream(self.seed, self.stream * 1_000_003 + i + 1)

    def partition(self, k: int) -> list["RngStream"]:
        """k disjoint worker streams for parallel estimation."""
        return [self.substream(i) for i in range(k)]
