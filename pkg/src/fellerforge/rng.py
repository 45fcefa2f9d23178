"""Counter-based random streams.

Every stream is a Philox generator keyed by ``(seed, stream_id)``; the two
64-bit halves of the 128-bit key are the seed and the stream id, so distinct
pairs never share a key.  Engines hand one stream to each fixed-size block of
paths, which makes ensembles independent of how blocks are scheduled.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

_MASK64 = (1 << 64) - 1


def _splitmix64(z: int) -> int:
    z = (z + 0x9E3779B97F4A7C15) & _MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return z ^ (z >> 31)


@dataclass(frozen=True)
class RngStream:
    """A reproducible random substream.

    Parameters
    ----------
    seed : int
        Experiment seed (reduced modulo 2**64).
    stream_id : int
        Substream identifier (reduced modulo 2**64).
    """

    seed: int
    stream_id: int = 0

    def __post_init__(self):
        object.__setattr__(self, "seed", int(self.seed) & _MASK64)
        object.__setattr__(self, "stream_id", int(self.stream_id) & _MASK64)

    @property
    def key(self) -> int:
        return (self.seed << 64) | self.stream_id

    def generator(self) -> np.random.Generator:
        """Fresh generator positioned at the start of the stream."""
        return np.random.Generator(np.random.Philox(key=self.key))

    def child(self, index: int) -> "RngStream":
        """Derive a sub-substream; deterministic in ``(stream_id, index)``."""
        mixed = _splitmix64(self.stream_id ^ _splitmix64(int(index) + 1))
        return RngStream(self.seed, mixed)


def as_generator(rng) -> np.random.Generator:
    """Accept an RngStream, a Generator or an int seed."""
    if isinstance(rng, np.random.Generator):
        return rng
    if isinstance(rng, RngStream):
        return rng.generator()
    if isinstance(rng, (int, np.integer)):
        return RngStream(int(rng)).generator()
    raise TypeError(f"cannot build a generator from {type(rng).__name__}")
