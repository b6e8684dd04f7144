"""Counter-based random streams.

A :class:`RandomStream` is an immutable ``(master_seed, path)`` descriptor.
Uniform variates are a pure function of the stream key and an integer
counter, so results never depend on evaluation order or worker count.
The block cipher is Philox4x32-10 (Salmon et al., SC'11), vectorised over
numpy ``uint64`` arrays.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

_M0 = np.uint64(0xD2511F53)
_M1 = np.uint64(0xCD9E8D57)
_W0 = 0x9E3779B9
_W1 = 0xBB67AE85
_MASK32 = np.uint64(0xFFFFFFFF)
_SHIFT32 = np.uint64(32)
_ROUNDS = 10


def philox4x32(counter, key):
    """Philox4x32-10 block function.

    ``counter`` is a sequence of four broadcastable integer arrays (32-bit
    words), ``key`` a pair of python ints.  Returns four ``uint64`` arrays
    holding the 32-bit output words.
    """
    c0, c1, c2, c3 = (np.asarray(c, dtype=np.uint64) & _MASK32 for c in counter)
    c0, c1, c2, c3 = np.broadcast_arrays(c0, c1, c2, c3)
    k0, k1 = int(key[0]) & 0xFFFFFFFF, int(key[1]) & 0xFFFFFFFF
    for _ in range(_ROUNDS):
        p0 = _M0 * c0
        p1 = _M1 * c2
        hi0, lo0 = p0 >> _SHIFT32, p0 & _MASK32
        hi1, lo1 = p1 >> _SHIFT32, p1 & _MASK32
        c0, c1, c2, c3 = (
            hi1 ^ c1 ^ np.uint64(k0),
            lo1,
            hi0 ^ c3 ^ np.uint64(k1),
            lo0,
        )
        k0 = (k0 + _W0) & 0xFFFFFFFF
        k1 = (k1 + _W1) & 0xFFFFFFFF
    return c0, c1, c2, c3


def _words_to_unit(a, b):
    # 53-bit mantissa, offset by half an ulp so 0 and 1 are never produced
    hi = (a >> np.uint64(5)).astype(np.float64)
    lo = (b >> np.uint64(6)).astype(np.float64)
    return (hi * 67108864.0 + lo + 0.5) / 9007199254740992.0


@dataclass(frozen=True)
class RandomStream:
    """Immutable handle on a reproducible substream.

    Attributes
    ----------
    master_seed : int
        64-bit master seed.
    path : tuple of int
        Substream coordinates; distinct paths give independent keys.
    """

    master_seed: int
    path: tuple[int, ...] = ()

    def __post_init__(self):
        if not 0 <= int(self.master_seed) < 2**64:
            raise ValueError(f"master_seed must be a 64-bit unsigned integer, got {self.master_seed}")
        path = tuple(int(p) for p in self.path)
        if any(p < 0 for p in path):
            raise ValueError(f"substream path entries must be non-negative, got {path}")
        object.__setattr__(self, "path", path)

    def substream(self, index: int) -> "RandomStream":
        return substream(self, index)

    @cached_property
    def key(self) -> tuple[int, int]:
        seq = np.random.SeedSequence(int(self.master_seed), spawn_key=self.path)
        k = seq.generate_state(2, dtype=np.uint32)
        return int(k[0]), int(k[1])

    def uniforms(self, rows, cols=0, slot=0):
        """Uniform(0, 1) variates addressed by ``(rows, cols, slot)``.

        Each coordinate is a non-negative integer (< 2**32); arrays broadcast.
        The same address always returns the same value.
        """
        slot = np.asarray(slot, dtype=np.uint64)
        w = philox4x32((rows, cols, slot >> np.uint64(1), 0x5EED), self.key)
        odd = (slot & np.uint64(1)).astype(bool)
        a = np.where(odd, w[2], w[0])
        b = np.where(odd, w[3], w[1])
        return _words_to_unit(a, b)

    def uniform_block(self, n: int, slot: int = 0):
        """``n`` uniforms at counters ``0..n-1`` for one slot."""
        return self.uniforms(np.arange(n, dtype=np.uint64), 0, slot)

    def generator(self) -> np.random.Generator:
        """A numpy Generator keyed by this stream, for inherently sequential work."""
        return np.random.Generator(np.random.Philox(key=np.array(self.key, dtype=np.uint64)))


def substream(stream: RandomStream, index: int) -> RandomStream:
    """Child stream whose path is ``stream.path + (index,)``."""
    return RandomStream(stream.master_seed, stream.path + (int(index),))
