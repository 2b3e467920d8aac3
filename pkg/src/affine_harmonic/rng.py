"""Counter-based random streams.

Trajectory ``i`` of an experiment with seed ``s`` reads the words
``mix64(key + k * GOLDEN)``, ``k = 1, 2, ...`` where ``key = stream_key(s, i)``
and ``mix64`` is the SplitMix64 finalizer.  Nothing is shared between
trajectories, so any partition of the trajectory indices over workers produces
the same draws.  The pure-Python reader below and the compiled kernels in
:mod:`.kernels` consume words identically.
"""
from __future__ import annotations

import hashlib

MASK = (1 << 64) - 1
GOLDEN = 0x9E3779B97F4A7C15
SUBSTREAM = 0xD1B54A32D192ED03


def mix64(z: int) -> int:
    z &= MASK
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK
    return z ^ (z >> 31)


def stream_key(seed: int, index: int) -> int:
    return mix64(mix64(seed) ^ mix64(index + GOLDEN))


def substream_key(key: int, sub: int) -> int:
    return mix64(key ^ ((sub * SUBSTREAM) & MASK))


def derive_seed(seed: int, *labels) -> int:
    """Stable 64-bit seed for a labelled sub-experiment (e.g. one evaluation point)."""
    h = hashlib.blake2b(digest_size=8)
    h.update(str(seed).encode())
    for lab in labels:
        h.update(b"\x1f")
        h.update(str(lab).encode())
    return int.from_bytes(h.digest(), "little")


def bits_for(d: int) -> int:
    return (d - 1).bit_length()


class CounterStream:
    """Bounded integer draws from one trajectory's word sequence.

    ``draw(d)`` takes ``bits_for(d)`` bits at a time from the low end of each
    word (``64 // bits`` chunks per word, leftover bits discarded) and rejects
    chunks ``>= d``.
    """

    __slots__ = ("key", "counter", "word", "left", "nbits")

    def __init__(self, seed: int, index: int, sub: int | None = None):
        key = stream_key(seed, index)
        self.key = key if sub is None else substream_key(key, sub)
        self.counter = 0
        self.word = 0
        self.left = 0
        self.nbits = 0

    def next_word(self) -> int:
        self.counter += 1
        return mix64(self.key + self.counter * GOLDEN)

    def draw(self, d: int) -> int:
        m = bits_for(d)
        if m == 0:
            return 0
        if m != self.nbits:
            self.nbits = m
            self.left = 0
        mask = (1 << m) - 1
        while True:
            if self.left == 0:
                self.word = self.next_word()
                self.left = 64 // m
            u = self.word & mask
            self.word >>= m
            self.left -= 1
            if u < d:
                return u

    def uniform(self) -> float:
        """53-bit float in (0, 1]."""
        return ((self.next_word() >> 11) + 1) * (1.0 / (1 << 53))


class BitStream:
    """Single bits from the low end of each word, no bits discarded."""

    __slots__ = ("key", "counter", "word", "left")

    def __init__(self, key: int):
        self.key = key
        self.counter = 0
        self.word = 0
        self.left = 0

    def bit(self) -> int:
        if self.left == 0:
            self.counter += 1
            self.word = mix64(self.key + self.counter * GOLDEN)
            self.left = 64
        b = self.word & 1
        self.word >>= 1
        self.left -= 1
        return b

    def bits(self, m: int) -> int:
        """m bits, the first read being the least significant."""
        u = 0
        for i in range(m):
            u |= self.bit() << i
        return u
