"""Deterministic byte streams for protocol randomness.

``Drbg`` expands an integer seed with SHAKE-256 in counter mode.  Every
consumer that needs protocol coins (commitment keys, PCP challenges,
adversary coin flips) reads from one of these so that a run can be replayed
from its seed alone.
"""
from __future__ import annotations

import hashlib

import numpy as np

_BLOCK = 64


class Drbg:
    """Seedable byte stream: block i is SHAKE-256(label || seed || i)."""

    def __init__(self, seed: int | bytes, label: bytes = b"pqkilian.drbg"):
        if isinstance(seed, int):
            if seed < 0:
                raise ValueError("seed must be non-negative")
            seed = seed.to_bytes((seed.bit_length() + 7) // 8 or 1, "big")
        self._prefix = label + b"|" + len(seed).to_bytes(4, "big") + seed
        self._counter = 0
        self._buf = b""

    def _refill(self) -> None:
        h = hashlib.shake_256(self._prefix + self._counter.to_bytes(8, "big"))
        self._buf += h.digest(_BLOCK)
        self._counter += 1

    def read(self, n: int) -> bytes:
        while len(self._buf) < n:
            self._refill()
        out, self._buf = self._buf[:n], self._buf[n:]
        return out

    def getrandbits(self, k: int) -> int:
        if k <= 0:
            return 0
        raw = int.from_bytes(self.read((k + 7) // 8), "big")
        return raw >> (-k % 8)

    def randbelow(self, m: int) -> int:
        if m <= 0:
            raise ValueError("m must be positive")
        k = m.bit_length()
        while True:
            v = self.getrandbits(k)
            if v < m:
                return v

    def random(self) -> float:
        return self.getrandbits(53) / (1 << 53)

    def fork(self, tag: str | bytes) -> "Drbg":
        """Independent child stream; does not advance the parent."""
        if isinstance(tag, str):
            tag = tag.encode()
        return Drbg(self._prefix + b"/" + tag, label=b"pqkilian.fork")

    def numpy(self) -> np.random.Generator:
        return np.random.default_rng(int.from_bytes(self.read(16), "big"))


def as_drbg(rng: Drbg | int | None) -> Drbg:
    if isinstance(rng, Drbg):
        return rng
    return Drbg(0 if rng is None else rng)


def as_generator(rng: np.random.Generator | int | None) -> np.random.Generator:
    if isinstance(rng, np.random.Generator):
        return rng
    return np.random.default_rng(rng)
