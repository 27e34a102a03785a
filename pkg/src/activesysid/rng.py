"""Deterministic, splittable random streams.

Every stochastic operation in the package takes an explicit :class:`RngStream`.
Streams are backed by the counter-based Philox generator, so a (seed,
spawn-key) pair identifies the full draw sequence: the same seed reproduces
the same draws run after run, and independent substreams can be derived for
parallel work without any shared mutable state.
"""

from __future__ import annotations

import hashlib

import numpy as np

__all__ = ["RngStream"]


def _key_to_int(key: int | str) -> int:
    """Map a substream key to a stable 32-bit integer."""
    if isinstance(key, bool):
        raise TypeError("bool is not a valid substream key")
    if isinstance(key, int):
        if key < 0:
            raise ValueError("integer substream keys must be non-negative")
        return key % (2**32)
    digest = hashlib.sha256(key.encode("utf-8")).digest()
    return int.from_bytes(digest[:4], "little")


class RngStream:
    """A named, reproducible random stream.

    ``substream(*keys)`` derives an independent child stream purely from
    (seed, keys); it does not consume or mutate this stream, so the order in
    which substreams are created never affects their draws.
    """

    def __init__(self, seed: int, _spawn_key: tuple[int, ...] = ()):
        self.seed = int(seed)
        self.spawn_key = _spawn_key
        seq = np.random.SeedSequence(entropy=self.seed, spawn_key=_spawn_key)
        self._gen = np.random.Generator(np.random.Philox(seq))

    def substream(self, *keys: int | str) -> "RngStream":
        if not keys:
            raise ValueError("substream requires at least one key")
        mapped = tuple(_key_to_int(k) for k in keys)
        return RngStream(self.seed, self.spawn_key + mapped)

    @property
    def generator(self) -> np.random.Generator:
        return self._gen

    def normal(self, size=None) -> np.ndarray:
        return self._gen.standard_normal(size=size)

    def uniform(self, low=0.0, high=1.0, size=None) -> np.ndarray:
        return self._gen.uniform(low, high, size=size)

    def integers(self, low, high=None, size=None) -> np.ndarray:
        return self._gen.integers(low, high, size=size)

    def choice(self, n: int, size=None, replace: bool = True) -> np.ndarray:
        return self._gen.choice(n, size=size, replace=replace)

    def __repr__(self) -> str:
        return f"RngStream(seed={self.seed}, spawn_key={self.spawn_key})"
