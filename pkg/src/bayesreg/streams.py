"""Deterministic random-number substreams.

Every stochastic routine in the package draws from a generator created by
``substream(seed, *path)``.  The path is a tuple of small integers and/or
short strings identifying the consumer (e.g. step, grid index, replicate),
so concurrent evaluation order can never change the numbers a given
consumer sees.
"""

from __future__ import annotations

import zlib

import numpy as np

__all__ = ["substream"]


def _as_key(part) -> int:
    if isinstance(part, str):
        return zlib.crc32(part.encode("utf-8"))
    value = int(part)
    if value < 0:
        raise ValueError(f"stream path parts must be nonnegative, got {part!r}")
    return value


def substream(seed: int, *path) -> np.random.Generator:
    """Generator for the (seed, path) stream; identical path, identical draws."""
    key = tuple(_as_key(p) for p in path)
    return np.random.default_rng(np.random.SeedSequence(entropy=int(seed), spawn_key=key))
