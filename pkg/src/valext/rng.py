"""Reproducible random streams keyed by (seed, module tag, shard).

Each stream is a Philox counter-based generator seeded from a
:class:`numpy.random.SeedSequence` over the key, so any shard can be
regenerated in isolation and results are fixed for a given shard count.
"""
import os
import zlib

import numpy as np

__all__ = ["stream", "shard_sizes", "default_shards", "SHARDS_ENV"]

SHARDS_ENV = "VALEXT_SHARDS"
_MASK32 = 0xFFFFFFFF


def _tag_id(tag):
    return zlib.crc32(tag.encode()) if isinstance(tag, str) else int(tag)


def stream(seed, tag="", shard=0):
    """Generator for one (seed, tag, shard) key; ``seed`` may be any 64-bit integer."""
    seed = int(seed) & 0xFFFFFFFFFFFFFFFF
    key = [seed & _MASK32, seed >> 32, _tag_id(tag), int(shard)]
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(key)))


def shard_sizes(total, shards):
    """Split ``total`` samples into ``shards`` near-equal deterministic parts."""
    if shards < 1:
        raise ValueError("shard count must be positive")
    base, extra = divmod(int(total), int(shards))
    return [base + (1 if s < extra else 0) for s in range(shards)]


def default_shards():
    raw = os.environ.get(SHARDS_ENV, "1")
    try:
        value = int(raw)
    except ValueError as exc:
        raise ValueError(f"{SHARDS_ENV} must be a positive integer, got {raw!r}") from exc
    if value < 1:
        raise ValueError(f"{SHARDS_ENV} must be a positive integer, got {raw!r}")
    return value
