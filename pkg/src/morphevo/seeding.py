"""Seed derivation: every random stream is a pure function of the base seed.

``derive_seed(base, "cross", run, ordinal)`` hashes the path through
:class:`numpy.random.SeedSequence` (string parts are mapped with CRC-32), so
streams for different runs and purposes never share state and no ambient
entropy is ever read.
"""

from __future__ import annotations

import zlib

import numpy as np


def _key(part) -> int:
    if isinstance(part, str):
        return zlib.crc32(part.encode())
    part = int(part)
    if part < 0:
        raise ValueError("seed path components must be non-negative")
    return part


def derive_seed(base: int, *path) -> int:
    ss = np.random.SeedSequence(int(base), spawn_key=tuple(_key(p) for p in path))
    return int(ss.generate_state(1, dtype=np.uint64)[0] >> np.uint64(1))
