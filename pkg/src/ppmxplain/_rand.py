"""Seeded, name-keyed random streams.

Every stochastic component draws from its own stream derived from the run
seed plus string tags (e.g. the column name), so results do not depend on
iteration order and are reproducible bit-for-bit.
"""

from __future__ import annotations

import hashlib

import numpy as np


def _tag_int(tag) -> int:
    digest = hashlib.sha256(str(tag).encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "big")


def rng_stream(seed: int, *tags) -> np.random.Generator:
    entropy = [int(seed) & 0xFFFFFFFFFFFFFFFF] + [_tag_int(t) for t in tags]
    return np.random.default_rng(np.random.SeedSequence(entropy))
