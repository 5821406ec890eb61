"""Seeded random streams.

A root seed fans out into child streams identified by string labels
("main", "estimator", "test-set", ...) and optional integer indices, so
adding or reordering consumers never perturbs another consumer's draws.
"""

from __future__ import annotations

import zlib

import numpy as np


def _label_key(label: str) -> int:
    return zlib.crc32(label.encode("utf-8"))


def stream(seed: int, label: str, *index: int) -> np.random.Generator:
    """Return the generator for ``(seed, label, *index)``."""
    entropy = [int(seed), _label_key(label), *(int(i) for i in index)]
    return np.random.default_rng(np.random.SeedSequence(entropy))


def as_generator(rng: np.random.Generator | int | None) -> np.random.Generator:
    if isinstance(rng, np.random.Generator):
        return rng
    return np.random.default_rng(rng)
