"""Seeded counter-based random streams.

Every random draw in the package comes from ``stream(seed, *keys)``: a
Philox generator whose key is derived from the run seed and a path of
labels, so sub-tasks get independent streams regardless of the order in
which they run.
"""

import zlib

import numpy as np


def _label_to_int(label: int | str) -> int:
    if isinstance(label, int):
        return label
    return zlib.crc32(label.encode("utf-8"))


def stream(seed: int, *keys: int | str) -> np.random.Generator:
    """Independent generator for the sub-task named by ``keys``."""
    sequence = np.random.SeedSequence(entropy=seed, spawn_key=tuple(_label_to_int(k) for k in keys))
    return np.random.Generator(np.random.Philox(sequence))
