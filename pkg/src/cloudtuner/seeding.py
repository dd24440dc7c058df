"""Stable seed derivation.

Python's built-in hash() is salted per process, so reproducibility across
runs (and across thread schedules) needs an explicit scheme: blake2b over
the stringified parts, yielding a 64-bit seed for numpy generators.
"""

from __future__ import annotations

import hashlib

import numpy as np


def derive_seed(*parts) -> int:
    h = hashlib.blake2b(digest_size=8)
    for part in parts:
        h.update(str(part).encode("utf-8"))
        h.update(b"\x1f")
    return int.from_bytes(h.digest(), "big")


def rng_for(*parts) -> np.random.Generator:
    return np.random.default_rng(derive_seed(*parts))
