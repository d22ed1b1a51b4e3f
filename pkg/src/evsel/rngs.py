"""Deterministic random-stream derivation.

Every random draw in the package flows from a single integer seed through
named substreams, so runs are reproducible regardless of execution order
or thread scheduling.
"""

from __future__ import annotations

import hashlib

import numpy as np


def derive_rng(seed: int, *parts: object) -> np.random.Generator:
    """Return an independent generator keyed by ``seed`` and a label path.

    The key is hashed with SHA-256, so streams for different label paths are
    independent and stable across platforms and numpy versions.
    """
    label = "/".join(str(p) for p in parts)
    digest = hashlib.sha256(f"{seed}/{label}".encode("utf-8")).digest()
    return np.random.default_rng(int.from_bytes(digest[:16], "little"))
