"""Deterministic derivation of independent RNG streams from one master seed.

Child streams are keyed by a domain tag ("net", "adv", "link:3", ...), so
adding or removing one consumer never perturbs the draws of any other.
"""

from __future__ import annotations

import hashlib

import numpy as np


def derive_rng(seed: int, tag: str) -> np.random.Generator:
    """Return the child generator for (seed, tag)."""
    digest = hashlib.blake2b(f"{seed}:{tag}".encode(), digest_size=16).digest()
    return np.random.default_rng(int.from_bytes(digest, "big"))
