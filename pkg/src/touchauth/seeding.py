"""Stable sub-seed derivation.

Every random stage draws from its own generator whose seed is a hash of the
master seed and a stage label, so results do not depend on evaluation order
or worker count.
"""
import hashlib

import numpy as np


def derive_seed(master_seed, *parts):
    """Return a 63-bit seed from ``master_seed`` and any labels."""
    h = hashlib.sha256(str(int(master_seed)).encode())
    for p in parts:
        h.update(b"\x1f")
        h.update(str(p).encode())
    return int.from_bytes(h.digest()[:8], "little") >> 1


def rng(master_seed, *parts):
    return np.random.default_rng(derive_seed(master_seed, *parts))
