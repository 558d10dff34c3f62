"""Deterministic RNG substream derivation.

Every stochastic component draws from its own named substream so that
adding or removing draws in one component never shifts another. Substream
seeds are derived by hashing (master seed, name path), which is stable
across processes and Python versions.
"""

from __future__ import annotations

import hashlib
import random


def substream_seed(master_seed: int, *names: object) -> int:
    """Derive a 64-bit child seed from a master seed and a name path."""
    h = hashlib.sha256()
    h.update(str(int(master_seed)).encode())
    for name in names:
        h.update(b"/")
        h.update(str(name).encode())
    return int.from_bytes(h.digest()[:8], "big")


def substream(master_seed: int, *names: object) -> random.Random:
    """A ``random.Random`` seeded from the named substream."""
    return random.Random(substream_seed(master_seed, *names))
