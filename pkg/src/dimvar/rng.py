"""Deterministic random streams.

Every Monte Carlo routine draws from a counter-based Philox generator whose
key is derived from a user seed plus a tuple of string/int labels naming the
call site (operation name, body description, trial index, ...).  Two runs with
the same seed and labels produce identical streams regardless of call order,
which is what makes report files byte-reproducible.
"""

from __future__ import annotations

import hashlib

import numpy as np

__all__ = ["stream"]


def _key_words(seed: int, labels: tuple) -> np.ndarray:
    h = hashlib.sha256()
    h.update(str(int(seed)).encode())
    for lab in labels:
        h.update(b"\x1f")
        h.update(str(lab).encode())
    digest = h.digest()
    return np.frombuffer(digest[:16], dtype=np.uint64)

def stream(seed: int, *labels) -> np.random.Generator:
    """Return a Generator keyed by ``seed`` and the label tuple."""
    return np.random.Generator(np.random.Philox(key=_key_words(seed, labels)))
