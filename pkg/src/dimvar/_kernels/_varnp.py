"""Pure NumPy variation kernels (fallback when the extension is absent).

Same contracts as the compiled versions in ``_varcy.pyx``; kept in lockstep,
including tie-breaking, so witnesses are identical across backends.
"""

from __future__ import annotations

import numpy as np


def dp_chain(values: np.ndarray, r: float):
    """Best-sum dynamic program over increasing index chains.

    Returns ``(best, parent, length)`` where ``best[i]`` is the largest value
    of ``sum |a[j_{k+1}] - a[j_k]|**r`` over chains ending at ``i``,
    ``parent[i]`` the chosen predecessor (-1 for a chain starting at ``i``)
    and ``length[i]`` the number of points in that chain.  Ties prefer the
    shorter chain, then the smaller predecessor index.
    """
    a = np.asarray(values, dtype=np.complex128)
    n = a.size
    best = np.zeros(n)
    parent = np.full(n, -1, dtype=np.int64)
    length = np.ones(n, dtype=np.int64)
    for i in range(1, n):
        cand = best[:i] + np.abs(a[i] - a[:i]) ** r
        j = int(np.argmax(cand))
        top = cand[j]
        if top > 0.0:
            ties = np.flatnonzero(cand == top)
            j = int(ties[np.argmin(length[ties])])
            best[i] = top
            parent[i] = j
            length[i] = length[j] + 1
    return best, parent, length


def dp_batch(values: np.ndarray, r: float) -> np.ndarray:
    """Row-wise best chain power sum for a batch of paths (no witnesses)."""
    a = np.asarray(values, dtype=np.complex128)
    npaths, n = a.shape
    best = np.zeros((npaths, n))
    for i in range(1, n):
        cand = best[:, :i] + np.abs(a[:, i, None] - a[:, :i]) ** r
        best[:, i] = np.maximum(cand.max(axis=1), 0.0)
    return best.max(axis=1)
