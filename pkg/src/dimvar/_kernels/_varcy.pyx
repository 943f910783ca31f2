# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled variation kernels.

Mirrors ``_varnp.py`` exactly (including tie-breaking) so the two backends
are interchangeable; see that module for the contracts.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport hypot, pow

cnp.import_array()


def dp_chain(values, double r):
    cdef cnp.ndarray[cnp.complex128_t, ndim=1] a = np.ascontiguousarray(values, dtype=np.complex128)
    cdef Py_ssize_t n = a.shape[0]
    cdef cnp.ndarray[cnp.float64_t, ndim=1] best = np.zeros(n)
    cdef cnp.ndarray[cnp.int64_t, ndim=1] parent = np.full(n, -1, dtype=np.int64)
    cdef cnp.ndarray[cnp.int64_t, ndim=1] length = np.ones(n, dtype=np.int64)
    cdef Py_ssize_t i, j, jbest
    cdef double cand, top, dre, dim
    for i in range(1, n):
        top = 0.0
        jbest = -1
        for j in range(i):
            dre = a[i].real - a[j].real
            dim = a[i].imag - a[j].imag
            cand = best[j] + pow(hypot(dre, dim), r)
            if cand > top or (cand == top and jbest >= 0 and length[j] < length[jbest]):
                top = cand
                jbest = j
        if jbest >= 0 and top > 0.0:
            best[i] = top
            parent[i] = jbest
            length[i] = length[jbest] + 1
    return best, parent, length


def dp_batch(values, double r):
    cdef cnp.ndarray[cnp.complex128_t, ndim=2] a = np.ascontiguousarray(values, dtype=np.complex128)
    cdef Py_ssize_t npaths = a.shape[0], n = a.shape[1]
    cdef cnp.ndarray[cnp.float64_t, ndim=2] best = np.zeros((npaths, n))
    cdef cnp.ndarray[cnp.float64_t, ndim=1] out = np.zeros(npaths)
    cdef Py_ssize_t p, i, j
    cdef double cand, top, dre, dim
    for p in range(npaths):
        top = 0.0
        for i in range(1, n):
            for j in range(i):
                dre = a[p, i].real - a[p, j].real
                dim = a[p, i].imag - a[p, j].imag
                cand = best[p, j] + pow(hypot(dre, dim), r)
                if cand > best[p, i]:
                    best[p, i] = cand
            if best[p, i] > top:
                top = best[p, i]
        out[p] = top
    return out
