# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled Monte-Carlo kernels for random neuron-set overlaps.

The random stream is counter based (splitmix64 finaliser over
``key + counter * golden``) so the pure-Python fallback in
``_montecarlo_py`` reproduces every draw bit for bit.
"""

import numpy as np
cimport numpy as cnp
from libc.math cimport floor
from libc.stdint cimport uint64_t, int64_t

cdef uint64_t GOLDEN = 0x9E3779B97F4A7C15ULL
cdef double TWO_M53 = 1.0 / 9007199254740992.0


cdef inline uint64_t mix64(uint64_t z) nogil:
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL
    return z ^ (z >> 31)


def stream_key(uint64_t seed):
    return mix64(seed + GOLDEN)


def overlap_counts(Py_ssize_t n, Py_ssize_t size_a, Py_ssize_t size_b,
                   Py_ssize_t iters, uint64_t seed):
    """Overlap of ``{0..size_a-1}`` with ``iters`` uniform ``size_b``-subsets of ``range(n)``."""
    cdef cnp.ndarray[int64_t, ndim=1] out = np.zeros(iters, dtype=np.int64)
    cdef int64_t[::1] out_v = out
    cdef int64_t[::1] chosen = np.empty(max(size_b, 1), dtype=np.int64)
    cdef uint64_t key = mix64(seed + GOLDEN)
    cdef Py_ssize_t i, s, r, j, hits
    cdef int64_t t
    cdef uint64_t x
    cdef bint member
    with nogil:
        for i in range(iters):
            for s in range(size_b):
                j = n - size_b + s
                x = mix64(key + <uint64_t>(i * size_b + s + 1) * GOLDEN)
                t = <int64_t>floor(<double>(x >> 11) * TWO_M53 * <double>(j + 1))
                member = False
                for r in range(s):
                    if chosen[r] == t:
                        member = True
                        break
                chosen[s] = j if member else t
            hits = 0
            for s in range(size_b):
                if chosen[s] < size_a:
                    hits += 1
            out_v[i] = hits
    return out
