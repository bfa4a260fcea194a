"""Numpy implementation of the Monte-Carlo kernels (fallback for ``_montecarlo``).

Draws are vectorised across iterations; results are bit-identical to the
compiled kernels.
"""

import numpy as np

GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)
TWO_M53 = 1.0 / 9007199254740992.0
CHUNK = 65536


def _mix64(z: np.ndarray) -> np.ndarray:
    z = (z ^ (z >> np.uint64(30))) * _M1
    z = (z ^ (z >> np.uint64(27))) * _M2
    return z ^ (z >> np.uint64(31))


def stream_key(seed: int) -> int:
    with np.errstate(over="ignore"):
        return int(_mix64(np.array([seed], dtype=np.uint64) + GOLDEN)[0])


def overlap_counts(n: int, size_a: int, size_b: int, iters: int, seed: int) -> np.ndarray:
    key = np.uint64(stream_key(seed))
    out = np.zeros(iters, dtype=np.int64)
    with np.errstate(over="ignore"):
        for lo in range(0, iters, CHUNK):
            idx = np.arange(lo, min(lo + CHUNK, iters), dtype=np.uint64)
            chosen = np.empty((idx.size, size_b), dtype=np.int64)
            for s in range(size_b):
                j = n - size_b + s
                counter = idx * np.uint64(size_b) + np.uint64(s + 1)
                x = _mix64(key + counter * GOLDEN)
                u = (x >> np.uint64(11)).astype(np.float64) * TWO_M53
                t = np.floor(u * float(j + 1)).astype(np.int64)
                member = (chosen[:, :s] == t[:, None]).any(axis=1)
                chosen[:, s] = np.where(member, j, t)
            out[lo : lo + idx.size] = (chosen < size_a).sum(axis=1)
    return out
