"""Random-subset overlap sampling, backed by the compiled kernel when available.

``BACKEND`` is ``"compiled"`` when the Cython extension imported and
``"python"`` otherwise. Set ``AGSC_PURE_PYTHON=1`` to force the fallback.
"""

from __future__ import annotations

import os

import numpy as np

from . import _montecarlo_py

if os.environ.get("AGSC_PURE_PYTHON"):
    _impl = _montecarlo_py
    BACKEND = "python"
else:
    try:
        from . import _montecarlo as _impl  # type: ignore[attr-defined]

        BACKEND = "compiled"
    except ImportError:
        _impl = _montecarlo_py
        BACKEND = "python"


def _check(n: int, size_a: int, size_b: int, iters: int) -> None:
    if n < 1 or not (0 <= size_a <= n) or not (0 <= size_b <= n):
        raise ValueError(f"invalid set sizes {size_a}, {size_b} for {n} neurons")
    if iters < 1:
        raise ValueError("iters must be positive")


def overlap_counts(n: int, size_a: int, size_b: int, iters: int, seed: int, backend: str | None = None) -> np.ndarray:
    """Overlap sizes between a fixed ``size_a``-set and ``iters`` random ``size_b``-subsets.

    By exchangeability this has the same distribution as the overlap of two
    independent uniform random subsets of ``range(n)``.
    """
    _check(n, size_a, size_b, iters)
    impl = {"python": _montecarlo_py, None: _impl}.get(backend)
    if impl is None:
        if backend != "compiled" or BACKEND != "compiled":
            raise ValueError(f"backend {backend!r} unavailable (active: {BACKEND})")
        impl = _impl
    return np.asarray(impl.overlap_counts(n, size_a, size_b, iters, seed & 0xFFFFFFFFFFFFFFFF))
