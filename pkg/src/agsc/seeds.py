"""Labelled derivation of stage seeds from one master seed."""

from __future__ import annotations

import hashlib

import numpy as np


def derive_seed(master: int, *labels) -> int:
    """A 64-bit seed fixed by ``master`` and the label path, independent of call order."""
    digest = hashlib.sha256("\x1f".join(str(x) for x in labels).encode("utf-8")).digest()
    words = [int.from_bytes(digest[i : i + 4], "little") for i in range(0, 16, 4)]
    seq = np.random.SeedSequence([int(master) & 0xFFFFFFFFFFFFFFFF, *words])
    return int(seq.generate_state(1, dtype=np.uint64)[0])


def derive_rng(master: int, *labels) -> np.random.Generator:
    return np.random.default_rng(derive_seed(master, *labels))
