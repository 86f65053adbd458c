"""Reductions with a fixed evaluation order.

BLAS dot products may split work differently depending on the thread count,
which changes the last bits of the result.  These helpers sum fixed-size
chunks with numpy's pairwise summation and combine the partials with
``math.fsum``, so the answer depends only on the data.
"""
from __future__ import annotations

import math
import os

import numpy as np

CHUNK = 1 << 16


def dot(a: np.ndarray, b: np.ndarray) -> float:
    a = a.reshape(-1)
    b = b.reshape(-1)
    return math.fsum(float(np.sum(a[s:s + CHUNK] * b[s:s + CHUNK]))
                     for s in range(0, a.size, CHUNK))


def total(a: np.ndarray) -> float:
    a = a.reshape(-1)
    return math.fsum(float(np.sum(a[s:s + CHUNK])) for s in range(0, a.size, CHUNK))


def norm(a: np.ndarray) -> float:
    return math.sqrt(dot(a, a))


def worker_count() -> int:
    """Threads for operations that are bit-stable under parallel splitting
    (multi-dimensional FFTs parallelise over independent 1D transforms)."""
    for key in ("NEUBOX_THREADS", "OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS"):
        val = os.environ.get(key)
        if val and val.isdigit() and int(val) > 0:
            return int(val)
    return 1
