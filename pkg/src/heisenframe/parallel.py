"""Deterministic fan-out over torus points and fixed-order reductions.

Per-point work is pure, so the only way a worker count could leak into the
output is through reduction order.  Reductions here use a fixed pairwise
scheme over the point-ordered values, and fan-out preserves input order, so
reports are bit-identical for any number of jobs.
"""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from typing import Callable, Iterable, Sequence

import numpy as np


def chunk_slices(n: int, n_chunks: int = 32) -> list[slice]:
    """Split range(n) into at most n_chunks contiguous slices, fixed layout."""
    n_chunks = max(1, min(n, n_chunks))
    bounds = np.linspace(0, n, n_chunks + 1).astype(int)
    return [slice(int(a), int(b)) for a, b in zip(bounds[:-1], bounds[1:]) if b > a]


def deterministic_map(fn: Callable, items: Sequence, jobs: int = 1) -> list:
    """Order-preserving map; a process pool is used only when jobs > 1."""
    items = list(items)
    if jobs is None or jobs <= 1 or len(items) <= 1:
        return [fn(it) for it in items]
    with ProcessPoolExecutor(max_workers=int(jobs)) as ex:
        return list(ex.map(fn, items))


def pairwise_sum(values: Iterable):
    """Fixed-order pairwise summation of scalars (floats or complex)."""
    vals = list(values)
    if not vals:
        return 0.0
    while len(vals) > 1:
        nxt = [vals[i] + vals[i + 1] for i in range(0, len(vals) - 1, 2)]
        if len(vals) % 2:
            nxt.append(vals[-1])
        vals = nxt
    return vals[0]
