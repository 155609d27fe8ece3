"""Objective and diagnostic metrics.

The per-sample cost is  0.5 ||D z - x||^2 + lambda ||z||_1  and the
dataset objective is its average over samples, accumulated with
pairwise summation so large n does not erode precision.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from typing import NamedTuple, Sequence, Union

import numpy as np

from .core import (
    DataSet,
    Dictionary,
    DimensionMismatch,
    Empty,
    Sample,
    SparseCode,
    as_vector,
    thread_cap,
)


def sample_objective(
    D: Dictionary, z: SparseCode, x: Union[Sample, np.ndarray], lam: float
) -> float:
    """Penalized reconstruction cost of one sample under code ``z``."""
    xv = as_vector(x)
    if xv.size != D.p:
        raise DimensionMismatch(f"sample length {xv.size} != atom length {D.p}")
    if z.m != D.m:
        raise DimensionMismatch(f"code ambient {z.m} != atom count {D.m}")
    if z.nnz:
        r = xv - D.atoms[:, z.indices] @ z.values
        penalty = lam * float(np.abs(z.values).sum())
    else:
        r = xv
        penalty = 0.0
    return 0.5 * float(r @ r) + penalty


def objective(
    D: Dictionary,
    codes: Sequence[SparseCode],
    ds: DataSet,
    lam: float,
    workers: Union[int, None] = None,
) -> float:
    """Dataset-average objective.

    ``workers`` defaults to the SCC_THREADS cap; per-sample terms land
    in fixed slots and are summed pairwise afterwards, so the result
    does not depend on the worker count.
    """
    if len(codes) != ds.n:
        raise DimensionMismatch(f"{len(codes)} codes for {ds.n} samples")
    n = ds.n
    terms = np.empty(n)
    if workers is None:
        workers = thread_cap()
    if workers > 1 and n > 1:
        def fill(lo: int, hi: int) -> None:
            for i in range(lo, hi):
                terms[i] = sample_objective(D, codes[i], ds.column(i), lam)
        chunk = (n + workers - 1) // workers
        bounds = [(lo, min(lo + chunk, n)) for lo in range(0, n, chunk)]
        with ThreadPoolExecutor(max_workers=workers) as pool:
            list(pool.map(lambda be: fill(*be), bounds))
    else:
        for i in range(n):
            terms[i] = sample_objective(D, codes[i], ds.column(i), lam)
    return float(np.sum(terms) / n)


class SparsityStats(NamedTuple):
    mean_support: float
    max_support: int
    histogram: np.ndarray  # histogram[s] = number of codes with support size s


def sparsity_stats(codes: Sequence[SparseCode]) -> SparsityStats:
    """Exact support-size statistics of a code collection."""
    if len(codes) == 0:
        raise Empty("no codes")
    sizes = np.array([c.nnz for c in codes], dtype=np.int64)
    return SparsityStats(
        mean_support=float(sizes.mean()),
        max_support=int(sizes.max()),
        histogram=np.bincount(sizes),
    )


def max_pool(codes: Sequence[SparseCode]) -> np.ndarray:
    """Coordinate-wise maximum of |z_j| over a group of codes.

    Codes are signed, so pooling works on magnitudes; coordinates no
    code uses stay zero.
    """
    if len(codes) == 0:
        raise Empty("no codes to pool")
    m = codes[0].m
    out = np.zeros(m)
    for c in codes:
        if c.m != m:
            raise DimensionMismatch(f"code ambient {c.m} != {m}")
        if c.nnz:
            np.maximum.at(out, c.indices, np.abs(c.values))
    return out
