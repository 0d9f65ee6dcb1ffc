"""Index tables for bivariate truncated Taylor coefficients.

Coefficients of an order-``m`` jet live in a flat float64 array of length
``(m+1)(m+2)/2`` in graded order: degree 0, then degree 1 as ``(1,0), (0,1)``,
then ``(2,0), (1,1), (0,2)`` and so on.  Within a degree the y-exponent grows.
"""
from __future__ import annotations

from functools import lru_cache

import numpy as np

MAX_ORDER = 14


def size(order: int) -> int:
    return (order + 1) * (order + 2) // 2


def index(i: int, j: int) -> int:
    d = i + j
    return d * (d + 1) // 2 + j


@lru_cache(maxsize=None)
def exponents(order: int) -> tuple[np.ndarray, np.ndarray]:
    """Arrays ``(I, J)`` with the x- and y-exponent of every flat slot."""
    ii, jj = [], []
    for d in range(order + 1):
        for j in range(d + 1):
            ii.append(d - j)
            jj.append(j)
    i_arr = np.array(ii, dtype=np.int64)
    j_arr = np.array(jj, dtype=np.int64)
    i_arr.flags.writeable = False
    j_arr.flags.writeable = False
    return i_arr, j_arr


@lru_cache(maxsize=None)
def product_pairs(order: int) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """Triples ``(p, q, r)`` with slot p times slot q landing in slot r.

    Sorted by ``r``; ``offsets[r]:offsets[r+1]`` delimits the pairs feeding
    slot ``r`` (CSR layout, used by the quotient recurrence).
    """
    ex, ey = exponents(order)
    n = size(order)
    ps, qs, rs = [], [], []
    for r in range(n):
        ti, tj = int(ex[r]), int(ey[r])
        for p in range(n):
            pi, pj = int(ex[p]), int(ey[p])
            if pi > ti or pj > tj:
                continue
            ps.append(p)
            qs.append(index(ti - pi, tj - pj))
            rs.append(r)
    p_arr = np.array(ps, dtype=np.int64)
    q_arr = np.array(qs, dtype=np.int64)
    r_arr = np.array(rs, dtype=np.int64)
    offsets = np.searchsorted(r_arr, np.arange(n + 1)).astype(np.int64)
    for arr in (p_arr, q_arr, r_arr, offsets):
        arr.flags.writeable = False
    return p_arr, q_arr, r_arr, offsets


@lru_cache(maxsize=None)
def symmetric_pairs(order: int) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """The pairs of :func:`product_pairs` with ``p <= q``, same CSR layout.

    Summing ``a[p]*b[q] + a[q]*b[p]`` per unordered pair makes the product
    bitwise symmetric in its arguments.
    """
    p_all, q_all, r_all, _ = product_pairs(order)
    keep = p_all <= q_all
    p_arr, q_arr, r_arr = p_all[keep], q_all[keep], r_all[keep]
    offsets = np.searchsorted(r_arr, np.arange(size(order) + 1)).astype(np.int64)
    for arr in (p_arr, q_arr, r_arr, offsets):
        arr.flags.writeable = False
    return p_arr, q_arr, r_arr, offsets


@lru_cache(maxsize=None)
def partial_map(order: int, direction: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Source slots and multipliers for a formal partial derivative.

    Returns ``(dst, src, factor)`` over the order ``order-1`` result:
    ``out[dst] = factor * coeffs[src]``.
    """
    ex, ey = exponents(order - 1)
    dst = np.arange(size(order - 1), dtype=np.int64)
    if direction == 1:
        src = np.array([index(i + 1, j) for i, j in zip(ex, ey)], dtype=np.int64)
        factor = (ex + 1).astype(np.float64)
    else:
        src = np.array([index(i, j + 1) for i, j in zip(ex, ey)], dtype=np.int64)
        factor = (ey + 1).astype(np.float64)
    for arr in (dst, src, factor):
        arr.flags.writeable = False
    return dst, src, factor
