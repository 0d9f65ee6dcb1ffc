"""Pure numpy fallback for the compiled jet kernels (same signatures)."""
from __future__ import annotations

import numpy as np

from quartop._kernels import tables


def mul(a: np.ndarray, b: np.ndarray, order: int) -> np.ndarray:
    p, q, r, _ = tables.symmetric_pairs(order)
    w = a[p] * b[q] + a[q] * b[p]
    w[p == q] *= 0.5
    return np.bincount(r, weights=w, minlength=tables.size(order))


def div(a: np.ndarray, b: np.ndarray, order: int) -> np.ndarray:
    # a/b = (a/b0) * sum_n (-h)^n with h = (b - b0)/b0 nilpotent
    b0 = b[0]
    h = -b / b0
    h[0] = 0.0
    inv = np.zeros(tables.size(order))
    inv[0] = 1.0
    for _ in range(order):
        inv = mul(inv, h, order)
        inv[0] += 1.0
    return mul(a, inv, order) / b0


def compose(f: np.ndarray, x: np.ndarray, y: np.ndarray, order: int) -> np.ndarray:
    n = tables.size(order)
    res = np.zeros(n)
    for i in range(order, -1, -1):
        inner = np.zeros(n)
        for j in range(order - i, -1, -1):
            inner = mul(inner, y, order)
            inner[0] += f[i, j]
        res = mul(res, x, order) + inner
    return res
