# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled jet kernels: truncated product, quotient and Horner substitution."""
import numpy as np

from quartop._kernels import tables

_cache = {}


cdef class _Tables:
    cdef public object p_arr, q_arr, r_arr, offsets, sp_arr, sq_arr, sr_arr, soffsets
    cdef const long long[::1] p
    cdef const long long[::1] q
    cdef const long long[::1] r
    cdef const long long[::1] off
    cdef const long long[::1] sp
    cdef const long long[::1] sq
    cdef const long long[::1] soff
    cdef Py_ssize_t n
    cdef Py_ssize_t npairs

    def __init__(self, int order):
        self.p_arr, self.q_arr, self.r_arr, self.offsets = tables.product_pairs(order)
        self.p = self.p_arr
        self.q = self.q_arr
        self.r = self.r_arr
        self.off = self.offsets
        self.sp_arr, self.sq_arr, self.sr_arr, self.soffsets = tables.symmetric_pairs(order)
        self.sp = self.sp_arr
        self.sq = self.sq_arr
        self.soff = self.soffsets
        self.n = tables.size(order)
        self.npairs = self.p_arr.shape[0]


cdef _Tables _get(int order):
    t = _cache.get(order)
    if t is None:
        t = _Tables(order)
        _cache[order] = t
    return <_Tables>t


cdef inline void _mul_into(const double[::1] a, const double[::1] b, double[::1] out,
                           _Tables t) noexcept nogil:
    cdef Py_ssize_t k, s, i, j
    cdef double acc
    for k in range(t.n):
        acc = 0.0
        for s in range(t.soff[k], t.soff[k + 1]):
            i = t.sp[s]
            j = t.sq[s]
            if i == j:
                acc = acc + a[i] * b[i]
            else:
                acc = acc + (a[i] * b[j] + a[j] * b[i])
        out[k] = acc


def mul(const double[::1] a, const double[::1] b, int order):
    cdef _Tables t = _get(order)
    out = np.empty(t.n, dtype=np.float64)
    cdef double[::1] o = out
    _mul_into(a, b, o, t)
    return out


def div(const double[::1] a, const double[::1] b, int order):
    cdef _Tables t = _get(order)
    out = np.empty(t.n, dtype=np.float64)
    cdef double[::1] c = out
    cdef double b0 = b[0]
    cdef Py_ssize_t k, s
    cdef double acc
    with nogil:
        for k in range(t.n):
            acc = a[k]
            for s in range(t.off[k], t.off[k + 1]):
                # q == 0 pairs b0 with the unknown c[k] itself
                if t.q[s] != 0:
                    acc = acc - b[t.q[s]] * c[t.p[s]]
            c[k] = acc / b0
    return out


def compose(const double[:, ::1] f, const double[::1] x, const double[::1] y, int order):
    """Sum of ``f[i, j] * x**i * y**j`` over ``i + j <= order``.

    ``x`` and ``y`` must have zero constant terms.
    """
    cdef _Tables t = _get(order)
    cdef Py_ssize_t n = t.n
    res_arr = np.zeros(n, dtype=np.float64)
    inner_arr = np.zeros(n, dtype=np.float64)
    tmp_arr = np.zeros(n, dtype=np.float64)
    cdef double[::1] res = res_arr
    cdef double[::1] inner = inner_arr
    cdef double[::1] tmp = tmp_arr
    cdef Py_ssize_t i, j, k
    with nogil:
        for i in range(order, -1, -1):
            for k in range(n):
                inner[k] = 0.0
            for j in range(order - i, -1, -1):
                _mul_into(inner, y, tmp, t)
                for k in range(n):
                    inner[k] = tmp[k]
                inner[0] = inner[0] + f[i, j]
            _mul_into(res, x, tmp, t)
            for k in range(n):
                res[k] = tmp[k] + inner[k]
    return res_arr
