"""Dense LU solve over floats or jets.

Pivots are chosen by the magnitude of the constant term, so over the jet
ring the elimination only ever divides by units; higher Taylor coefficients
ride along through the same factorization.
"""
from __future__ import annotations

from collections.abc import Sequence

from quartop.errors import NonUnitPivot, SingularSystem, ZeroDivisor
from quartop.jet import Scalar, value_of


def solve(matrix: Sequence[Sequence[Scalar]], rhs: Sequence[Scalar], tol: float = 1e-12) -> list[Scalar]:
    """Solve ``matrix @ x = rhs`` by Gaussian elimination with partial pivoting.

    ``tol`` is relative to the largest entry of the matrix; a pivot at or
    below it raises :class:`SingularSystem`.
    """
    n = len(matrix)
    a = [list(row) for row in matrix]
    b = list(rhs)
    if any(len(row) != n for row in a) or len(b) != n:
        raise ValueError("solve needs a square system")
    scale = max((abs(value_of(v)) for row in a for v in row), default=0.0)
    if scale == 0.0:
        raise SingularSystem("zero matrix")
    for col in range(n):
        piv = max(range(col, n), key=lambda r: abs(value_of(a[r][col])))
        if abs(value_of(a[piv][col])) <= tol * scale:
            raise SingularSystem(f"pivot {value_of(a[piv][col]):.3g} in column {col} below tolerance")
        if piv != col:
            a[col], a[piv] = a[piv], a[col]
            b[col], b[piv] = b[piv], b[col]
        p = a[col][col]
        for r in range(col + 1, n):
            if value_of(a[r][col]) == 0.0 and not _has_tail(a[r][col]):
                continue
            try:
                f = a[r][col] / p
            except ZeroDivisor as exc:
                raise NonUnitPivot(str(exc)) from exc
            for c in range(col + 1, n):
                a[r][c] = a[r][c] - f * a[col][c]
            b[r] = b[r] - f * b[col]
    x: list[Scalar] = [0.0] * n
    for r in range(n - 1, -1, -1):
        acc = b[r]
        for c in range(r + 1, n):
            acc = acc - a[r][c] * x[c]
        x[r] = acc / a[r][r]
    return x


def _has_tail(v: Scalar) -> bool:
    coeffs = getattr(v, "coeffs", None)
    return coeffs is not None and bool((coeffs != 0.0).any())


def det(matrix: Sequence[Sequence[float]]) -> float:
    """Determinant of a float matrix by the same elimination (for diagnostics)."""
    n = len(matrix)
    a = [[float(v) for v in row] for row in matrix]
    sign = 1.0
    out = 1.0
    for col in range(n):
        piv = max(range(col, n), key=lambda r: abs(a[r][col]))
        if a[piv][col] == 0.0:
            return 0.0
        if piv != col:
            a[col], a[piv] = a[piv], a[col]
            sign = -sign
        out *= a[col][col]
        for r in range(col + 1, n):
            f = a[r][col] / a[col][col]
            for c in range(col + 1, n):
                a[r][c] -= f * a[col][c]
    return sign * out
