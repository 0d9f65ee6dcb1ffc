"""Truncated bivariate Taylor expansions (jets) and their arithmetic.

A :class:`Jet` of order ``m`` at a base point ``(x0, y0)`` stores the Taylor
coefficients ``d^i_x d^j_y f / (i! j!)`` for ``i + j <= m``.  Jets form a
commutative ring under truncated multiplication; units are the jets with a
nonzero constant term.  Every algorithm in the package that needs derivatives
runs over jets instead of floats.
"""
from __future__ import annotations

import math
from collections.abc import Callable, Iterable, Mapping
from typing import Union

import numpy as np

from quartop import _kernels
from quartop._kernels import tables
from quartop.errors import (
    BasePointMismatch,
    DomainError,
    InsufficientOrder,
    SingularLinearPart,
    ZeroDivisor,
)

DEFAULT_ORDER = 6
MAX_ORDER = tables.MAX_ORDER
UNIT_TOL = 1e-10
BASE_TOL = 1e-12

Point = tuple[float, float]
Scalar = Union[float, "Jet"]


def _same_point(p: Point, q: Point) -> bool:
    return all(math.isclose(a, b, rel_tol=BASE_TOL, abs_tol=BASE_TOL) for a, b in zip(p, q))


class Jet:
    """Order-``m`` Taylor jet of a function of ``(x, y)`` at ``base``."""

    __slots__ = ("_c", "order", "base")
    __array_priority__ = 1000  # keep numpy scalars from hijacking binary ops

    def __init__(self, coeffs: Iterable[float] | np.ndarray, order: int, base: Point = (0.0, 0.0)):
        if not 0 <= order <= MAX_ORDER:
            raise ValueError(f"jet order must lie in [0, {MAX_ORDER}], got {order}")
        c = np.array(coeffs, dtype=np.float64)
        if c.shape != (tables.size(order),):
            raise ValueError(f"order {order} needs {tables.size(order)} coefficients, got {c.shape}")
        c.flags.writeable = False
        self._c = c
        self.order = order
        self.base = (float(base[0]), float(base[1]))

    # construction -----------------------------------------------------------
    @classmethod
    def _raw(cls, c: np.ndarray, order: int, base: Point) -> Jet:
        obj = cls.__new__(cls)
        c.flags.writeable = False
        obj._c = c
        obj.order = order
        obj.base = base
        return obj

    @classmethod
    def constant(cls, value: float, order: int = DEFAULT_ORDER, base: Point = (0.0, 0.0)) -> Jet:
        c = np.zeros(tables.size(order))
        c[0] = value
        return cls._raw(c, order, (float(base[0]), float(base[1])))

    @classmethod
    def variable(cls, which: int | str, order: int = DEFAULT_ORDER, base: Point = (0.0, 0.0)) -> Jet:
        """Jet of the coordinate function ``x`` (1) or ``y`` (2) at ``base``."""
        k = {"x": 1, "y": 2}.get(which, which)  # type: ignore[arg-type]
        if k not in (1, 2):
            raise ValueError(f"unknown coordinate {which!r}")
        c = np.zeros(tables.size(order))
        c[0] = base[k - 1]
        if order >= 1:
            c[k] = 1.0
        return cls._raw(c, order, (float(base[0]), float(base[1])))

    @classmethod
    def from_dict(cls, coeffs: Mapping[tuple[int, int], float], order: int,
                  base: Point = (0.0, 0.0)) -> Jet:
        """Build from Taylor coefficients keyed by multi-index; omitted keys are 0."""
        c = np.zeros(tables.size(order))
        for (i, j), v in coeffs.items():
            if i + j <= order:
                c[tables.index(i, j)] = v
        return cls._raw(c, order, (float(base[0]), float(base[1])))

    @classmethod
    def from_function(cls, fn: Callable[["Jet", "Jet"], Scalar], order: int = DEFAULT_ORDER,
                      base: Point = (0.0, 0.0)) -> Jet:
        """Evaluate ``fn(x, y)`` over jets of the coordinate functions."""
        out = fn(cls.variable(1, order, base), cls.variable(2, order, base))
        return lift(out, order, base)

    # access -----------------------------------------------------------------
    @property
    def coeffs(self) -> np.ndarray:
        return self._c

    @property
    def value(self) -> float:
        return float(self._c[0])

    def coeff(self, i: int, j: int) -> float:
        if i < 0 or j < 0 or i + j > self.order:
            raise IndexError(f"multi-index ({i}, {j}) outside order {self.order}")
        return float(self._c[tables.index(i, j)])

    def derivative(self, i: int, j: int) -> float:
        """The partial derivative ``d^i_x d^j_y f`` at the base point."""
        return self.coeff(i, j) * math.factorial(i) * math.factorial(j)

    def gradient(self) -> tuple[float, float]:
        if self.order < 1:
            raise InsufficientOrder("gradient needs a jet of order >= 1")
        return float(self._c[1]), float(self._c[2])

    def as_dict(self) -> dict[tuple[int, int], float]:
        ex, ey = tables.exponents(self.order)
        return {(int(i), int(j)): float(v) for i, j, v in zip(ex, ey, self._c)}

    def truncate(self, order: int) -> Jet:
        if order > self.order:
            raise InsufficientOrder(f"cannot raise jet order {self.order} to {order}")
        if order == self.order:
            return self
        return Jet._raw(self._c[: tables.size(order)].copy(), order, self.base)

    def at_order(self, order: int) -> Jet:
        """Truncate, or zero-pad when ``order`` exceeds the stored order."""
        if order <= self.order:
            return self.truncate(order)
        c = np.zeros(tables.size(order))
        c[: self._c.size] = self._c
        return Jet._raw(c, order, self.base)

    def __call__(self, dx: float, dy: float) -> float:
        """Evaluate the Taylor polynomial at displacement ``(dx, dy)``."""
        ex, ey = tables.exponents(self.order)
        return float(np.sum(self._c * dx**ex * dy**ey))

    def partial(self, direction: int) -> Jet:
        return jet_partial(self, direction)

    def is_close(self, other: Scalar, rel: float = 1e-12, abs_: float = 1e-12) -> bool:
        other = lift(other, self.order, self.base)
        m = min(self.order, other.order)
        a = self._c[: tables.size(m)]
        b = other._c[: tables.size(m)]
        return bool(np.all(np.abs(a - b) <= abs_ + rel * np.maximum(np.abs(a), np.abs(b))))

    # arithmetic -------------------------------------------------------------
    def _coerce(self, other: object) -> tuple[np.ndarray, np.ndarray, int] | None:
        if isinstance(other, Jet):
            if not _same_point(self.base, other.base):
                raise BasePointMismatch(f"jets at {self.base} and {other.base}")
            m = min(self.order, other.order)
            n = tables.size(m)
            return self._c[:n], other._c[:n], m
        if isinstance(other, (int, float, np.floating, np.integer)):
            c = np.zeros(self._c.size)
            c[0] = float(other)
            return self._c, c, self.order
        return None

    def __add__(self, other: object) -> Jet:
        co = self._coerce(other)
        if co is None:
            return NotImplemented
        a, b, m = co
        return Jet._raw(a + b, m, self.base)

    __radd__ = __add__

    def __sub__(self, other: object) -> Jet:
        co = self._coerce(other)
        if co is None:
            return NotImplemented
        a, b, m = co
        return Jet._raw(a - b, m, self.base)

    def __rsub__(self, other: object) -> Jet:
        co = self._coerce(other)
        if co is None:
            return NotImplemented
        a, b, m = co
        return Jet._raw(b - a, m, self.base)

    def __neg__(self) -> Jet:
        return Jet._raw(-self._c, self.order, self.base)

    def __pos__(self) -> Jet:
        return self

    def __mul__(self, other: object) -> Jet:
        if isinstance(other, (int, float, np.floating, np.integer)):
            return Jet._raw(self._c * float(other), self.order, self.base)
        co = self._coerce(other)
        if co is None:
            return NotImplemented
        a, b, m = co
        return Jet._raw(_kernels.mul(a, b, m), m, self.base)

    __rmul__ = __mul__

    def __truediv__(self, other: object) -> Jet:
        if isinstance(other, (int, float, np.floating, np.integer)):
            if abs(float(other)) <= UNIT_TOL:
                raise ZeroDivisor("division by a scalar that vanishes")
            return Jet._raw(self._c / float(other), self.order, self.base)
        if not isinstance(other, Jet):
            return NotImplemented
        return jet_div(self, other)

    def __rtruediv__(self, other: object) -> Jet:
        co = self._coerce(other)
        if co is None:
            return NotImplemented
        return jet_div(Jet._raw(co[1].copy(), co[2], self.base), self)

    def __pow__(self, n: object) -> Jet:
        if isinstance(n, (int, np.integer)) or (isinstance(n, float) and n.is_integer()):
            return _int_power(self, int(n))
        if isinstance(n, (float, np.floating)):
            return jpow(self, float(n))
        return NotImplemented

    def __repr__(self) -> str:
        head = ", ".join(f"{v:.6g}" for v in self._c[:6])
        more = ", ..." if self._c.size > 6 else ""
        return f"Jet(order={self.order}, base={self.base}, coeffs=[{head}{more}])"

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Jet):
            return NotImplemented
        return (self.order == other.order and self.base == other.base
                and bool(np.array_equal(self._c, other._c)))

    __hash__ = None  # type: ignore[assignment]


def _int_power(a: Jet, n: int) -> Jet:
    if n < 0:
        return jet_div(Jet.constant(1.0, a.order, a.base), _int_power(a, -n))
    result = Jet.constant(1.0, a.order, a.base)
    base = a
    while n:
        if n & 1:
            result = result * base
        n >>= 1
        if n:
            base = base * base
    return result


# scalar helpers shared by code generic over float | Jet ---------------------

def is_jet(x: object) -> bool:
    return isinstance(x, Jet)


def value_of(x: Scalar) -> float:
    return x.value if isinstance(x, Jet) else float(x)


def lift(x: Scalar, order: int, base: Point) -> Jet:
    """Promote a float to a constant jet; jets pass through unchanged."""
    if isinstance(x, Jet):
        return x
    return Jet.constant(float(x), order, base)


def common_frame(values: Iterable[Scalar]) -> tuple[int, Point] | None:
    """``(order, base)`` shared by the jets among ``values``; None if all floats."""
    order, base = None, None
    for v in values:
        if isinstance(v, Jet):
            order = v.order if order is None else min(order, v.order)
            base = v.base if base is None else base
    if order is None:
        return None
    return order, base  # type: ignore[return-value]


# ring operations under their interface names ---------------------------------

def jet_mul(a: Jet, b: Jet) -> Jet:
    return a * b


def jet_div(a: Jet, b: Jet, tol: float = UNIT_TOL) -> Jet:
    """``a / b``; ``b`` must be a unit (constant term above ``tol``)."""
    if not _same_point(a.base, b.base):
        raise BasePointMismatch(f"jets at {a.base} and {b.base}")
    if abs(b._c[0]) <= tol:
        raise ZeroDivisor(f"divisor has constant term {b._c[0]:.3g}, not a unit")
    m = min(a.order, b.order)
    n = tables.size(m)
    return Jet._raw(_kernels.div(a._c[:n], b._c[:n], m), m, a.base)


def jet_partial(f: Jet, direction: int) -> Jet:
    """Formal partial derivative in x (1) or y (2); the order drops by one."""
    if direction not in (1, 2):
        raise ValueError("direction must be 1 or 2")
    if f.order < 1:
        raise InsufficientOrder("partial derivative of an order-0 jet")
    dst, src, factor = tables.partial_map(f.order, direction)
    return Jet._raw(f._c[src] * factor, f.order - 1, f.base)


def series(f: Jet, taylor: Iterable[float]) -> Jet:
    """``g(f)`` for a univariate ``g`` given by its Taylor coefficients at ``f.value``."""
    t = list(taylor)[: f.order + 1]
    t += [0.0] * (f.order + 1 - len(t))
    h = f - f.value
    out = Jet.constant(t[-1], f.order, f.base)
    for k in range(f.order - 1, -1, -1):
        out = out * h + t[k]
    return out


# elementary functions generic over float | Jet -------------------------------

def jexp(a: Scalar) -> Scalar:
    if not isinstance(a, Jet):
        return math.exp(a)
    e = math.exp(a.value)
    return series(a, [e / math.factorial(k) for k in range(a.order + 1)])


def jlog(a: Scalar) -> Scalar:
    v = value_of(a)
    if v <= 0.0:
        raise DomainError(f"log of non-positive value {v:.6g}")
    if not isinstance(a, Jet):
        return math.log(a)
    t = [math.log(v)] + [(-1) ** (k + 1) / (k * v**k) for k in range(1, a.order + 1)]
    return series(a, t)


def jsin(a: Scalar) -> Scalar:
    if not isinstance(a, Jet):
        return math.sin(a)
    s, c = math.sin(a.value), math.cos(a.value)
    cyc = [s, c, -s, -c]
    return series(a, [cyc[k % 4] / math.factorial(k) for k in range(a.order + 1)])


def jcos(a: Scalar) -> Scalar:
    if not isinstance(a, Jet):
        return math.cos(a)
    s, c = math.sin(a.value), math.cos(a.value)
    cyc = [c, -s, -c, s]
    return series(a, [cyc[k % 4] / math.factorial(k) for k in range(a.order + 1)])


def jpow(a: Scalar, r: float) -> Scalar:
    """``a**r`` for real ``r``; needs a positive base unless ``r`` is an integer."""
    if float(r).is_integer():
        return a ** int(r) if isinstance(a, Jet) else float(a) ** int(r)
    v = value_of(a)
    if v <= 0.0:
        raise DomainError(f"non-integer power {r} of non-positive value {v:.6g}")
    if not isinstance(a, Jet):
        return v**r
    t = []
    coef = 1.0
    for k in range(a.order + 1):
        t.append(coef * v ** (r - k))
        coef *= (r - k) / (k + 1)
    return series(a, t)


def jsqrt(a: Scalar) -> Scalar:
    v = value_of(a)
    if v < 0.0 or (v == 0.0 and isinstance(a, Jet) and a.order > 0):
        raise DomainError(f"sqrt of value {v:.6g} (not differentiable there)")
    if not isinstance(a, Jet):
        return math.sqrt(v)
    return jpow(a, 0.5)


# maps ------------------------------------------------------------------------

class MapJet:
    """Jet of a planar map ``(phi1, phi2)`` at a common base point."""

    __slots__ = ("phi1", "phi2")

    def __init__(self, phi1: Jet, phi2: Jet):
        if not _same_point(phi1.base, phi2.base):
            raise BasePointMismatch("map components at different base points")
        m = min(phi1.order, phi2.order)
        self.phi1 = phi1.truncate(m)
        self.phi2 = phi2.truncate(m)

    @classmethod
    def identity(cls, order: int, base: Point) -> MapJet:
        return cls(Jet.variable(1, order, base), Jet.variable(2, order, base))

    @property
    def order(self) -> int:
        return self.phi1.order

    @property
    def base(self) -> Point:
        return self.phi1.base

    @property
    def value(self) -> Point:
        return (self.phi1.value, self.phi2.value)

    def __iter__(self):
        return iter((self.phi1, self.phi2))

    def __getitem__(self, k: int) -> Jet:
        return (self.phi1, self.phi2)[k]

    def linear_part(self) -> np.ndarray:
        """Jacobian matrix ``[[d1 phi1, d2 phi1], [d1 phi2, d2 phi2]]``."""
        if self.order < 1:
            raise InsufficientOrder("linear part needs order >= 1")
        return np.array([[self.phi1.coeffs[1], self.phi1.coeffs[2]],
                         [self.phi2.coeffs[1], self.phi2.coeffs[2]]])

    def invertible(self, tol: float = UNIT_TOL) -> bool:
        return abs(float(np.linalg.det(self.linear_part()))) > tol

    def truncate(self, order: int) -> MapJet:
        return MapJet(self.phi1.truncate(order), self.phi2.truncate(order))

    def __repr__(self) -> str:
        return f"MapJet(order={self.order}, base={self.base}, value={self.value})"


def jet_compose(f: Jet, phi: MapJet) -> Jet:
    """Jet of ``f o phi`` at the base of ``phi``; ``f`` must sit at ``phi``'s value."""
    if not _same_point(f.base, phi.value):
        raise BasePointMismatch(f"f is based at {f.base} but phi maps to {phi.value}")
    m = min(f.order, phi.order)
    n = tables.size(m)
    x = phi.phi1.coeffs[:n].copy()
    y = phi.phi2.coeffs[:n].copy()
    x[0] = 0.0
    y[0] = 0.0
    grid = np.zeros((m + 1, m + 1))
    ex, ey = tables.exponents(m)
    grid[ex, ey] = f.coeffs[:n]
    return Jet._raw(_kernels.compose(grid, x, y, m), m, phi.base)


def compose_maps(phi: MapJet, psi: MapJet) -> MapJet:
    """The map jet of ``phi o psi``."""
    return MapJet(jet_compose(phi.phi1, psi), jet_compose(phi.phi2, psi))


def jet_invert_map(phi: MapJet, tol: float = UNIT_TOL) -> MapJet:
    """Inverse map jet, based at ``phi.value``, by fixed-point iteration."""
    m = phi.order
    lin = phi.linear_part()
    if abs(float(np.linalg.det(lin))) <= tol:
        raise SingularLinearPart(f"Jacobian determinant {np.linalg.det(lin):.3g} at {phi.base}")
    linv = np.linalg.inv(lin)
    p, q = phi.base, phi.value
    k1 = Jet.variable(1, m, q) - q[0]
    k2 = Jet.variable(2, m, q) - q[1]
    # nonlinear remainders of phi - q, as bivariate coefficient grids
    ex, ey = tables.exponents(m)
    grids = []
    for comp in phi:
        c = comp.coeffs.copy()
        c[:3] = 0.0
        g = np.zeros((m + 1, m + 1))
        g[ex, ey] = c
        grids.append(g)
    h1 = linv[0, 0] * k1 + linv[0, 1] * k2
    h2 = linv[1, 0] * k1 + linv[1, 1] * k2
    for _ in range(m):
        n1 = Jet._raw(_kernels.compose(grids[0], h1.coeffs, h2.coeffs, m), m, q)
        n2 = Jet._raw(_kernels.compose(grids[1], h1.coeffs, h2.coeffs, m), m, q)
        r1, r2 = k1 - n1, k2 - n2
        h1 = linv[0, 0] * r1 + linv[0, 1] * r2
        h2 = linv[1, 0] * r1 + linv[1, 1] * r2
    return MapJet(h1 + p[0], h2 + p[1])
