"""Symmetric covariant differential, quantization and total symbols.

Forms and symbols are stored as fiber-polynomial coefficients indexed by
``t``, the power of the second fiber variable: a degree-``k`` form is
``sum_t w[t] w1^(k-t) w2^t`` and a symbol ``sum_t s[t] p1^(k-t) p2^t``.
"""
from __future__ import annotations

import math
from collections.abc import Mapping, Sequence
from dataclasses import dataclass, field

import numpy as np

from quartop.errors import InsufficientOrder, NotConstantType
from quartop.jet import MAX_ORDER, Jet, Point, Scalar, lift, value_of
from quartop.operator4 import MULTI_INDICES, OperatorField, PointOperator
from quartop.quartic import Quartic, push_form
from quartop.wagner import (
    CONSTANT_TYPE_TOL,
    Christoffel,
    covariant_derivative_symbol,
    invariant_gradient,
    wagner_connection,
)

TOTAL_SYMBOL_ORDER = 5


@dataclass(frozen=True)
class SymForm:
    """A symmetric covariant form of degree ``k`` (``k + 1`` coefficients)."""

    coeffs: tuple

    def __post_init__(self):
        object.__setattr__(self, "coeffs", tuple(self.coeffs))

    @property
    def degree(self) -> int:
        return len(self.coeffs) - 1

    def values(self) -> np.ndarray:
        return np.array([value_of(c) for c in self.coeffs])


@dataclass(frozen=True)
class SymVector:
    """A symmetric contravariant tensor of degree ``k`` (a homogeneous symbol)."""

    coeffs: tuple

    def __post_init__(self):
        object.__setattr__(self, "coeffs", tuple(self.coeffs))

    @property
    def degree(self) -> int:
        return len(self.coeffs) - 1

    @classmethod
    def from_quartic(cls, q: Quartic) -> SymVector:
        return cls(q.poly())

    @classmethod
    def zero(cls, degree: int) -> SymVector:
        return cls((0.0,) * (degree + 1))

    def values(self) -> np.ndarray:
        return np.array([value_of(c) for c in self.coeffs])

    def truncate(self, order: int) -> SymVector:
        return SymVector(tuple(c.truncate(order) if isinstance(c, Jet) else c for c in self.coeffs))

    def pushforward(self, L) -> SymVector:
        """Point values pushed forward by the linear map ``L``."""
        if self.degree == 0:
            return SymVector(self.values())
        return SymVector(push_form(list(self.values()), L))


@dataclass(frozen=True)
class TotalSymbol:
    """``parts[l]`` is the degree-``l`` symbol, ``l = 0..4``."""

    parts: tuple[SymVector, ...]
    connection: Christoffel
    forced: bool = False
    residual: float = 0.0
    extras: dict = field(default_factory=dict, compare=False)

    def __getitem__(self, degree: int) -> SymVector:
        return self.parts[degree]

    def values(self) -> dict[int, list[float]]:
        return {l: [float(v) for v in self.parts[l].values()] for l in range(5)}


# the derivation ------------------------------------------------------------------

class _DiffOp:
    """A differential operator ``sum_g c[g] D^g`` with jet coefficients."""

    __slots__ = ("terms",)

    def __init__(self, terms: Mapping[tuple[int, int], Jet]):
        self.terms = dict(terms)

    def partial(self, direction: int) -> _DiffOp:
        e = (1, 0) if direction == 1 else (0, 1)
        out: dict[tuple[int, int], Jet] = {}
        for g, c in self.terms.items():
            _acc(out, g, c.partial(direction))
            _acc(out, (g[0] + e[0], g[1] + e[1]), c)
        return _DiffOp(out)

    def __add__(self, other: _DiffOp) -> _DiffOp:
        out = dict(self.terms)
        for g, c in other.terms.items():
            _acc(out, g, c)
        return _DiffOp(out)

    def __mul__(self, s: Scalar) -> _DiffOp:
        return _DiffOp({g: c * s for g, c in self.terms.items()})

    __rmul__ = __mul__

    def __neg__(self) -> _DiffOp:
        return _DiffOp({g: -c for g, c in self.terms.items()})


def _acc(d: dict, key, value) -> None:
    d[key] = d[key] + value if key in d else value


def _sum(items):
    items = list(items)
    out = items[0]
    for v in items[1:]:
        out = out + v
    return out


def symmetrized(G: Christoffel) -> list[list[list[Jet]]]:
    """``Gs[k][i][j] = (G^k_{ij} + G^k_{ji}) / 2``."""
    return [[[(G.G[k][i][j] + G.G[k][j][i]) * 0.5 for j in range(2)] for i in range(2)] for k in range(2)]


def _dsym_coeffs(coeffs: Sequence, Gs) -> list:
    """One application of ``sum w_i d_i - sum Gs^k_ij w_i w_j d/dw_k``."""
    k = len(coeffs) - 1
    out: list = [[] for _ in range(k + 2)]
    for t, c in enumerate(coeffs):
        out[t].append(c.partial(1))
        out[t + 1].append(c.partial(2))
    for kk in range(2):
        # d/dw_kk of the form, then times the quadratic Gs^kk(w, w)
        quad = (Gs[kk][0][0], Gs[kk][0][1] + Gs[kk][1][0], Gs[kk][1][1])
        for t, c in enumerate(coeffs):
            if kk == 0:
                mult, tt = k - t, t
            else:
                mult, tt = t, t - 1
            if mult == 0:
                continue
            for s, gq in enumerate(quad):
                out[tt + s].append(-(mult * gq) * c)
    return [_sum(parts) for parts in out]


def dsym(omega: SymForm, G: Christoffel) -> SymForm:
    """Symmetric covariant differential; degree rises by one, jet order drops by one."""
    for c in omega.coeffs:
        if not isinstance(c, Jet) or c.order < 1:
            raise InsufficientOrder("dsym needs form coefficients as jets of order >= 1")
    return SymForm(tuple(_dsym_coeffs(omega.coeffs, symmetrized(G))))


def pair(sigma: SymVector, omega: SymForm) -> Scalar:
    """``sum_t (k-t)! t! s[t] w[t]``."""
    k = sigma.degree
    if omega.degree != k:
        raise ValueError(f"cannot pair a degree-{k} symbol with a degree-{omega.degree} form")
    return _sum(math.factorial(k - t) * math.factorial(t) * s * w
                for t, (s, w) in enumerate(zip(sigma.coeffs, omega.coeffs)))


def quantize(sigma: SymVector, G: Christoffel, h: Jet) -> Scalar:
    """``Q(sigma)(h) = (1/k!) <sigma, dsym^k h>`` as a jet of order ``h.order - k``."""
    k = sigma.degree
    if h.order < k:
        raise InsufficientOrder(f"quantizing a degree-{k} symbol needs h of order >= {k}")
    omega = SymForm((h,))
    for _ in range(k):
        omega = dsym(omega, G)
    return pair(sigma, omega) / math.factorial(k)


def quantize_coeffs(sigma: SymVector, G: Christoffel) -> PointOperator:
    """Coefficient jets of the operator ``Q(sigma)``.

    The derivation is run on operator-valued forms, so each form coefficient
    is a differential operator acting on the (implicit) argument ``h``.
    """
    k = sigma.degree
    if k > 4:
        raise ValueError("degree above 4")
    base = G.base
    top = G.order + k
    one = Jet.constant(1.0, min(top, MAX_ORDER), base)
    omega = [_DiffOp({(0, 0): one})]
    Gs = symmetrized(G)
    for _ in range(k):
        omega = _dsym_coeffs(omega, Gs)
    weights = [math.factorial(k - t) * math.factorial(t) / math.factorial(k) for t in range(k + 1)]
    raw: dict[tuple[int, int], Scalar] = {}
    for t, (s, op) in enumerate(zip(sigma.coeffs, omega)):
        for g, c in op.terms.items():
            _acc(raw, g, weights[t] * s * c)
    order = min(c.order for c in raw.values() if isinstance(c, Jet))
    return PointOperator.from_raw({g: raw.get(g, 0.0) for g in MULTI_INDICES}, order, base)


def homogeneous_part(A: PointOperator, degree: int) -> SymVector:
    """The degree-``degree`` coefficients read as a symbol (raw coefficients)."""
    return SymVector(tuple(A.raw((degree - t, t)) for t in range(degree + 1)))


def _lift_symbol(sigma: SymVector, order: int, base: Point) -> SymVector:
    return SymVector(tuple(lift(c, order, base) for c in sigma.coeffs))


# total symbol ----------------------------------------------------------------------

def total_symbol(A: OperatorField | PointOperator, p: Point | None = None, force: bool = False,
                 order: int = TOTAL_SYMBOL_ORDER) -> TotalSymbol:
    """Peel ``sigma_4 .. sigma_0`` off ``A`` by subtracting quantizations.

    Needs a regular constant-type principal symbol at the base point; with
    ``force`` the non-constant case is computed anyway and the violation of
    the parallelism equations is reported in ``residual``.
    """
    if isinstance(A, OperatorField):
        if p is None:
            raise ValueError("a point is required for an expression-valued operator")
        A = A.at(p, order)
    if A.order < 2:
        raise InsufficientOrder("total symbol needs coefficient jets of order >= 2")
    q = A.principal_symbol()
    gx, gy, k0 = invariant_gradient(q)
    grad = float(np.hypot(gx, gy))
    non_constant = grad > CONSTANT_TYPE_TOL * (1.0 + abs(k0))
    if non_constant and not force:
        raise NotConstantType(f"|dK| = {grad:.3g} at {A.base}; the symbol is not of constant type")
    G = wagner_connection(q)
    residual = float(np.abs(np.vectorize(value_of)(covariant_derivative_symbol(q, G))).max())
    parts: list[SymVector] = [SymVector.zero(0)] * 5
    rest = A
    for deg in range(4, 0, -1):
        sigma = homogeneous_part(rest, deg)
        parts[deg] = sigma
        rest = rest - quantize_coeffs(sigma, G)
    parts[0] = homogeneous_part(rest, 0)
    return TotalSymbol(tuple(parts), G, forced=non_constant, residual=residual,
                       extras={"dK": grad})


def reconstruct(ts: TotalSymbol) -> PointOperator:
    """``sum_l Q(sigma_l)`` as coefficient jets."""
    return _sum(quantize_coeffs(ts.parts[l], ts.connection) for l in range(5))
