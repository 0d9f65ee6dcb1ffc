"""Binary quartics in binomial normalization.

A :class:`Quartic` ``(a0, ..., a4)`` stands for the symmetric 4-vector whose
fiber polynomial is ``a0 px^4 + 4 a1 px^3 py + 6 a2 px^2 py^2 + 4 a3 px py^3
+ a4 py^4``.  Coefficients may be floats or jets; every invariant below is a
polynomial or rational expression and evaluates over either.
"""
from __future__ import annotations

import enum
import math
from fractions import Fraction
from collections.abc import Sequence
from dataclasses import dataclass

import numpy as np

from quartop.errors import PoleAtI2Zero, SingularLinearMap, ZeroQuartic
from quartop.jet import Scalar, value_of

BINOMIAL4 = (1, 4, 6, 4, 1)
ROOT_CLUSTER_RADIUS = 1e-7
DEGENERATE_TOL = 1e-10
POLE_TOL = 1e-10


@dataclass(frozen=True)
class Quartic:
    a0: Scalar
    a1: Scalar
    a2: Scalar
    a3: Scalar
    a4: Scalar

    @classmethod
    def from_poly(cls, s: Sequence[Scalar]) -> Quartic:
        """From plain polynomial coefficients ``s_k`` of ``px^(4-k) py^k``."""
        return cls(*(s[k] / BINOMIAL4[k] for k in range(5)))

    @property
    def coeffs(self) -> tuple[Scalar, Scalar, Scalar, Scalar, Scalar]:
        return (self.a0, self.a1, self.a2, self.a3, self.a4)

    def poly(self) -> tuple[Scalar, ...]:
        """Plain coefficients ``(a0, 4a1, 6a2, 4a3, a4)``."""
        return tuple(w * a for w, a in zip(BINOMIAL4, self.coeffs))

    def tensor(self, *indices: int) -> Scalar:
        """Component ``a^{i1 i2 i3 i4}`` with indices in {1, 2}."""
        if len(indices) != 4 or any(i not in (1, 2) for i in indices):
            raise ValueError("need four indices from {1, 2}")
        return self.coeffs[sum(1 for i in indices if i == 2)]

    def values(self) -> Quartic:
        return Quartic(*(value_of(a) for a in self.coeffs))

    def scale(self) -> float:
        return max(abs(value_of(a)) for a in self.coeffs)

    def __call__(self, u: Scalar, v: Scalar) -> Scalar:
        """The fiber polynomial at the covector ``(u, v)``."""
        a0, a1, a2, a3, a4 = self.coeffs
        return a0 * u**4 + 4 * a1 * u**3 * v + 6 * a2 * u**2 * v**2 + 4 * a3 * u * v**3 + a4 * v**4

    def __add__(self, other: Quartic) -> Quartic:
        return Quartic(*(a + b for a, b in zip(self.coeffs, other.coeffs)))

    def __mul__(self, c: Scalar) -> Quartic:
        return Quartic(*(a * c for a in self.coeffs))

    __rmul__ = __mul__


@dataclass(frozen=True)
class QuadForm:
    """The quadratic factor ``alpha0 dx^2 + 2 alpha1 dx.dy + alpha2 dy^2``."""

    alpha0: Scalar
    alpha1: Scalar
    alpha2: Scalar


class RootKind(str, enum.Enum):
    FOUR_REAL_DISTINCT = "FourRealDistinct"
    TWO_REAL_TWO_COMPLEX = "TwoRealTwoComplex"
    FOUR_COMPLEX_DISTINCT = "FourComplexDistinct"
    DEGENERATE = "Degenerate"


@dataclass(frozen=True)
class RootClass:
    kind: RootKind
    multiplicities: tuple[int, ...] = (1, 1, 1, 1)

    def __str__(self) -> str:
        if self.kind is RootKind.DEGENERATE:
            return f"Degenerate{self.multiplicities}"
        return self.kind.value


def _exact_coeffs(q: Quartic) -> list[Fraction] | None:
    """Float coefficients as exact rationals, or None for jets and non-finite values."""
    if not all(isinstance(c, (float, int, np.floating, np.integer)) for c in q.coeffs):
        return None
    if not all(math.isfinite(c) for c in q.coeffs):
        return None
    return [Fraction(float(c)) for c in q.coeffs]


def _invariants(a: Sequence) -> tuple:
    a0, a1, a2, a3, a4 = a
    i2 = a0 * a4 - 4 * a1 * a3 + 3 * a2 * a2
    i3 = a0 * a2 * a4 - a0 * a3 * a3 - a1 * a1 * a4 + 2 * a1 * a2 * a3 - a2 * a2 * a2
    return i2, i3


def hilbert_invariants(q: Quartic) -> tuple[Scalar, Scalar]:
    """The degree-2 and degree-3 relative invariants ``(I2, I3)``.

    Float input is evaluated exactly and rounded once, since both are
    differences of nearly equal products near the discriminant locus.
    """
    exact = _exact_coeffs(q)
    if exact is None:
        return _invariants(q.coeffs)
    i2, i3 = _invariants(exact)
    return float(i2), float(i3)


def discriminant(q: Quartic) -> Scalar:
    """``I2^3 - 27 I3^2``; the classical resultant discriminant is 256 times this."""
    exact = _exact_coeffs(q)
    i2, i3 = _invariants(q.coeffs if exact is None else exact)
    d = i2 * i2 * i2 - 27 * i3 * i3
    return d if exact is None else float(d)


def is_regular(q: Quartic, tol: float = DEGENERATE_TOL) -> bool:
    """Scale-invariant test ``|D| > tol * max|a_i|^6`` on the point values."""
    qv = q.values()
    s = qv.scale()
    return s > 0 and abs(discriminant(qv)) > tol * s**6


def absolute_invariant(q: Quartic, tol: float = POLE_TOL) -> Scalar:
    """``I0 = I3^2 / I2^3``, unchanged by every invertible linear substitution."""
    exact = _exact_coeffs(q)
    i2, i3 = _invariants(q.coeffs if exact is None else exact)
    if abs(value_of(i2)) <= tol * max(q.scale(), 1e-300) ** 2:
        raise PoleAtI2Zero(f"I2 = {float(value_of(i2)):.3g} vanishes; I0 has a pole")
    i0 = i3 * i3 / (i2 * i2 * i2)
    return i0 if exact is None else float(i0)


# root structure --------------------------------------------------------------

def fiber_roots(q: Quartic, tol: float = 1e-12) -> tuple[list[complex], int]:
    """Projective roots of the fiber polynomial.

    Dehomogenizes in whichever of ``px/py`` or ``py/px`` has the larger leading
    coefficient and returns ``(finite roots, multiplicity of the chart's point
    at infinity)``.
    """
    poly = [value_of(c) for c in q.poly()]
    scale = max(abs(c) for c in poly)
    if scale == 0.0:
        raise ZeroQuartic("all coefficients vanish")
    if abs(poly[0]) < abs(poly[4]):
        poly = poly[::-1]
    at_infinity = 0
    while at_infinity < 4 and abs(poly[at_infinity]) <= tol * scale:
        at_infinity += 1
    c = np.array(poly[at_infinity:], dtype=float)
    deg = len(c) - 1
    if deg == 0:
        return [], at_infinity
    comp = np.zeros((deg, deg))
    comp[0, :] = -c[1:] / c[0]
    comp[1:, :-1] = np.eye(deg - 1)
    return list(np.linalg.eigvals(comp)), at_infinity


def _cluster(roots: list[complex], radius: float) -> list[list[complex]]:
    clusters: list[list[complex]] = []
    for r in roots:
        for cl in clusters:
            if any(abs(r - s) <= radius * (1.0 + max(abs(r), abs(s))) for s in cl):
                cl.append(r)
                break
        else:
            clusters.append([r])
    return clusters


def classify_roots(q: Quartic, radius: float = ROOT_CLUSTER_RADIUS,
                   tol: float = DEGENERATE_TOL) -> RootClass:
    """Root structure from companion-matrix eigenvalues, clustered at ``radius``."""
    roots, at_inf = fiber_roots(q)
    clusters = _cluster(roots, radius)
    mult = sorted([len(c) for c in clusters] + ([at_inf] if at_inf else []), reverse=True)
    regular = is_regular(q, tol)
    if max(mult) > 1 or not regular:
        r = radius
        while max(mult) == 1 and r < 1e-2:
            # higher multiplicities scatter eigenvalues by eps^(1/k)
            r *= 10.0
            clusters = _cluster(roots, r)
            mult = sorted([len(c) for c in clusters] + ([at_inf] if at_inf else []), reverse=True)
        return RootClass(RootKind.DEGENERATE, tuple(mult))
    n_real = at_inf + sum(1 for r in roots if abs(r.imag) <= radius * (1.0 + abs(r)))
    if n_real == 4:
        return RootClass(RootKind.FOUR_REAL_DISTINCT)
    if n_real == 2:
        return RootClass(RootKind.TWO_REAL_TWO_COMPLEX)
    return RootClass(RootKind.FOUR_COMPLEX_DISTINCT)


def sign_class(q: Quartic, tol: float = DEGENERATE_TOL) -> str:
    """"positive", "negative" or "zero" for the scale-normalized discriminant."""
    if not is_regular(q, tol):
        return "zero"
    return "positive" if value_of(discriminant(q)) > 0 else "negative"


# factored normal forms ------------------------------------------------------

def from_factored_real(f: QuadForm) -> Quartic:
    """``dx . dy . (alpha0 dx^2 + 2 alpha1 dx.dy + alpha2 dy^2)``."""
    return Quartic(0 * f.alpha0, f.alpha0 / 4, f.alpha1 / 3, f.alpha2 / 4, 0 * f.alpha2)


def from_factored_complex(f: QuadForm) -> Quartic:
    """``(dx^2 + dy^2) . (alpha0 dx^2 + 2 alpha1 dx.dy + alpha2 dy^2)``."""
    return Quartic(f.alpha0, f.alpha1 / 2, (f.alpha0 + f.alpha2) / 6, f.alpha1 / 2, f.alpha2)


def factored_discriminants(f: QuadForm, kind: str) -> Scalar:
    """Closed-form discriminant of a factored symbol, up to a positive factor.

    ``discriminant(from_factored_real(f))`` equals the real-kind value / 64 and
    ``discriminant(from_factored_complex(f))`` the complex-kind value / 16.
    """
    a0, a1, a2 = f.alpha0, f.alpha1, f.alpha2
    if kind == "real":
        return a0 * a0 * a2 * a2 * (a1 * a1 - a0 * a2)
    if kind == "complex":
        t = 4 * a1 * a1 + (a0 - a2) * (a0 - a2)
        return t * t * (a0 * a2 - a1 * a1)
    raise ValueError(f"kind must be 'real' or 'complex', not {kind!r}")


FACTORED_DISCRIMINANT_RATIO = {"real": 1 / 64, "complex": 1 / 16}


# linear action ---------------------------------------------------------------

def _linear_power(u: Scalar, v: Scalar, n: int) -> list[Scalar]:
    """Coefficients of ``(u X + v Y)^n`` in ``X^(n-k) Y^k``."""
    return [math.comb(n, k) * u ** (n - k) * v**k for k in range(n + 1)]


def _poly_mul(p: list[Scalar], q: list[Scalar]) -> list[Scalar]:
    out: list[Scalar] = [0.0] * (len(p) + len(q) - 1)
    for i, a in enumerate(p):
        for j, b in enumerate(q):
            out[i + j] = out[i + j] + a * b
    return out


def substitute_form(s: Sequence[Scalar], P) -> list[Scalar]:
    """Plain coefficients of ``F(P @ (X, Y))`` for the binary form ``F`` with
    coefficients ``s_k`` of ``X^(n-k) Y^k``.

    ``P`` is a 2x2 array-like of scalars (floats or jets).
    """
    n = len(s) - 1
    out: list[Scalar] = [0.0] * (n + 1)
    for k, sk in enumerate(s):
        term = _poly_mul(_linear_power(P[0][0], P[0][1], n - k), _linear_power(P[1][0], P[1][1], k))
        for i in range(n + 1):
            out[i] = out[i] + sk * term[i]
    return out


def push_form(s: Sequence[Scalar], L) -> list[Scalar]:
    """Pushforward of a symmetric n-vector (plain coefficients) by the linear map ``L``."""
    Lt = [[L[0][0], L[1][0]], [L[0][1], L[1][1]]]
    return substitute_form(s, Lt)


def symmetric_power_matrix(L) -> list[list[Scalar]]:
    """Matrix ``M`` with ``act(L, q).coeffs[m] = sum_k M[m][k] * q.coeffs[k]``."""
    cols = []
    for k in range(5):
        basis = [0] * 5
        basis[k] = BINOMIAL4[k]
        cols.append([c / BINOMIAL4[m] for m, c in enumerate(push_form(basis, L))])
    return [[cols[k][m] for k in range(5)] for m in range(5)]


def act(L, q: Quartic, tol: float = 1e-12) -> Quartic:
    """Pushforward of the symmetric 4-vector ``q`` by the linear map ``L``."""
    det = value_of(L[0][0]) * value_of(L[1][1]) - value_of(L[0][1]) * value_of(L[1][0])
    if abs(det) <= tol:
        raise SingularLinearMap(f"determinant {det:.3g}")
    M = symmetric_power_matrix(L)
    return Quartic(*(sum((M[m][k] * q.coeffs[k] for k in range(1, 5)), M[m][0] * q.coeffs[0])
                     for m in range(5)))
