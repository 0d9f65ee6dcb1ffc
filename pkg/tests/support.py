"""Random generators and independent oracles shared by the tests."""
from __future__ import annotations

import math
import random

import numpy as np
import sympy as sp

from quartop.jet import Jet
from quartop.operator4 import NAMES, Diffeo, Operator
from quartop.quartic import Quartic, discriminant

X, Y = sp.symbols("x y")


# random objects ----------------------------------------------------------------

def random_jet(rng: np.random.Generator, order: int, base=(0.0, 0.0), unit: bool = False) -> Jet:
    c = rng.normal(size=(order + 1) * (order + 2) // 2)
    if unit:
        c[0] = math.copysign(1.0 + abs(c[0]), c[0])
    return Jet(c, order, base)


def random_regular_quartic(rng: np.random.Generator, margin: float = 1e-3) -> Quartic:
    while True:
        q = Quartic(*rng.normal(size=5))
        if abs(discriminant(q)) > margin * q.scale() ** 6:
            return q


def random_invertible(rng: np.random.Generator, cond: float = 50.0) -> np.ndarray:
    while True:
        L = rng.normal(size=(2, 2))
        if abs(np.linalg.det(L)) > 0.1 and np.linalg.cond(L) < cond:
            return L


def random_diffeo(rng: random.Random, strength: float = 0.15) -> Diffeo:
    """A polynomial map: random linear part plus small quadratic and cubic terms."""
    return Diffeo.from_strings(*random_diffeo_strings(rng, strength))


def random_diffeo_strings(rng: random.Random, strength: float = 0.15) -> tuple[str, str]:
    while True:
        a, b, c, d = (rng.uniform(-1.2, 1.2) for _ in range(4))
        if abs(a * d - b * c) > 0.4:
            break
    s = [rng.uniform(-strength, strength) for _ in range(6)]
    t = (rng.uniform(-0.5, 0.5), rng.uniform(-0.5, 0.5))
    phi1 = f"{t[0]!r} + {a!r}*x + {b!r}*y + {s[0]!r}*x^2 + {s[1]!r}*x*y + {s[2]!r}*y^3"
    phi2 = f"{t[1]!r} + {c!r}*x + {d!r}*y + {s[3]!r}*y^2 + {s[4]!r}*x*y + {s[5]!r}*x^3"
    return phi1, phi2


def random_poly_operator(rng: random.Random, degree: int = 2) -> Operator:
    """Polynomial coefficients; principal symbol near a random regular constant one."""
    nrng = np.random.default_rng(rng.randrange(2**32))
    base = random_regular_quartic(nrng, 0.05)
    coeffs = {}
    for n in NAMES:
        c0 = base.coeffs[int(n[1])] if n[0] == "a" else rng.uniform(-1, 1)
        terms = [repr(float(c0))]
        for i in range(degree + 1):
            for j in range(degree + 1 - i):
                if i + j == 0:
                    continue
                k = rng.uniform(-0.3, 0.3) if n[0] != "a" else rng.uniform(-0.15, 0.15)
                terms.append(f"{k!r}*x^{i}*y^{j}")
        coeffs[n] = " + ".join(terms)
    return Operator.from_strings(coeffs)


# oracles -----------------------------------------------------------------------

def sympy_taylor(expr: sp.Expr, point, order: int) -> dict[tuple[int, int], float]:
    """Taylor-normalized coefficients by symbolic differentiation."""
    out = {}
    subs = {X: point[0], Y: point[1]}
    for d in range(order + 1):
        for i in range(d + 1):
            j = d - i
            val = sp.diff(expr, X, i, Y, j) if d else expr
            out[(i, j)] = float(val.subs(subs)) / (math.factorial(i) * math.factorial(j))
    return out


def real_root_count(q: Quartic) -> int:
    """Distinct real projective roots, by Sturm sequences in exact rationals."""
    t = sp.symbols("t")
    coeffs = [sp.Rational(float(c)) for c in q.poly()]
    # roots of F(t, 1) plus the root at infinity when the t^4 coefficient vanishes
    poly = sum(c * t ** (4 - k) for k, c in enumerate(coeffs))
    p = sp.Poly(poly, t)
    n = p.sqf_part().count_roots() if p.degree() > 0 else 0
    return n + (1 if coeffs[0] == 0 else 0)


def exact_discriminant(q: Quartic) -> sp.Rational:
    """Resultant discriminant of the dehomogenized fiber polynomial, exactly."""
    t = sp.symbols("t")
    coeffs = [sp.Rational(float(c)) for c in q.poly()]
    return sp.discriminant(sum(c * t ** (4 - k) for k, c in enumerate(coeffs)), t)


def tensor_push(q: Quartic, L: np.ndarray) -> Quartic:
    """Pushforward through the full 2x2x2x2 component tensor."""
    a = np.empty((2, 2, 2, 2))
    for idx in np.ndindex(2, 2, 2, 2):
        a[idx] = q.coeffs[sum(idx)]
    b = np.einsum("ia,jb,kc,ld,abcd->ijkl", L, L, L, L, a)
    return Quartic(b[0, 0, 0, 0], b[0, 0, 0, 1], b[0, 0, 1, 1], b[0, 1, 1, 1], b[1, 1, 1, 1])


def fd_gradient(f, p, h: float = 1e-5) -> tuple[float, float]:
    """Central differences of a float function of a point."""
    gx = (f((p[0] + h, p[1])) - f((p[0] - h, p[1]))) / (2 * h)
    gy = (f((p[0], p[1] + h)) - f((p[0], p[1] - h))) / (2 * h)
    return gx, gy


def rel_err(a: float, b: float, floor: float = 1e-300) -> float:
    return abs(a - b) / max(abs(a), abs(b), floor)


def to_sympy(text: str) -> sp.Expr:
    """Coefficient expression text as a sympy expression in x, y."""
    return sp.sympify(text, locals={"x": X, "y": Y, "e": sp.E, "pi": sp.pi}, convert_xor=True)


def sympy_apply(coeffs: dict[str, str], g: sp.Expr) -> sp.Expr:
    """A(g) symbolically, with the binomial weights of the operator display."""
    total = sp.Integer(0)
    for deg, letter in ((4, "a"), (3, "b"), (2, "c"), (1, "d"), (0, "e")):
        for k in range(deg + 1):
            name = f"{letter}{k}"
            if name not in coeffs:
                continue
            term = sp.diff(g, X, deg - k, Y, k) if deg else g
            total += sp.binomial(deg, k) * to_sympy(coeffs[name]) * term
    return total


def sympy_jet(expr: sp.Expr, point, order: int) -> Jet:
    """Jet of a sympy expression, via :func:`sympy_taylor`."""
    coeffs = np.zeros((order + 1) * (order + 2) // 2)
    for (i, j), c in sympy_taylor(expr, point, order).items():
        d = i + j
        coeffs[d * (d + 1) // 2 + j] = c
    return Jet(coeffs, order, (float(point[0]), float(point[1])))


def sympy_quantize(sigma: list, gamma, h: sp.Expr) -> sp.Expr:
    """Q(sigma)(h) from the fiber-polynomial derivation, symbolically.

    ``gamma[k][i][j]`` is the upper-``k`` connection coefficient; ``sigma[t]``
    multiplies ``p1^(k-t) p2^t``.
    """
    w = sp.symbols("w1 w2")
    xs = (X, Y)
    k = len(sigma) - 1
    form = h
    for _ in range(k):
        flat = sum(w[i] * sp.diff(form, xs[i]) for i in range(2))
        conn = sum((gamma[m][i][j] + gamma[m][j][i]) / 2 * w[i] * w[j] * sp.diff(form, w[m])
                   for m in range(2) for i in range(2) for j in range(2))
        form = sp.expand(flat - conn)
    poly = sp.Poly(form, *w) if k else None
    total = sp.Integer(0)
    for t, s in enumerate(sigma):
        omega = poly.coeff_monomial(w[0] ** (k - t) * w[1] ** t) if k else form
        total += math.factorial(k - t) * math.factorial(t) * s * omega
    return total / math.factorial(k)
