"""Differential invariants of fourth-order operators.

Two pipelines:

* non-constant type: ``I0``, ``I1 = sigma(dI0)``, ``J_alpha = A(I0^a1 I1^a2)``
  and Tresse derivatives with respect to ``(I0, I1)``;
* constant type: the coframe built from the torsion trace of the Wagner
  connection and the coefficients of the total symbol in its dual frame.

Everything runs over jets, so the derivatives needed downstream (gradients
for Tresse derivatives, for instance) come out of the same evaluation.
"""
from __future__ import annotations

import math
import random
from collections.abc import Iterable, Mapping, Sequence
from dataclasses import dataclass, field

import numpy as np

from quartop import expr as ex
from quartop.errors import (
    DegenerateCoframe,
    DegenerateMetric,
    InsufficientOrder,
    MathError,
    SingularTresseFrame,
    ZeroTorsion,
)
from quartop.jet import Jet, Point, jet_partial
from quartop.operator4 import Operator, OperatorField, PointOperator, multi_indices
from quartop.quantize import TotalSymbol
from quartop.quartic import Quartic, absolute_invariant, discriminant, substitute_form
from quartop.wagner import (
    CONSTANT_TYPE_TOL,
    TORSION_TOL,
    Christoffel,
    Torsion,
    require_regular,
    invariant_gradient,
    torsion,
)

INVARIANT_ORDER = 6  # coefficient jet order: J needs 5, their Tresse derivatives 6
TRESSE_TOL = 1e-12
FRAME_TOL = 1e-10

ALPHAS: tuple[tuple[int, int], ...] = tuple(a for d in range(5) for a in multi_indices(d)[::-1])
SIGNATURE_ALPHAS = ((1, 0), (0, 1), (2, 0), (1, 1), (0, 2))


def codim_regular_orbit(n: int, k: int) -> int:
    """``binom(n + k - 1, k) - n^2``: symmetric k-tensor dimension minus ``dim GL(n)``."""
    if n < 1 or k < 0:
        raise ValueError("need n >= 1 and k >= 0")
    return math.comb(n + k - 1, k) - n * n


# non-constant type -----------------------------------------------------------------

def _point_operator(A: OperatorField | PointOperator, p: Point | None, order: int) -> PointOperator:
    if isinstance(A, OperatorField):
        if p is None:
            raise ValueError("a point is required for an expression-valued operator")
        return A.at(p, order)
    if A.order < order:
        raise InsufficientOrder(f"operator jets of order {A.order} < {order}")
    return A.truncate(order)


def I0_jet(A: OperatorField | PointOperator, p: Point | None = None, order: int = INVARIANT_ORDER) -> Jet:
    """Jet of ``I0 = I3^2 / I2^3`` of the principal symbol."""
    return absolute_invariant(_point_operator(A, p, order).principal_symbol())


def _I1_from(q: Quartic, i0: Jet) -> Jet:
    u, v = jet_partial(i0, 1), jet_partial(i0, 2)
    return q(u, v)


def I1_jet(A: OperatorField | PointOperator, p: Point | None = None, order: int = INVARIANT_ORDER) -> Jet:
    """Jet (one order below the coefficients) of ``sigma(dI0, dI0, dI0, dI0)``."""
    P = _point_operator(A, p, order)
    return _I1_from(P.principal_symbol(), absolute_invariant(P.principal_symbol()))


def I1(A: OperatorField | PointOperator, p: Point | None = None) -> float:
    return I1_jet(A, p, 1).value


@dataclass(frozen=True)
class InvariantJets:
    """Jets of ``I0``, ``I1`` and every ``J_alpha`` at one point."""

    I0: Jet
    I1: Jet
    J: Mapping[tuple[int, int], Jet]

    def get(self, key) -> Jet:
        if key in ("I0", "I1"):
            return getattr(self, key)
        return self.J[tuple(key)]


def invariant_jets(A: OperatorField | PointOperator, p: Point | None = None,
                   order: int = INVARIANT_ORDER, alphas: Iterable[tuple[int, int]] = ALPHAS) -> InvariantJets:
    """Coefficients of order ``order`` give ``I0`` at ``order``, ``I1`` at
    ``order - 1`` and ``J_alpha`` at ``order - 5``."""
    if order < 5:
        raise InsufficientOrder("J_alpha needs coefficient jets of order >= 5")
    P = _point_operator(A, p, order)
    q = P.principal_symbol()
    i0 = absolute_invariant(q)
    i1 = _I1_from(q, i0)
    m = order - 1
    i0m = i0.truncate(m)
    J = {}
    for a in alphas:
        f = i0m ** a[0] * i1 ** a[1] if a != (0, 0) else Jet.constant(1.0, m, P.base)
        J[tuple(a)] = P.apply_jet(f)
    return InvariantJets(i0, i1, J)


def J_alpha(A: OperatorField | PointOperator, p: Point | None, alpha: tuple[int, int]) -> float:
    """``A(I0^a1 I1^a2)`` at the point."""
    if sum(alpha) > 4 or min(alpha) < 0:
        raise ValueError(f"multi-index {alpha} out of range")
    return invariant_jets(A, p, 5, [tuple(alpha)]).J[tuple(alpha)].value


def tresse_from_jets(target: Jet, i0: Jet, i1: Jet, tol: float = TRESSE_TOL) -> tuple[float, float]:
    """Coefficients ``(c0, c1)`` with ``dT = c0 dI0 + c1 dI1`` (Cramer's rule)."""
    (ax, ay), (bx, by), (tx, ty) = i0.gradient(), i1.gradient(), target.gradient()
    det = ax * by - ay * bx
    scale = math.hypot(ax, ay) * math.hypot(bx, by)
    # on constant type dI0 is pure rounding noise, which the relative test cannot see
    if math.hypot(ax, ay) <= CONSTANT_TYPE_TOL * (1.0 + abs(i0.value)):
        raise SingularTresseFrame(f"dI0 = ({ax:.3g}, {ay:.3g}) vanishes; the symbol has constant type here")
    if scale == 0.0 or abs(det) <= tol * scale:
        raise SingularTresseFrame(f"dI0 ^ dI1 = {det:.3g}; the point lies in the singular set")
    return (tx * by - ty * bx) / det, (ax * ty - ay * tx) / det


def tresse(A: OperatorField | PointOperator, p: Point | None, target,
           order: int = INVARIANT_ORDER) -> tuple[float, float]:
    """Tresse derivatives of ``target``: ``"I0"``, ``"I1"``, a multi-index
    ``alpha`` for ``J_alpha``, a jet, or a callable ``(PointOperator) -> Jet``."""
    P = _point_operator(A, p, order)
    if isinstance(target, Jet):
        tj, inv = target, invariant_jets(P, None, order, [])
    elif callable(target):
        tj, inv = target(P), invariant_jets(P, None, order, [])
    elif target in ("I0", "I1"):
        inv = invariant_jets(P, None, order, [])
        tj = inv.get(target)
    else:
        inv = invariant_jets(P, None, order, [tuple(target)])
        tj = inv.get(target)
    return tresse_from_jets(tj, inv.I0, inv.I1)


@dataclass
class InvariantRecord:
    point: Point
    I0: float | None = None
    I1: float | None = None
    J: dict[tuple[int, int], float] = field(default_factory=dict)
    tresse: dict[str, tuple[float, float]] | None = None
    flags: dict[str, str] = field(default_factory=dict)

    def as_dict(self) -> dict:
        out = {"point": list(self.point), "I0": self.I0, "I1": self.I1,
               "J": {f"{a[0]},{a[1]}": v for a, v in self.J.items()}, "flags": dict(self.flags)}
        if self.tresse is not None:
            out["tresse"] = {k: list(v) for k, v in self.tresse.items()}
        return out


def invariant_record(A: OperatorField, p: Point, with_tresse: bool = False,
                     order: int = INVARIANT_ORDER) -> InvariantRecord:
    """Everything at one point; singularities are recorded as flags, not raised."""
    rec = InvariantRecord((float(p[0]), float(p[1])))
    try:
        P = A.at(p, order)
        require_regular(P.principal_symbol())
        inv = invariant_jets(P, None, order)
    except MathError as exc:
        rec.flags["error"] = type(exc).__name__
        rec.flags["message"] = str(exc)
        return rec
    rec.I0, rec.I1 = inv.I0.value, inv.I1.value
    rec.J = {a: j.value for a, j in inv.J.items()}
    if with_tresse:
        rec.tresse = {}
        try:
            for name in ("I0", "I1"):
                rec.tresse[name] = tresse_from_jets(inv.get(name), inv.I0, inv.I1)
            for a, j in inv.J.items():
                rec.tresse[f"J{a[0]}{a[1]}"] = tresse_from_jets(j, inv.I0, inv.I1)
        except SingularTresseFrame as exc:
            rec.tresse = None
            rec.flags["tresse"] = "SingularTresseFrame"
            rec.flags["tresse_message"] = str(exc)
    return rec


def constant_type_test(A: OperatorField, points: Iterable[Point],
                       tol: float = CONSTANT_TYPE_TOL) -> tuple[bool, float]:
    """``(constant type?, max |grad K|)`` over the samples, ``K`` the orbit coordinate."""
    worst, ok = 0.0, True
    for p in points:
        q = A.at(p, 2).principal_symbol()
        require_regular(q)
        gx, gy, k = invariant_gradient(q)
        g = math.hypot(gx, gy)
        worst = max(worst, g)
        ok = ok and g <= tol * (1.0 + abs(k))
    return ok, worst


# constant type: the torsion coframe -------------------------------------------------

@dataclass(frozen=True)
class Coframe:
    """Covectors ``theta1, theta2`` and the dual frame at one point.

    ``frame[:, j]`` is the vector ``e_j`` (so ``Theta @ frame = 1``).
    """

    theta1: np.ndarray
    theta2: np.ndarray
    B: np.ndarray
    g: np.ndarray
    a: np.ndarray
    frame: np.ndarray

    @property
    def matrix(self) -> np.ndarray:
        """Rows ``theta1``, ``theta2``."""
        return np.vstack([self.theta1, self.theta2])

    def duality_error(self) -> float:
        return float(np.abs(self.matrix @ self.frame - np.eye(2)).max())


def coframe(G: Christoffel, T: Torsion | None = None, tol: float = FRAME_TOL) -> Coframe:
    """``theta1`` = torsion trace; ``B_jk = d_j theta_k - G^m_{jk} theta_m``;
    ``A = g^{-1} a``; ``(theta2)_j = A^i_j (theta1)_i``."""
    if G.order < 1:
        raise InsufficientOrder("the coframe needs connection jets of order >= 1")
    if T is None:
        T = torsion(G)
    th = T.theta
    t1 = np.array([th[0].value, th[1].value])
    gscale = 1.0 + float(np.abs(G.values()).max())
    if np.abs(t1).max() <= TORSION_TOL * gscale:
        raise ZeroTorsion("torsion trace vanishes; no coframe")
    Gv = G.values()
    B = np.empty((2, 2))
    for j in range(2):
        for k in range(2):
            B[j, k] = jet_partial(th[k], j + 1).value - sum(Gv[m, j, k] * t1[m] for m in range(2))
    g = 0.5 * (B + B.T)
    a = 0.5 * (B - B.T)
    bscale = float(np.abs(B).max())
    det_g = float(np.linalg.det(g))
    if bscale == 0.0 or abs(det_g) <= tol * bscale**2:
        raise DegenerateMetric(f"det g = {det_g:.3g} (|B| = {bscale:.3g})")
    A = np.linalg.solve(g, a)
    t2 = A.T @ t1
    wedge = t1[0] * t2[1] - t1[1] * t2[0]
    if abs(wedge) <= tol * np.linalg.norm(t1) * max(np.linalg.norm(t2), 1e-300):
        raise DegenerateCoframe(f"theta1 ^ theta2 = {wedge:.3g}")
    frame = np.linalg.inv(np.vstack([t1, t2]))
    return Coframe(t1, t2, B, g, a, frame)


@dataclass(frozen=True)
class FrameInvariants:
    """``values[(l - t, t)]``: coefficient of ``eta1^(l-t) eta2^t`` in ``sigma_l(eta1 theta1 + eta2 theta2)``."""

    values: Mapping[tuple[int, int], float]

    def as_tuple(self) -> tuple[float, ...]:
        return tuple(self.values[a] for a in ALPHAS[::-1])


def frame_invariants(ts: TotalSymbol, cf: Coframe) -> FrameInvariants:
    """Total-symbol components expressed in the coframe's dual frame."""
    P = [[cf.theta1[0], cf.theta2[0]], [cf.theta1[1], cf.theta2[1]]]
    out: dict[tuple[int, int], float] = {}
    for l in range(4, -1, -1):
        s = [float(v) for v in ts.parts[l].values()]
        coeffs = substitute_form(s, P) if l > 0 else s
        for t, c in enumerate(coeffs):
            out[(l - t, t)] = float(c)
    return FrameInvariants(out)


# generic constant-type operators -----------------------------------------------------

def gl_field_operator(sigma_c: Sequence[float], G: Sequence[Sequence[str | ex.Expression]],
                      lower: Mapping[str, str] | None = None) -> Operator:
    """Operator whose principal symbol is ``S^4(G(x, y)) sigma_c``.

    ``sigma_c`` holds the binomially normalized constants ``(a0..a4)`` and
    ``G`` a 2x2 matrix of expressions; every point value lies on the orbit of
    ``sigma_c``, so the result has constant type.
    """
    Gx = [[ex.parse(e) if isinstance(e, str) else e for e in row] for row in G]
    Lt = [[Gx[0][0], Gx[1][0]], [Gx[0][1], Gx[1][1]]]
    poly = [float(w * a) for w, a in zip((1, 4, 6, 4, 1), sigma_c)]
    pushed = substitute_form(poly, Lt)
    coeffs = {f"a{k}": pushed[k] / (1, 4, 6, 4, 1)[k] for k in range(5)}
    out = {n: ex.Num(float(c)) if not isinstance(c, ex._Arith) else c for n, c in coeffs.items()}
    for n, text in (lower or {}).items():
        out[n] = ex.parse(text)
    return Operator(out, {n: ex.unparse(e) for n, e in out.items()})


def random_gl_field_operator(rng: random.Random, with_lower: bool = True) -> Operator:
    """A generic constant-type operator with polynomial GL field and lower terms.

    The GL field is a small perturbation of a random well-conditioned matrix,
    so it stays invertible near the origin.
    """
    def poly(c0: float) -> str:
        c = [rng.uniform(-0.4, 0.4) for _ in range(5)]
        return f"{c0!r} + {c[0]!r}*x + {c[1]!r}*y + {c[2]!r}*x^2 + {c[3]!r}*x*y + {c[4]!r}*y^2"

    while True:
        sigma_c = [rng.uniform(-1, 1) for _ in range(5)]
        if abs(discriminant(Quartic(*sigma_c))) > 1e-3:
            break
    G = [[poly(1.0 + rng.uniform(0, 0.5)), poly(rng.uniform(-0.3, 0.3))],
         [poly(rng.uniform(-0.3, 0.3)), poly(1.0 + rng.uniform(0, 0.5))]]
    lower = None
    if with_lower:
        lower = {n: poly(rng.uniform(-1, 1)) for n in ("b0", "b1", "b2", "b3", "c0", "c1", "c2", "d0", "d1", "e0")}
    return gl_field_operator(sigma_c, G, lower)
