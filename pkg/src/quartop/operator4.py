"""Fourth-order scalar operators on the plane and their diffeomorphism action.

An operator is written with binomial weights::

    A = a0 Dx^4 + 4 a1 Dx^3 Dy + 6 a2 Dx^2 Dy^2 + 4 a3 Dx Dy^3 + a4 Dy^4
      + b0 Dx^3 + 3 b1 Dx^2 Dy + 3 b2 Dx Dy^2 + b3 Dy^3
      + c0 Dx^2 + 2 c1 Dx Dy + c2 Dy^2 + d0 Dx + d1 Dy + e0

The *raw* coefficient of ``Dx^i Dy^j`` is the named coefficient times its
binomial weight.
"""
from __future__ import annotations

import math
from collections.abc import Iterable, Mapping
from dataclasses import dataclass, field

import numpy as np

from quartop import expr as ex
from quartop.errors import InsufficientOrder, SingularJacobian, UsageError
from quartop.jet import (
    UNIT_TOL,
    Jet,
    MapJet,
    Point,
    jet_compose,
    jet_invert_map,
    jet_partial,
    lift,
)
from quartop.quartic import Quartic

# name -> (multi-index (i, j) of Dx^i Dy^j, binomial weight)
COEFFICIENTS: dict[str, tuple[tuple[int, int], int]] = {}
for _deg, _letter in ((4, "a"), (3, "b"), (2, "c"), (1, "d"), (0, "e")):
    for _k in range(_deg + 1):
        COEFFICIENTS[f"{_letter}{_k}"] = ((_deg - _k, _k), math.comb(_deg, _k))
NAMES: tuple[str, ...] = tuple(COEFFICIENTS)
NAME_OF_INDEX: dict[tuple[int, int], str] = {idx: n for n, (idx, _) in COEFFICIENTS.items()}
MULTI_INDICES: tuple[tuple[int, int], ...] = tuple(idx for idx, _ in COEFFICIENTS.values())


def multi_indices(degree: int) -> list[tuple[int, int]]:
    return [(degree - k, k) for k in range(degree + 1)]


class OperatorField:
    """Anything that yields coefficient jets at arbitrary chart points."""

    def at(self, point: Point, order: int) -> PointOperator:
        raise NotImplementedError

    def values(self, point: Point) -> dict[str, float]:
        return self.at(point, 0).values()


@dataclass(frozen=True)
class Operator(OperatorField):
    """Operator with coefficient expressions; missing coefficients are zero."""

    coefficients: Mapping[str, ex.Expression]
    sources: Mapping[str, str] = field(default_factory=dict, compare=False)

    def __post_init__(self):
        unknown = set(self.coefficients) - set(NAMES)
        if unknown:
            raise UsageError(f"unknown coefficient names: {sorted(unknown)}")
        full = {n: self.coefficients.get(n, ex.Num(0.0)) for n in NAMES}
        for n, e in full.items():
            extra = ex.free_variables(e) - {"x", "y"}
            if extra:
                raise UsageError(f"coefficient {n} uses variables {sorted(extra)}")
        object.__setattr__(self, "coefficients", full)

    @classmethod
    def from_strings(cls, coefficients: Mapping[str, str]) -> Operator:
        parsed = {}
        for n, text in coefficients.items():
            if n not in COEFFICIENTS:
                raise UsageError(f"unknown coefficient name {n!r}")
            parsed[n] = ex.parse(str(text))
        return cls(parsed, dict(coefficients))

    def source(self, name: str) -> str:
        return self.sources.get(name, ex.unparse(self.coefficients[name]))

    def at(self, point: Point, order: int) -> PointOperator:
        """Coefficient jets at ``point``."""
        p = (float(point[0]), float(point[1]))
        return PointOperator({n: ex.eval_jet(e, p, order) for n, e in self.coefficients.items()})

    def values(self, point: Point) -> dict[str, float]:
        return {n: ex.eval_float(e, point) for n, e in self.coefficients.items()}


class PointOperator:
    """The 15 named coefficients as jets at a common base point."""

    __slots__ = ("jets", "order", "base")

    def __init__(self, jets: Mapping[str, Jet | float], order: int | None = None,
                 base: Point | None = None):
        given = [j for j in jets.values() if isinstance(j, Jet)]
        if base is None:
            if not given:
                raise ValueError("need a base point when no coefficient is a jet")
            base = given[0].base
        if order is None:
            order = min(j.order for j in given) if given else 0
        self.jets = {n: lift(jets.get(n, 0.0), order, base).truncate(order) for n in NAMES}
        self.order = order
        self.base = (float(base[0]), float(base[1]))

    @classmethod
    def from_raw(cls, raw: Mapping[tuple[int, int], Jet | float], order: int | None = None,
                 base: Point | None = None) -> PointOperator:
        named = {}
        for idx, v in raw.items():
            name = NAME_OF_INDEX[idx]
            named[name] = v / COEFFICIENTS[name][1]
        return cls(named, order, base)

    def __getitem__(self, name: str) -> Jet:
        return self.jets[name]

    def raw(self, idx: tuple[int, int]) -> Jet:
        name = NAME_OF_INDEX[idx]
        return self.jets[name] * COEFFICIENTS[name][1]

    def raw_all(self) -> dict[tuple[int, int], Jet]:
        return {idx: self.raw(idx) for idx in MULTI_INDICES}

    def principal_symbol(self) -> Quartic:
        return Quartic(*(self.jets[f"a{k}"] for k in range(5)))

    def truncate(self, order: int) -> PointOperator:
        if order > self.order:
            raise InsufficientOrder(f"operator jets have order {self.order} < {order}")
        return PointOperator({n: j.truncate(order) for n, j in self.jets.items()}, order, self.base)

    def values(self) -> dict[str, float]:
        return {n: j.value for n, j in self.jets.items()}

    def apply_jet(self, f: Jet) -> Jet:
        """Jet of ``A(f)``; its order is ``min(self.order, f.order - 4)``."""
        if f.order < 4:
            raise InsufficientOrder(f"applying a 4th-order operator needs a jet of order >= 4, got {f.order}")
        m = min(self.order, f.order - 4)
        derivs = _all_partials(f, 4)
        out = Jet.constant(0.0, m, f.base)
        for idx in MULTI_INDICES:
            out = out + self.raw(idx).truncate(m) * derivs[idx].truncate(m)
        return out

    def __sub__(self, other: PointOperator) -> PointOperator:
        m = min(self.order, other.order)
        return PointOperator({n: self.jets[n].truncate(m) - other.jets[n].truncate(m) for n in NAMES}, m, self.base)

    def __add__(self, other: PointOperator) -> PointOperator:
        m = min(self.order, other.order)
        return PointOperator({n: self.jets[n].truncate(m) + other.jets[n].truncate(m) for n in NAMES}, m, self.base)

    def __repr__(self) -> str:
        return f"PointOperator(order={self.order}, base={self.base})"


def _all_partials(f: Jet, depth: int) -> dict[tuple[int, int], Jet]:
    """``{(i, j): d^i_x d^j_y f}`` for ``i + j <= depth``."""
    out = {(0, 0): f}
    for d in range(1, depth + 1):
        for k in range(d + 1):
            i, j = d - k, k
            out[(i, j)] = jet_partial(out[(i - 1, j)], 1) if i > 0 else jet_partial(out[(i, j - 1)], 2)
    return out


def principal_symbol(A: OperatorField, p: Point, order: int) -> Quartic:
    """Jets of ``(a0, ..., a4)`` at ``p``."""
    if isinstance(A, Operator):
        return Quartic(*(ex.eval_jet(A.coefficients[f"a{k}"], p, order) for k in range(5)))
    return A.at(p, order).principal_symbol()


def apply(A: OperatorField | PointOperator, f: ex.Expression | Jet, p: Point | None = None) -> float:
    """The number ``A(f)(p)``."""
    if isinstance(A, OperatorField):
        if p is None:
            raise ValueError("a point is required for an expression-valued operator")
        A = A.at(p, 0)
    p = A.base
    if not isinstance(f, Jet):
        f = ex.eval_jet(f, p, 4)
    return A.truncate(0).apply_jet(f).value


# diffeomorphisms ---------------------------------------------------------------

@dataclass(frozen=True)
class Diffeo:
    """A planar map ``(phi1, phi2)``, optionally with a closed-form inverse."""

    phi1: ex.Expression
    phi2: ex.Expression
    inverse: tuple[ex.Expression, ex.Expression] | None = None

    @classmethod
    def from_strings(cls, phi1: str, phi2: str, inverse: Iterable[str] | None = None) -> Diffeo:
        inv = tuple(ex.parse(s) for s in inverse) if inverse is not None else None
        return cls(ex.parse(phi1), ex.parse(phi2), inv)  # type: ignore[arg-type]

    def __call__(self, p: Point) -> Point:
        return (ex.eval_float(self.phi1, p), ex.eval_float(self.phi2, p))

    def jet_at(self, p: Point, order: int) -> MapJet:
        return MapJet(ex.eval_jet(self.phi1, p, order), ex.eval_jet(self.phi2, p, order))

    def inverse_jet_at(self, q: Point, order: int) -> MapJet | None:
        if self.inverse is None:
            return None
        return MapJet(ex.eval_jet(self.inverse[0], q, order), ex.eval_jet(self.inverse[1], q, order))


def pushforward_jets(A: PointOperator, phi: MapJet, order: int,
                     psi: MapJet | None = None, tol: float = UNIT_TOL) -> PointOperator:
    """Coefficient jets of ``phi_* A`` at ``phi(p)``.

    Needs ``A`` to order ``order`` and ``phi`` to order ``order + 4``.  Uses
    ``B^beta(phi(z)) = A_w[(phi(w) - phi(z))^beta / beta!]`` at ``w = z``,
    then recenters at ``phi(p)`` through the inverse map jet ``psi``.
    """
    if A.order < order:
        raise InsufficientOrder(f"operator jets of order {A.order} < {order}")
    if phi.order < order + 4:
        raise InsufficientOrder(f"map jets of order {phi.order} < {order + 4}")
    if not _close(A.base, phi.base):
        raise ValueError(f"operator at {A.base}, map at {phi.base}")
    lin = phi.linear_part()
    det = float(np.linalg.det(lin))
    if abs(det) <= tol:
        raise SingularJacobian(f"Jacobian determinant {det:.3g} at {phi.base}")
    q = phi.value
    A = A.truncate(order)
    t1 = (phi.phi1 - q[0]).truncate(order + 4)
    t2 = (phi.phi2 - q[1]).truncate(order + 4)
    pow1 = [Jet.constant(1.0, order + 4, phi.base)]
    pow2 = [Jet.constant(1.0, order + 4, phi.base)]
    for _ in range(4):
        pow1.append(pow1[-1] * t1)
        pow2.append(pow2[-1] * t2)
    applied = {g: A.apply_jet(pow1[g[0]] * pow2[g[1]]) for g in MULTI_INDICES}
    neg1 = [(-1) ** k * pw.truncate(order) for k, pw in enumerate(pow1)]
    neg2 = [(-1) ** k * pw.truncate(order) for k, pw in enumerate(pow2)]
    if psi is None:
        psi = jet_invert_map(phi.truncate(max(order, 1))).truncate(order)
    else:
        psi = psi.truncate(order)
    raw = {}
    for beta in MULTI_INDICES:
        acc = Jet.constant(0.0, order, phi.base)
        for g1 in range(beta[0] + 1):
            for g2 in range(beta[1] + 1):
                c = math.comb(beta[0], g1) * math.comb(beta[1], g2)
                acc = acc + c * neg1[beta[0] - g1] * neg2[beta[1] - g2] * applied[(g1, g2)]
        acc = acc / (math.factorial(beta[0]) * math.factorial(beta[1]))
        raw[beta] = jet_compose(acc, psi)
    return PointOperator.from_raw(raw, order, psi.base)


def pushforward(A: OperatorField | PointOperator, phi: Diffeo | MapJet, p: Point | None = None,
                order: int = 6) -> PointOperator:
    """Coefficient jets (order ``order``) of ``phi_* A`` at ``phi(p)``."""
    if isinstance(A, OperatorField):
        if p is None:
            raise ValueError("a point is required for an expression-valued operator")
        A = A.at(p, order)
    p = A.base
    psi = None
    if isinstance(phi, Diffeo):
        mj = phi.jet_at(p, order + 4)
        if abs(float(np.linalg.det(mj.linear_part()))) > UNIT_TOL:
            psi = phi.inverse_jet_at(mj.value, order)
        phi = mj
    return pushforward_jets(A, phi, order, psi)


@dataclass(frozen=True)
class PushedOperator(OperatorField):
    """``phi_* A`` as an operator field on the image of ``phi``.

    Preimages come from ``phi.inverse`` when given, else from Newton's method
    started at ``hint`` (default: the point itself).
    """

    A: OperatorField
    phi: Diffeo
    hint: Point | None = None

    def preimage(self, q: Point, tol: float = 1e-14, max_iter: int = 50) -> Point:
        if self.phi.inverse is not None:
            return (ex.eval_float(self.phi.inverse[0], q), ex.eval_float(self.phi.inverse[1], q))
        z = np.array(self.hint if self.hint is not None else q, dtype=float)
        target = np.array(q, dtype=float)
        for _ in range(max_iter):
            mj = self.phi.jet_at((z[0], z[1]), 1)
            r = np.array(mj.value) - target
            if np.abs(r).max() <= tol * (1.0 + np.abs(target).max()):
                return (float(z[0]), float(z[1]))
            lin = mj.linear_part()
            if abs(np.linalg.det(lin)) <= UNIT_TOL:
                raise SingularJacobian(f"Jacobian degenerates at {tuple(z)} while inverting the map")
            z = z - np.linalg.solve(lin, r)
        raise SingularJacobian(f"no preimage of {q} found")

    def at(self, point: Point, order: int) -> PointOperator:
        return pushforward(self.A, self.phi, self.preimage(point), order)


def _close(p: Point, q: Point, tol: float = 1e-12) -> bool:
    return all(math.isclose(a, b, rel_tol=tol, abs_tol=tol) for a, b in zip(p, q))
