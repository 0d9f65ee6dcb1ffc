"""Sampled equivalence of operators through invariant signatures."""
from __future__ import annotations

import math
from collections.abc import Iterable, Sequence
from dataclasses import dataclass, field

from quartop.errors import AllPointsSingular, MathError
from quartop.invariants import (
    ALPHAS,
    SIGNATURE_ALPHAS,
    coframe,
    constant_type_test,
    frame_invariants,
    invariant_jets,
)
from quartop.jet import Point
from quartop.operator4 import Diffeo, OperatorField, pushforward
from quartop.quantize import TOTAL_SYMBOL_ORDER, total_symbol
from quartop.wagner import GroupType, group_type_classify, require_regular

MIN_REGULAR_SAMPLES = 3
COMPARE_TOL = 1e-6
RELATIVE_FLOOR = 1e-9


@dataclass(frozen=True)
class Signature:
    """Invariant tuples at the regular samples, tagged with the operator's type.

    ``tag`` is ``"NonConstantType"`` or a constant-type group type.  Group
    types with a degenerate coframe (``Abelian``, ``Solvable``) carry the
    tuple ``(I0, A(1), sigma_0)`` instead of the 15 frame invariants.
    """

    tag: str
    tuples: tuple[tuple[float, ...], ...]
    points: tuple[Point, ...]
    skipped: int = 0
    reasons: tuple[str, ...] = ()

    def as_dict(self) -> dict:
        return {"tag": self.tag, "tuples": [list(t) for t in self.tuples],
                "points": [list(p) for p in self.points], "skipped": self.skipped,
                "reasons": list(self.reasons)}


@dataclass(frozen=True)
class IndistinguishableAtSamples:
    distance: float
    kind: str = field(default="IndistinguishableAtSamples", init=False)


@dataclass(frozen=True)
class Distinct:
    witness: int  # index into the first signature's tuples (or the second's, see ``side``)
    distance: float
    side: int = 1
    kind: str = field(default="Distinct", init=False)


@dataclass(frozen=True)
class Incomparable:
    reason: str
    kind: str = field(default="Incomparable", init=False)


Verdict = IndistinguishableAtSamples | Distinct | Incomparable


def _nonconstant_tuple(A: OperatorField, p: Point, full: bool) -> tuple[float, ...]:
    alphas = ALPHAS if full else SIGNATURE_ALPHAS
    inv = invariant_jets(A, p, 5, alphas)
    return (inv.I0.value, inv.I1.value, *(inv.J[a].value for a in alphas))


def _frame_tuple(A: OperatorField, p: Point) -> tuple[float, ...]:
    ts = total_symbol(A, p, order=TOTAL_SYMBOL_ORDER)
    return frame_invariants(ts, coframe(ts.connection)).as_tuple()


def _group_tuple(A: OperatorField, p: Point) -> tuple[float, ...]:
    ts = total_symbol(A, p, order=TOTAL_SYMBOL_ORDER)
    inv = invariant_jets(A, p, 5, [(0, 0)])
    return (inv.I0.value, inv.J[(0, 0)].value, float(ts.parts[0].values()[0]))


def signature(A: OperatorField, points: Iterable[Point], full: bool = False) -> Signature:
    """Invariant tuples of ``A`` at ``points``; singular samples are skipped and counted."""
    pts = [(float(p[0]), float(p[1])) for p in points]
    regular, reasons = [], []
    for p in pts:
        try:
            q = A.at(p, 1).principal_symbol()
            require_regular(q)
            regular.append(p)
        except MathError as exc:
            reasons.append(f"{p}: {type(exc).__name__}")
    if not regular:
        raise AllPointsSingular("no regular sample point")
    constant, _ = constant_type_test(A, regular)
    if not constant:
        tag, fn = "NonConstantType", lambda p: _nonconstant_tuple(A, p, full)
    else:
        gt = group_type_classify(A, regular)
        tag = gt.value
        tuple_at = _frame_tuple if gt is GroupType.NON_PARALLEL_TORSION else _group_tuple
        fn = lambda p: tuple_at(A, p)  # noqa: E731
    tuples, kept = [], []
    for p in regular:
        try:
            tuples.append(tuple(float(v) for v in fn(p)))
            kept.append(p)
        except MathError as exc:
            reasons.append(f"{p}: {type(exc).__name__}")
    if not tuples:
        raise AllPointsSingular("every sample point is singular for the invariants")
    return Signature(tag, tuple(tuples), tuple(kept), len(pts) - len(kept), tuple(reasons))


def tuple_distance(u: Sequence[float], v: Sequence[float], floor: float = RELATIVE_FLOOR) -> float:
    """Max over entries of ``|u - v| / (max(|u|, |v|) + floor)``."""
    if len(u) != len(v):
        return math.inf
    return max((abs(a - b) / (max(abs(a), abs(b)) + floor) for a, b in zip(u, v)), default=0.0)


def _directed(s1: Signature, s2: Signature) -> tuple[float, int]:
    worst, at = 0.0, 0
    for i, u in enumerate(s1.tuples):
        d = min(tuple_distance(u, v) for v in s2.tuples)
        if d > worst:
            worst, at = d, i
    return worst, at


def compare(s1: Signature, s2: Signature, tol: float = COMPARE_TOL) -> Verdict:
    """Symmetric Hausdorff distance between the tuple sets."""
    if s1.tag != s2.tag:
        return Incomparable(f"types differ: {s1.tag} vs {s2.tag}")
    for s, name in ((s1, "first"), (s2, "second")):
        if len(s.tuples) < MIN_REGULAR_SAMPLES:
            return Incomparable(f"{name} signature has {len(s.tuples)} regular samples "
                                f"(need {MIN_REGULAR_SAMPLES})")
    d12, w12 = _directed(s1, s2)
    d21, w21 = _directed(s2, s1)
    dist = max(d12, d21)
    if dist <= tol:
        return IndistinguishableAtSamples(dist)
    return Distinct(w12, dist, 1) if d12 >= d21 else Distinct(w21, dist, 2)


def verify_diffeo(A: OperatorField, B: OperatorField, phi: Diffeo, points: Iterable[Point],
                  tol: float = 1e-9) -> tuple[bool, float]:
    """Does ``phi`` carry ``A`` to ``B`` at every sample?  Returns the max relative residual."""
    worst = 0.0
    for p in points:
        pushed = pushforward(A, phi, p, order=0)
        target = B.values(phi(p))
        got = pushed.values()
        scale = max(1.0, max(abs(v) for v in target.values()))
        worst = max(worst, max(abs(got[n] - target[n]) for n in target) / scale)
    return worst <= tol, worst
