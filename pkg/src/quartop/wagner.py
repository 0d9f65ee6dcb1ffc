"""The Wagner connection of a regular symbol, its torsion and curvature.

Index convention: ``G[i][j][k]`` (0-based) is the ``d_i``-component of
``nabla_{d_j} d_k``, so the first lower index is the differentiation
direction.  Parallelism of the symbol reads, for ``r`` = number of 2s among
the upper indices of ``a^{i1 i2 i3 i4}`` (so ``a^{...} = a_r``)::

    d_l a_r + (4 - r) (G^1_{l1} a_r + G^1_{l2} a_{r+1})
            + r (G^2_{l1} a_{r-1} + G^2_{l2} a_r) = 0,      l = 1, 2

Ten equations in eight unknowns; two are dropped and the rest solved.
"""
from __future__ import annotations

import enum
import itertools
from collections.abc import Callable, Iterable, Sequence
from dataclasses import dataclass

import numpy as np

from quartop import linalg
from quartop.errors import InsufficientOrder, NotRegular, SingularSystem
from quartop.jet import Jet, Point, Scalar, jet_partial, jpow, value_of
from quartop.quartic import Quartic, discriminant, hilbert_invariants, is_regular

DEFAULT_EXCLUDED = (1, 1, 2, 2)
REGULARITY_TOL = 1e-10
TORSION_TOL = 1e-8
CONSTANT_TYPE_TOL = 1e-8


@dataclass(frozen=True)
class Christoffel:
    """Connection coefficients as a (2, 2, 2) nested tuple of jets."""

    G: tuple

    @property
    def order(self) -> int:
        return min(g.order for g in self.flat())

    @property
    def base(self) -> Point:
        return self.G[0][0][0].base

    def flat(self) -> list[Jet]:
        return [self.G[i][j][k] for i in range(2) for j in range(2) for k in range(2)]

    def __call__(self, i: int, j: int, k: int) -> Jet:
        """Component ``Gamma^i_{jk}`` with 1-based indices."""
        return self.G[i - 1][j - 1][k - 1]

    def values(self) -> np.ndarray:
        return np.array([[[self.G[i][j][k].value for k in range(2)] for j in range(2)] for i in range(2)])

    def truncate(self, order: int) -> Christoffel:
        return Christoffel(tuple(tuple(tuple(g.truncate(order) for g in row) for row in plane) for plane in self.G))

    @classmethod
    def from_array(cls, arr) -> Christoffel:
        return cls(tuple(tuple(tuple(arr[i][j][k] for k in range(2)) for j in range(2)) for i in range(2)))

    @classmethod
    def zero(cls, order: int, base: Point) -> Christoffel:
        z = Jet.constant(0.0, order, base)
        return cls.from_array([[[z, z], [z, z]], [[z, z], [z, z]]])


@dataclass(frozen=True)
class Torsion:
    T: tuple  # T[i][j][k] = G[i][j][k] - G[i][k][j]
    theta: tuple  # theta[k] = sum_i T[i][i][k]

    def values(self) -> np.ndarray:
        return np.array([[[self.T[i][j][k].value for k in range(2)] for j in range(2)] for i in range(2)])

    def theta_values(self) -> np.ndarray:
        return np.array([t.value for t in self.theta])

    def norm(self) -> float:
        return float(np.abs(self.values()).max())


@dataclass(frozen=True)
class Curvature:
    R: tuple  # R[i][j][k][l]

    def values(self) -> np.ndarray:
        return np.array([[[[self.R[i][j][k][l].value for l in range(2)] for k in range(2)]
                          for j in range(2)] for i in range(2)])

    def norm(self) -> float:
        return float(np.abs(self.values()).max())


class GroupType(str, enum.Enum):
    ABELIAN = "Abelian"
    SOLVABLE = "Solvable"
    NON_PARALLEL_TORSION = "NonParallelTorsion"
    NOT_CONSTANT_TYPE = "NotConstantType"


# the linear system -----------------------------------------------------------

def _excluded_row(excluded) -> int:
    if isinstance(excluded, (int, np.integer)):
        r = int(excluded)
    else:
        idx = tuple(excluded)
        if len(idx) != 4 or any(i not in (1, 2) for i in idx):
            raise ValueError(f"excluded component must be 4 indices from {{1, 2}}, got {excluded!r}")
        r = sum(1 for i in idx if i == 2)
    if not 0 <= r <= 4:
        raise ValueError(f"excluded row {r} out of range")
    return r


def block_rows(a: Sequence[Scalar]) -> list[list[Scalar]]:
    """The 5x4 coefficient block shared by both directions.

    Unknowns per direction l: ``(G^1_{l1}, G^1_{l2}, G^2_{l1}, G^2_{l2})``.
    """
    def g(i: int) -> Scalar:
        return a[i] if 0 <= i <= 4 else 0.0

    return [[(4 - r) * g(r), (4 - r) * g(r + 1), r * g(r - 1), r * g(r)] for r in range(5)]


def system_matrix(q: Quartic, excluded=DEFAULT_EXCLUDED) -> list[list[Scalar]]:
    """The 8x8 matrix after dropping the two equations of one component.

    Unknowns ordered ``G^1_{11}, G^1_{12}, G^2_{11}, G^2_{12}, G^1_{21},
    G^1_{22}, G^2_{21}, G^2_{22}``; rows: kept components for l = 1, then l = 2.
    """
    r_ex = _excluded_row(excluded)
    rows = [row for r, row in enumerate(block_rows(q.coeffs)) if r != r_ex]
    zero = [0.0] * 4
    return [row + zero for row in rows] + [zero + row for row in rows]


def wagner_minors(q: Quartic) -> list[float]:
    """Determinants of the 4x4 block with each component's row dropped (r = 0..4).

    With alternating signs and divided by ``binom(4, r)`` they form a quartic
    covariant ``C`` with ``I2(C) = 64/3 I2 D`` and ``I3(C) = 512/27 D^2``, so
    all five vanish exactly when the discriminant does.
    """
    rows = block_rows([value_of(a) for a in q.coeffs])
    return [linalg.det([row for r, row in enumerate(rows) if r != ex]) for ex in range(5)]


def minor_covariant(q: Quartic) -> Quartic:
    m = wagner_minors(q)
    return Quartic(*((-1) ** r * m[r] / (1, 4, 6, 4, 1)[r] for r in range(5)))


def best_excluded(q: Quartic) -> int:
    """The component whose exclusion leaves the best-conditioned block."""
    m = wagner_minors(q)
    return int(np.argmax(np.abs(m)))


def require_regular(q: Quartic, tol: float = REGULARITY_TOL) -> None:
    if not is_regular(q, tol):
        qv = q.values()
        raise NotRegular(f"symbol is not regular: discriminant {discriminant(qv):.3g} "
                         f"at scale {qv.scale():.3g}")


def solve_connection(q: Quartic, excluded=DEFAULT_EXCLUDED,
                     tol: float = REGULARITY_TOL) -> tuple[Christoffel, tuple[Jet, Jet]]:
    """Christoffel symbols of the Wagner connection and the two dropped residuals.

    ``q`` must carry jets of order >= 1; the result has one order less.
    ``excluded`` is a 4-index tuple, a row number 0..4, or ``"auto"`` for the
    best-conditioned choice.
    """
    a = q.coeffs
    if not all(isinstance(c, Jet) for c in a):
        raise InsufficientOrder("the symbol must be given as jets")
    m = min(c.order for c in a)
    if m < 1:
        raise InsufficientOrder("connection needs symbol jets of order >= 1")
    require_regular(q, tol)
    r_ex = best_excluded(q) if excluded == "auto" else _excluded_row(excluded)
    at = [c.truncate(m - 1) for c in a]
    da = [[jet_partial(c, 1) for c in a], [jet_partial(c, 2) for c in a]]
    rows = block_rows(at)
    kept = [r for r in range(5) if r != r_ex]
    matrix = system_matrix(Quartic(*at), r_ex)
    rhs = [-da[0][r] for r in kept] + [-da[1][r] for r in kept]
    try:
        x = linalg.solve(matrix, rhs)
    except SingularSystem as exc:
        raise SingularSystem(f"excluding component row {r_ex}: {exc}; the full system is "
                             "regular, choose another excluded component") from exc
    base = a[0].base
    x = [v if isinstance(v, Jet) else Jet.constant(v, m - 1, base) for v in x]
    G = [[[None, None], [None, None]], [[None, None], [None, None]]]
    for l in range(2):
        g11, g12, g21, g22 = x[4 * l: 4 * l + 4]
        G[0][l][0], G[0][l][1], G[1][l][0], G[1][l][1] = g11, g12, g21, g22
    res = []
    for l in range(2):
        row = rows[r_ex]
        res.append(da[l][r_ex] + row[0] * x[4 * l] + row[1] * x[4 * l + 1]
                   + row[2] * x[4 * l + 2] + row[3] * x[4 * l + 3])
    return Christoffel.from_array(G), (res[0], res[1])


def wagner_connection(q: Quartic, tol: float = REGULARITY_TOL) -> Christoffel:
    """Connection from the best-conditioned exclusion (pipelines use this)."""
    return solve_connection(q, "auto", tol)[0]


# tensor checks ---------------------------------------------------------------

def covariant_derivative_symbol(q: Quartic, G: Christoffel) -> np.ndarray:
    """All components ``(nabla_l a)^{i1..i4}``, shape (2, 5): ``[l][r]``.

    Evaluated by brute-force index sums over the full symmetric tensor, not
    through the compact row formula the solver uses.
    """
    m = min(G.order, min(c.order for c in q.coeffs if isinstance(c, Jet)) - 1)
    comp = [c.truncate(m) if isinstance(c, Jet) else c for c in q.coeffs]
    dcomp = [[jet_partial(c, d).truncate(m) if isinstance(c, Jet) else 0.0 for c in q.coeffs] for d in (1, 2)]

    def a_of(idx: tuple[int, ...]) -> Scalar:
        return comp[sum(idx)]  # idx uses 0/1 for directions 1/2

    G_ = [[[G.G[i][j][k].truncate(m) for k in range(2)] for j in range(2)] for i in range(2)]
    out = np.empty((2, 5), dtype=object)
    for l in range(2):
        for r in range(5):
            idx = tuple([0] * (4 - r) + [1] * r)
            acc = dcomp[l][r]
            for s in range(4):
                for mm in range(2):
                    rep = idx[:s] + (mm,) + idx[s + 1:]
                    acc = acc + G_[idx[s]][l][mm] * a_of(rep)
            out[l, r] = acc
    return out


def torsion(G: Christoffel) -> Torsion:
    T = tuple(tuple(tuple(G.G[i][j][k] - G.G[i][k][j] for k in range(2)) for j in range(2)) for i in range(2))
    theta = tuple(T[0][0][k] + T[1][1][k] for k in range(2))
    return Torsion(T, theta)


def curvature(G: Christoffel) -> Curvature:
    """``R^i_{jkl} = d_k G^i_{lj} - d_l G^i_{kj} + G^i_{km} G^m_{lj} - G^i_{lm} G^m_{kj}``."""
    if G.order < 1:
        raise InsufficientOrder("curvature needs connection jets of order >= 1")
    m = G.order - 1
    g = [[[G.G[i][j][k].truncate(m) for k in range(2)] for j in range(2)] for i in range(2)]
    dg = [[[[jet_partial(G.G[i][j][k], d + 1) for d in range(2)] for k in range(2)] for j in range(2)]
          for i in range(2)]
    R = [[[[None] * 2 for _ in range(2)] for _ in range(2)] for _ in range(2)]
    for i, j, k, l in itertools.product(range(2), repeat=4):
        acc = dg[i][l][j][k] - dg[i][k][j][l]
        for mm in range(2):
            acc = acc + g[i][k][mm] * g[mm][l][j] - g[i][l][mm] * g[mm][k][j]
        R[i][j][k][l] = acc
    return Curvature(tuple(tuple(tuple(tuple(R[i][j][k]) for k in range(2)) for j in range(2)) for i in range(2)))


def torsion_parallel_residual(G: Christoffel, T: Torsion | None = None) -> np.ndarray:
    """Components of ``nabla T`` with ``j != k``, ordered ``(l, i, (j, k))``; 8 floats."""
    if G.order < 1:
        raise InsufficientOrder("needs connection jets of order >= 1")
    if T is None:
        T = torsion(G)
    out = []
    for l in range(2):
        for i in range(2):
            for j, k in ((0, 1), (1, 0)):
                acc = jet_partial(T.T[i][j][k], l + 1).value
                for mm in range(2):
                    acc += (G.G[i][l][mm].value * T.T[mm][j][k].value
                            - G.G[mm][l][j].value * T.T[i][mm][k].value
                            - G.G[mm][l][k].value * T.T[i][j][mm].value)
                out.append(acc)
    return np.array(out)


def transform_connection(G: np.ndarray, jac: np.ndarray, hess: np.ndarray) -> np.ndarray:
    """Christoffel values in new coordinates ``x' = phi(x)`` at corresponding points.

    ``jac[a][b] = d phi^a / d x^b``, ``hess[a][b][c] = d^2 phi^a / d x^b d x^c``.
    Uses ``G'^a_{bc} = J^a_i G^i_{jk} Jinv^j_b Jinv^k_c - Jinv^j_b Jinv^k_c d_j d_k phi^a``.
    """
    jinv = np.linalg.inv(jac)
    first = np.einsum("ai,ijk,jb,kc->abc", jac, G, jinv, jinv)
    second = np.einsum("ajk,jb,kc->abc", hess, jinv, jinv)
    return first - second


# constant type and group type ---------------------------------------------------

def orbit_coordinate(q: Quartic) -> Scalar:
    """An absolute invariant that is a regular local coordinate on regular orbits.

    ``I3 / |I2|^(3/2)`` where ``|I2|^3 >= 27 I3^2``, else ``I2 / |I3|^(2/3)``.
    ``I0`` itself is unsuitable near ``I3 = 0`` (it is a square there) and
    has a pole at ``I2 = 0``.
    """
    i2, i3 = hilbert_invariants(q)
    v2, v3 = value_of(i2), value_of(i3)
    if abs(v2) ** 3 >= 27 * v3 * v3:
        return i3 * jpow(i2 if v2 > 0 else -i2, -1.5)
    return i2 * jpow(i3 if v3 > 0 else -i3, -2.0 / 3.0)


def invariant_gradient(q: Quartic) -> tuple[float, float, float]:
    """Gradient and value ``(gx, gy, K)`` of :func:`orbit_coordinate`.

    The gradient vanishes exactly where the symbol's 1-jet is tangent to its
    orbit, which is what constant type asks at every point.
    """
    k = orbit_coordinate(q)
    gx, gy = k.gradient()
    return gx, gy, k.value


def _symbol_provider(source) -> Callable[[Point, int], Quartic]:
    from quartop.operator4 import OperatorField, principal_symbol

    if isinstance(source, OperatorField):
        return lambda p, m: principal_symbol(source, p, m)
    if callable(source):
        return source
    raise TypeError("expected an Operator or a callable (point, order) -> Quartic")


def group_type_classify(source, points: Iterable[Point], tol: float = TORSION_TOL,
                        order: int = 3) -> GroupType:
    """Sampled group type of the principal symbol of ``source``.

    ``source`` is an :class:`~quartop.operator4.Operator` or a callable
    returning the symbol jets at a point.
    """
    symbol_at = _symbol_provider(source)
    samples = [symbol_at((float(p[0]), float(p[1])), order) for p in points]
    for q in samples:
        require_regular(q, REGULARITY_TOL)
    for q in samples:
        gx, gy, k = invariant_gradient(q)
        if np.hypot(gx, gy) > CONSTANT_TYPE_TOL * (1.0 + abs(k)):
            return GroupType.NOT_CONSTANT_TYPE
    saw_torsion = False
    for q in samples:
        G = wagner_connection(q)
        scale = 1.0 + float(np.abs(G.values()).max())
        T = torsion(G)
        if T.norm() > tol * scale:
            saw_torsion = True
            if np.abs(torsion_parallel_residual(G, T)).max() > tol * scale**2:
                return GroupType.NON_PARALLEL_TORSION
    return GroupType.SOLVABLE if saw_torsion else GroupType.ABELIAN
