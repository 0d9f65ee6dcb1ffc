import math

import numpy as np
import pytest
import sympy as sp
from hypothesis import given
from hypothesis import strategies as st

from quartop import expr as ex
from quartop.errors import BasePointMismatch, InsufficientOrder, SingularLinearPart, ZeroDivisor
from quartop.jet import (
    Jet,
    MapJet,
    compose_maps,
    jet_compose,
    jet_div,
    jet_invert_map,
    jet_mul,
    jet_partial,
    jexp,
)
from support import X, Y, random_jet, sympy_taylor


def xy(order, base=(0.0, 0.0)):
    return Jet.variable(1, order, base), Jet.variable(2, order, base)


def assert_jet(j: Jet, expected: dict, tol=1e-13):
    for (i, k), v in expected.items():
        assert j.coeff(i, k) == pytest.approx(v, abs=tol), (i, k)


# worked examples -------------------------------------------------------------------

def test_difference_of_squares():
    x, _ = xy(2)
    assert jet_mul(1 + x, 1 - x).as_dict() == Jet.from_dict({(0, 0): 1, (2, 0): -1}, 2).as_dict()


def test_multiplicative_identity():
    f = random_jet(np.random.default_rng(0), 4)
    assert jet_mul(f, Jet.constant(1.0, 4)) == f


def test_exp_times_exp_is_exp_of_2x():
    x, _ = xy(2)
    e = jexp(x)
    assert_jet(e * e, {(0, 0): 1, (1, 0): 2, (2, 0): 2, (0, 1): 0, (1, 1): 0, (0, 2): 0})


def test_geometric_series():
    x, _ = xy(3)
    r = jet_div(Jet.constant(1.0, 3), 1 - x)
    assert_jet(r, {(k, 0): 1.0 for k in range(4)})


def test_self_division():
    a = random_jet(np.random.default_rng(1), 5, unit=True)
    assert (a / a).is_close(Jet.constant(1.0, 5))


def test_division_by_non_unit():
    x, _ = xy(3)
    with pytest.raises(ZeroDivisor):
        jet_div(Jet.constant(1.0, 3), x)


def test_base_mismatch():
    with pytest.raises(BasePointMismatch):
        jet_mul(Jet.constant(1.0, 2, (0, 0)), Jet.constant(1.0, 2, (1, 0)))


def test_compose_linear_substitution():
    x, y = xy(4)
    phi = MapJet(x + y, y)
    assert jet_compose(x, phi) == x + y
    assert jet_compose(x * x, phi).is_close(x * x + 2 * x * y + y * y)
    f = random_jet(np.random.default_rng(2), 4)
    assert jet_compose(f, MapJet.identity(4, (0, 0))).is_close(f, 1e-14, 1e-14)


def test_invert_examples():
    x, y = xy(5)
    psi = jet_invert_map(MapJet(x + y * y, y))
    assert psi.phi1.is_close(x - y * y) and psi.phi2.is_close(y)
    psi = jet_invert_map(MapJet(2 * x, 3 * y))
    assert psi.phi1.is_close(x / 2) and psi.phi2.is_close(y / 3)
    with pytest.raises(SingularLinearPart):
        jet_invert_map(MapJet(x * x, y))


def test_partial_examples():
    x, y = xy(4)
    assert jet_partial(x * x * y, 1).is_close((2 * x * y).truncate(3))
    assert jet_partial(Jet.constant(3.0, 4), 2).is_close(Jet.constant(0.0, 3))
    e = jexp(2 * x)
    assert jet_partial(e, 1).is_close((2 * e).truncate(3))
    with pytest.raises(InsufficientOrder):
        jet_partial(Jet.constant(1.0, 0), 1)


# structural invariants ----------------------------------------------------------------

@pytest.mark.parametrize("order", [0, 1, 4, 8])
def test_coefficient_count_and_value(order):
    f = random_jet(np.random.default_rng(order), order)
    assert f.coeffs.shape == ((order + 1) * (order + 2) // 2,)
    assert f.value == f.coeffs[0] == f.coeff(0, 0)


def test_order_of_result_is_minimum():
    rng = np.random.default_rng(3)
    a, b = random_jet(rng, 5), random_jet(rng, 3, unit=True)
    assert (a + b).order == (a * b).order == (a / b).order == 3


# ring axioms and round trips ---------------------------------------------------------

seeds = st.integers(0, 2**32 - 1)
orders = st.integers(0, 7)


@given(seeds, orders)
def test_ring_axioms(seed, order):
    rng = np.random.default_rng(seed)
    a, b, c = (random_jet(rng, order) for _ in range(3))
    assert ((a * b) * c).is_close(a * (b * c), 1e-12, 1e-12)
    assert (a * (b + c)).is_close(a * b + a * c, 1e-12, 1e-12)
    assert (a * b) == (b * a)


@given(seeds, orders)
def test_ring_axioms_exact_on_integer_jets(seed, order):
    rng = np.random.default_rng(seed)
    n = (order + 1) * (order + 2) // 2
    a, b, c = (Jet(rng.integers(-9, 10, size=n).astype(float), order) for _ in range(3))
    assert (a * b) * c == a * (b * c)
    assert a * (b + c) == a * b + a * c
    assert a * b == b * a


@given(seeds, orders)
def test_division_inverts_multiplication(seed, order):
    rng = np.random.default_rng(seed)
    a, b = random_jet(rng, order), random_jet(rng, order, unit=True)
    assert jet_mul(jet_div(a, b), b).is_close(a, 1e-9, 1e-9)


def random_poly_map(rng, order):
    """A cubic polynomial map with a well-conditioned linear part."""
    x, y = xy(order)
    L = np.eye(2) + 0.4 * rng.uniform(-1, 1, size=(2, 2))
    c = rng.uniform(-0.5, 0.5, size=(2, 7))
    monos = [x * x, x * y, y * y, x**3, x * x * y, x * y * y, y**3]
    comp = [sum((c[k, m] * monos[m] for m in range(7)), Jet.constant(0.0, order)) for k in range(2)]
    return MapJet(L[0, 0] * x + L[0, 1] * y + comp[0], L[1, 0] * x + L[1, 1] * y + comp[1])


@given(seeds, st.integers(1, 8))
def test_invert_round_trip(seed, order):
    rng = np.random.default_rng(seed)
    x, y = xy(order)
    phi = random_poly_map(rng, order)
    inv = jet_invert_map(phi)
    size = max(1.0, np.abs(inv.phi1.coeffs).max(), np.abs(inv.phi2.coeffs).max())
    for ident in (compose_maps(inv, phi), compose_maps(phi, inv)):
        err = max(np.abs(ident.phi1.coeffs - x.coeffs).max(), np.abs(ident.phi2.coeffs - y.coeffs).max())
        assert err <= 1e-14 * size
        if size <= 100:
            assert err <= 1e-12


@given(seeds)
def test_compose_associative(seed):
    rng = np.random.default_rng(seed)
    order = 5
    x, y = xy(order)

    def rmap():
        a = rng.normal(size=4) * 0.5
        return MapJet(x + a[0] * x * y + a[1] * y * y, y + a[2] * x * x + a[3] * x * y * y)

    f, g, h = rmap(), rmap(), rmap()
    left = compose_maps(compose_maps(f, g), h)
    right = compose_maps(f, compose_maps(g, h))
    assert left.phi1.is_close(right.phi1, 1e-12, 1e-12)
    assert left.phi2.is_close(right.phi2, 1e-12, 1e-12)


# oracles ----------------------------------------------------------------------------

@pytest.mark.parametrize(
    "text, sym",
    [
        ("exp(sin(x)*y) + x^3/(2 + y)", sp.exp(sp.sin(X) * Y) + X**3 / (2 + Y)),
        ("log(3 + x*y)*cos(x - y)", sp.log(3 + X * Y) * sp.cos(X - Y)),
        ("sqrt(4 + x + y^2)^3", sp.sqrt(4 + X + Y**2) ** 3),
    ],
)
def test_jet_matches_symbolic_taylor(text, sym):
    p = (0.3, -0.4)
    j = ex.eval_jet(ex.parse(text), p, 6)
    expected = sympy_taylor(sym, p, 6)
    for (i, k), v in expected.items():
        assert j.coeff(i, k) == pytest.approx(v, rel=1e-11, abs=1e-12)


def test_partial_matches_finite_differences():
    e = ex.parse("exp(x)*sin(2*y) + x^2*y")
    p, h = (0.4, 0.7), 1e-5
    j = ex.eval_jet(e, p, 3)
    fd_x = (ex.eval_float(e, (p[0] + h, p[1])) - ex.eval_float(e, (p[0] - h, p[1]))) / (2 * h)
    fd_y = (ex.eval_float(e, (p[0], p[1] + h)) - ex.eval_float(e, (p[0], p[1] - h))) / (2 * h)
    assert jet_partial(j, 1).value == pytest.approx(fd_x, rel=1e-6)
    assert jet_partial(j, 2).value == pytest.approx(fd_y, rel=1e-6)


def test_derivative_uses_factorials():
    x, _ = xy(5)
    f = x**4
    assert f.derivative(4, 0) == pytest.approx(math.factorial(4))
