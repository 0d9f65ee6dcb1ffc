import random

import numpy as np
import pytest

from quartop import expr as ex
from quartop.errors import InsufficientOrder, NotConstantType
from quartop.invariants import random_gl_field_operator
from quartop.jet import Jet
from quartop.operator4 import Operator, PointOperator, pushforward
from quartop.quantize import (
    SymForm,
    SymVector,
    dsym,
    homogeneous_part,
    pair,
    quantize,
    quantize_coeffs,
    reconstruct,
    total_symbol,
)
from quartop.wagner import Christoffel, wagner_connection
from support import X, Y, random_diffeo, sympy_jet, sympy_quantize, to_sympy


def xjet(text, p=(0.0, 0.0), order=6):
    return ex.eval_jet(ex.parse(text), p, order)


def exponential_connection(order=4, p=(0.0, 0.0)):
    A = Operator.from_strings({"a0": "exp(4*y)", "a4": "-1"})
    return wagner_connection(A.at(p, order + 1).principal_symbol())


def random_poly(rng, degree=2):
    return " + ".join(f"{rng.uniform(-1, 1)!r}*x^{i}*y^{j}" for i in range(degree + 1) for j in range(degree + 1 - i))


# dsym and pair ---------------------------------------------------------------------------

def test_dsym_of_function_is_differential():
    h = xjet("x^2*y + sin(y)", (0.3, 0.2), 4)
    d = dsym(SymForm((h,)), Christoffel.zero(4, (0.3, 0.2)))
    assert d.coeffs[0].is_close(h.partial(1), 0, 0) and d.coeffs[1].is_close(h.partial(2), 0, 0)


def test_flat_second_differential():
    h = xjet("x^3*y^2 + exp(x)", (0.1, 0.4), 5)
    hx = h.partial(1)
    d = dsym(SymForm((hx, 0 * hx)), Christoffel.zero(5, (0.1, 0.4)))
    # omega = h_x w1 -> h_xx w1^2 + h_xy w1 w2
    assert d.degree == 2
    assert d.coeffs[0].value == pytest.approx(h.derivative(2, 0))
    assert d.coeffs[1].value == pytest.approx(h.derivative(1, 1))
    assert d.coeffs[2].value == 0.0


def test_dsym_symmetrizes_connection():
    one, zero = Jet.constant(1.0, 2), Jet.constant(0.0, 2)
    G = Christoffel.from_array([[[zero, zero], [-one, zero]], [[zero, zero], [zero, zero]]])
    assert G(1, 2, 1).value == -1.0
    d = dsym(SymForm((one, zero)), G)
    assert list(d.values()) == [0.0, 1.0, 0.0]


def test_dsym_needs_order():
    with pytest.raises(InsufficientOrder):
        dsym(SymForm((Jet.constant(1.0, 0),)), Christoffel.zero(1, (0.0, 0.0)))


def test_pair_examples():
    assert pair(SymVector((1, 0, 0, 0, 0)), SymForm((1, 0, 0, 0, 0))) == 24
    assert pair(SymVector((1, 2, 3, 4, 5)), SymForm((0,) * 5)) == 0
    assert pair(SymVector((0, 1, 0)), SymForm((0, 1, 0))) == 1
    with pytest.raises(ValueError):
        pair(SymVector((1, 0, 0)), SymForm((1, 0)))


# quantize ---------------------------------------------------------------------------------

def test_flat_quantization_examples():
    G = Christoffel.zero(4, (0.0, 0.0))
    assert quantize(SymVector((1, 0, 0)), G, xjet("x^2", order=4)).value == 2.0
    assert quantize(SymVector((1, 0, 0, 0, -1)), G, xjet("x^4 + y^4", order=4)).value == 0.0
    assert quantize(SymVector((1, 0, 0, 0, 0)), G, xjet("x^4", order=4)).value == 24.0
    with pytest.raises(InsufficientOrder):
        quantize(SymVector((1, 0, 0)), G, xjet("x", order=1))


def test_exponential_connection_quantization_by_hand():
    G = exponential_connection()
    assert G(1, 2, 1).value == pytest.approx(-1.0, abs=1e-12)
    # Q(d_y^2) = d_y^2 and Q(d_x d_y) = d_x d_y + d_x / 2
    Q = quantize_coeffs(SymVector((0.0, 0.0, 1.0)), G)
    raw = {idx: v.value for idx, v in Q.raw_all().items()}
    assert raw[(0, 2)] == pytest.approx(1.0) and all(abs(v) < 1e-12 for i, v in raw.items() if i != (0, 2))
    Q = quantize_coeffs(SymVector((0.0, 1.0, 0.0)), G)
    raw = {idx: v.value for idx, v in Q.raw_all().items()}
    assert raw[(1, 1)] == pytest.approx(1.0) and raw[(1, 0)] == pytest.approx(0.5)
    assert all(abs(v) < 1e-12 for i, v in raw.items() if i not in ((1, 1), (1, 0)))


@pytest.mark.parametrize("k", [1, 2, 3, 4])
def test_quantize_matches_symbolic_oracle(k):
    rng = random.Random(40 + k)
    p = (0.3, -0.2)
    gamma = [[[to_sympy(random_poly(rng, 2)) for _ in range(2)] for _ in range(2)] for _ in range(2)]
    sigma = [to_sympy(random_poly(rng, 1)) for _ in range(k + 1)]
    h = to_sympy(random_poly(rng, 5))
    want = float(sympy_quantize(sigma, gamma, h).subs({X: p[0], Y: p[1]}))
    G = Christoffel.from_array([[[sympy_jet(gamma[i][j][m], p, 4) for m in range(2)] for j in range(2)]
                                for i in range(2)])
    s = SymVector(tuple(sympy_jet(e, p, 4) for e in sigma))
    hj = sympy_jet(h, p, 6)
    assert quantize(s, G, hj).value == pytest.approx(want, rel=1e-11, abs=1e-11)
    # coefficient route applied to the same function
    assert quantize_coeffs(s, G).truncate(0).apply_jet(hj).value == pytest.approx(want, rel=1e-11, abs=1e-11)


def test_coefficients_match_monomial_probes():
    rng = np.random.default_rng(5)
    G = Christoffel.from_array([[[Jet(rng.normal(size=15), 4) for _ in range(2)] for _ in range(2)] for _ in range(2)])
    for k in range(5):
        s = SymVector(tuple(Jet(rng.normal(size=15), 4) for _ in range(k + 1)))
        Q = quantize_coeffs(s, G)
        for d in range(5):
            for j in range(d + 1):
                probe = xjet(f"x^{d - j}*y^{j}", (0.0, 0.0), 8)
                assert Q.truncate(0).apply_jet(probe).value == pytest.approx(quantize(s, G, probe).value,
                                                                             rel=1e-12, abs=1e-12)


def test_calibration_100_pairs():
    rng = np.random.default_rng(6)
    worst = 0.0
    for n in range(100):
        k = n % 5
        G = Christoffel.from_array([[[Jet(rng.normal(size=10), 3) for _ in range(2)] for _ in range(2)]
                                    for _ in range(2)])
        s = SymVector(tuple(Jet(rng.normal(size=10), 3) for _ in range(k + 1)))
        top = homogeneous_part(quantize_coeffs(s, G), k)
        worst = max(worst, max(abs(a.value - b.value) / max(1.0, abs(b.value)) for a, b in zip(top.coeffs, s.coeffs)))
    assert worst <= 4 * np.finfo(float).eps


def test_quantization_is_linear():
    rng = np.random.default_rng(7)
    G = Christoffel.from_array([[[Jet(rng.normal(size=10), 3) for _ in range(2)] for _ in range(2)] for _ in range(2)])
    s1 = SymVector(tuple(Jet(rng.normal(size=10), 3) for _ in range(4)))
    s2 = SymVector(tuple(Jet(rng.normal(size=10), 3) for _ in range(4)))
    s12 = SymVector(tuple(a + 2.0 * b for a, b in zip(s1.coeffs, s2.coeffs)))
    h = Jet(rng.normal(size=28), 6)
    lhs = quantize(s12, G, h)
    rhs = quantize(s1, G, h) + 2.0 * quantize(s2, G, h)
    assert lhs.is_close(rhs, 1e-12, 1e-12)


# total symbol ------------------------------------------------------------------------------

def test_constant_coefficients_are_read_verbatim():
    vals = {n: float(i + 1) for i, n in enumerate(["a0", "a1", "a2", "a3", "a4", "b0", "b1", "b2", "b3",
                                                     "c0", "c1", "c2", "d0", "d1", "e0"])}
    vals["a4"] = -1.0
    A = Operator.from_strings({n: repr(v) for n, v in vals.items()})
    ts = total_symbol(A, (0.2, 0.1))
    assert list(ts[3].values()) == [vals["b0"], 3 * vals["b1"], 3 * vals["b2"], vals["b3"]]
    assert list(ts[2].values()) == [vals["c0"], 2 * vals["c1"], vals["c2"]]
    assert list(ts[1].values()) == [vals["d0"], vals["d1"]]
    assert list(ts[0].values()) == [vals["e0"]]
    assert list(ts[4].values()) == [1.0, 8.0, 18.0, 16.0, -1.0]


def test_round_trip_from_random_parts():
    rng = random.Random(8)
    nrng = np.random.default_rng(8)
    p = (0.1, -0.1)
    for _ in range(5):
        A = random_gl_field_operator(rng)
        q = A.at(p, 6).principal_symbol()
        G = wagner_connection(q)
        parts = [SymVector((Jet(nrng.normal(size=21), 5, p),))]
        parts += [SymVector(tuple(Jet(nrng.normal(size=21), 5, p) for _ in range(k + 1))) for k in (1, 2, 3)]
        parts.append(SymVector(q.poly()))
        B = quantize_coeffs(parts[0], G)
        for k in range(1, 5):
            B = B + quantize_coeffs(parts[k], G)
        ts = total_symbol(B)
        for k in range(5):
            assert ts[k].values() == pytest.approx(parts[k].values(), rel=1e-8, abs=1e-8), k


def test_reconstruction_on_random_polynomials():
    rng = random.Random(9)
    A = random_gl_field_operator(rng)
    p = (0.2, 0.15)
    Ap = A.at(p, 5)
    R = reconstruct(total_symbol(Ap))
    nrng = np.random.default_rng(9)
    for _ in range(50):
        f = Jet(nrng.normal(size=28), 6, p)
        want = Ap.truncate(0).apply_jet(f).value
        got = R.truncate(0).apply_jet(f).value
        assert abs(got - want) <= 1e-9 * max(1.0, abs(want))


def test_total_symbol_is_natural():
    rng = random.Random(10)
    for _ in range(3):
        A = random_gl_field_operator(rng)
        phi = random_diffeo(rng)
        p = (rng.uniform(-0.3, 0.3), rng.uniform(-0.3, 0.3))
        ts = total_symbol(A, p)
        pushed = total_symbol(pushforward(A, phi, p, 5))
        L = phi.jet_at(p, 1).linear_part()
        for k in range(5):
            want = ts[k].pushforward(L).values()
            assert pushed[k].values() == pytest.approx(want, rel=1e-7, abs=1e-7), k


def test_not_constant_type_and_force():
    A = Operator.from_strings({"a0": "1", "a2": "x", "a4": "1", "b0": "y"})
    with pytest.raises(NotConstantType):
        total_symbol(A, (2.0, 0.3))
    ts = total_symbol(A, (2.0, 0.3), force=True)
    assert ts.forced and ts.residual > 1e-3
    assert total_symbol(Operator.from_strings({"a0": "1", "a4": "-1"}), (0.0, 0.0)).residual == 0.0


def test_total_symbol_needs_depth():
    A = Operator.from_strings({"a0": "exp(4*y)", "a4": "-1"})
    with pytest.raises(InsufficientOrder):
        total_symbol(A.at((0.0, 0.0), 1))
    with pytest.raises(ValueError):
        total_symbol(A)
    assert isinstance(quantize_coeffs(SymVector((1.0,)), exponential_connection()), PointOperator)
