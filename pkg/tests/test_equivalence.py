import random

import pytest

from quartop.equivalence import (
    Distinct,
    Incomparable,
    IndistinguishableAtSamples,
    compare,
    signature,
    tuple_distance,
    verify_diffeo,
)
from quartop.errors import AllPointsSingular, SingularJacobian
from quartop.invariants import random_gl_field_operator
from quartop.operator4 import Diffeo, Operator, PushedOperator
from support import random_diffeo, random_poly_operator

VARYING = {"a0": "1", "a2": "x", "a4": "1", "e0": "1 + y"}
GRID = [(x, y) for x in (-0.3, 0.0, 0.3) for y in (-0.3, 0.0, 0.3)]


def op(coeffs):
    return Operator.from_strings({k: str(v) for k, v in coeffs.items()})


def test_constant_coefficient_signature_is_constant():
    A = op({"a0": "1", "a1": "0.2", "a4": "-1", "b0": "0.5", "e0": "2"})
    s = signature(A, GRID)
    assert s.tag == "Abelian" and s.skipped == 0
    assert len(set(s.tuples)) == 1


def test_varying_family_has_distinct_tuples():
    s = signature(op(VARYING), [(1.5, 0.0), (2.0, 0.0), (2.5, 0.0)])
    assert s.tag == "NonConstantType"
    assert len(set(s.tuples)) == 3 and all(len(t) == 7 for t in s.tuples)
    full = signature(op(VARYING), [(1.5, 0.0)], full=True)
    assert len(full.tuples[0]) == 17


def test_singular_samples_are_skipped():
    A = op({"a0": "x^2", "a4": "1"})
    s = signature(A, [(0.0, 0.0), (1.0, 0.0), (1.5, 0.2)])
    assert s.skipped == 1 and len(s.tuples) == 2 and s.reasons
    with pytest.raises(AllPointsSingular):
        signature(A, [(0.0, 0.0), (0.0, 0.5)])


def test_reflexive_and_symmetric():
    A = random_poly_operator(random.Random(1))
    B = random_poly_operator(random.Random(2))
    sa, sb = signature(A, GRID), signature(B, GRID)
    assert compare(sa, sa) == IndistinguishableAtSamples(0.0)
    ab, ba = compare(sa, sb), compare(sb, sa)
    assert isinstance(ab, Distinct) and isinstance(ba, Distinct)
    assert ab.distance == ba.distance


def test_pushforward_is_indistinguishable():
    rng = random.Random(3)
    for _ in range(3):
        A = random_poly_operator(rng)
        phi = random_diffeo(rng)
        s1 = signature(A, GRID)
        s2 = signature(PushedOperator(A, phi), [phi(p) for p in GRID])
        v = compare(s1, s2)
        assert isinstance(v, IndistinguishableAtSamples) and v.distance < 1e-6


def test_constant_type_pushforward_is_indistinguishable():
    rng = random.Random(4)
    A = random_gl_field_operator(rng)
    phi = random_diffeo(rng)
    grid = [(x / 2, y / 2) for x, y in GRID]
    s1 = signature(A, grid)
    assert s1.tag == "NonParallelTorsion" and len(s1.tuples[0]) == 15
    v = compare(s1, signature(PushedOperator(A, phi), [phi(p) for p in grid]))
    assert isinstance(v, IndistinguishableAtSamples) and v.distance < 1e-6


def test_perturbation_is_distinct():
    A = op(VARYING)
    B = op(dict(VARYING, a2="x + 0.1*x"))
    pts = [(1.5 + 0.1 * i, 0.1 * j) for i in range(3) for j in range(2)]
    v = compare(signature(A, pts), signature(B, pts))
    assert isinstance(v, Distinct) and v.distance > 1e-6 and 0 <= v.witness < 6


def test_type_mismatch_is_incomparable():
    s1 = signature(op(VARYING), [(1.5, 0.0), (2.0, 0.0), (2.5, 0.0)])
    s2 = signature(op({"a0": "1", "a4": "-1"}), GRID)
    assert isinstance(compare(s1, s2), Incomparable)


def test_too_few_samples_is_incomparable():
    s = signature(op(VARYING), [(1.5, 0.0), (2.0, 0.0)])
    v = compare(s, s)
    assert isinstance(v, Incomparable) and "regular samples" in v.reason


def test_tuple_distance():
    assert tuple_distance((1.0, 2.0), (1.0, 2.0)) == 0.0
    assert tuple_distance((1.0, 0.0), (2.0, 0.0)) == pytest.approx(0.5)
    assert tuple_distance((1.0,), (1.0, 2.0)) == float("inf")


def test_verify_diffeo():
    rng = random.Random(5)
    A = random_poly_operator(rng)
    phi = random_diffeo(rng)
    B = PushedOperator(A, phi)
    ok, res = verify_diffeo(A, B, phi, GRID)
    assert ok and res <= 1e-9
    ok, res = verify_diffeo(A, A, Diffeo.from_strings("x", "y"), GRID)
    assert ok and res <= 1e-14
    ok, res = verify_diffeo(A, A, Diffeo.from_strings("2*x + 0.1*y^2", "y - x"), GRID)
    assert not ok and res > 1e-3
    with pytest.raises(SingularJacobian):
        verify_diffeo(A, A, Diffeo.from_strings("x^3", "y"), [(0.0, 0.0)])


def test_verify_implies_indistinguishable():
    rng = random.Random(6)
    for _ in range(5):
        A = random_poly_operator(rng)
        phi = random_diffeo(rng)
        B = PushedOperator(A, phi)
        ok, _ = verify_diffeo(A, B, phi, GRID)
        v = compare(signature(A, GRID), signature(B, [phi(p) for p in GRID]))
        assert ok and isinstance(v, IndistinguishableAtSamples)
