from fractions import Fraction

import pytest
import sympy
from hypothesis import given, strategies as st

from fibremod.series import LogSeries, Series2
from fibremod.weyl import (OperatorError, ShiftOp, annihilates, holomorphic_solution, make_L1, make_L2,
                           restrict, univariate_holomorphic)
from oracles import gkz_coefficient, hypergeometric_2f1

CAPS = (6, 4)
coef = st.integers(min_value=-4, max_value=4)


@st.composite
def ops(draw, h=2, max_terms=4):
    terms = {}
    for _ in range(draw(st.integers(min_value=1, max_value=max_terms))):
        a = tuple(draw(st.integers(0, 1)) for _ in range(h))
        b = tuple(draw(st.integers(0, 2)) for _ in range(h))
        terms[(a, b)] = draw(coef)
    return ShiftOp(h, terms)


@st.composite
def polys(draw):
    return Series2(CAPS, {(i, j): draw(coef) for i in range(3) for j in range(3)})


def test_commutation_rule():
    t, z = ShiftOp.theta(1, 1), ShiftOp.z(1, 1)
    assert t * z == z * (t + 1)
    assert t * t * z == z * (t + 1) * (t + 1)


@given(ops(), ops(), ops())
def test_product_is_associative(a, b, c):
    assert (a * b) * c == a * (b * c)


@given(ops(), ops(), polys())
def test_product_acts_as_composition(a, b, f):
    assert (a * b).apply(f) == a.apply(b.apply(f))


@given(ops(h=2, max_terms=3), polys())
def test_apply_matches_sympy(op, f):
    z1, z2 = sympy.symbols("z1 z2")
    expr = sum(sympy.Rational(int(v.numerator), int(v.denominator)) * z1 ** i * z2 ** j
               for (i, j), v in f.terms().items())

    def theta(e, z):
        return sympy.expand(z * sympy.diff(e, z))

    total = 0
    for (a, b), v in op.terms.items():
        e = expr
        for _ in range(b[0]):
            e = theta(e, z1)
        for _ in range(b[1]):
            e = theta(e, z2)
        total += sympy.Rational(int(v.numerator), int(v.denominator)) * z1 ** a[0] * z2 ** a[1] * e
    poly = sympy.Poly(sympy.expand(total), z1, z2) if total != 0 else None
    got = op.apply(f)
    for i in range(CAPS[0] + 1):
        for j in range(CAPS[1] + 1):
            want = poly.coeff_monomial(z1 ** i * z2 ** j) if poly is not None else 0
            assert got[i, j] == Fraction(int(sympy.numer(want)), int(sympy.denom(want)))


@given(ops(h=2))
def test_text_round_trip(op):
    assert ShiftOp.parse(op.to_text(), 2) == op


def test_parse_accepts_factored_text():
    op = ShiftOp.parse("T1^2 - 432*z1*(T1 + 1/6)*(T1 + 5/6)", 1)
    t, z = ShiftOp.theta(1, 1), ShiftOp.z(1, 1)
    assert op == t * t - z * (t + Fraction(1, 6)) * (t + Fraction(5, 6)) * 432


def test_parse_rejects_garbage():
    with pytest.raises(OperatorError):
        ShiftOp.parse("T1 +* z1", 1)


def test_restriction_to_axis():
    L1 = make_L1(4, 432, Fraction(5, 6), Fraction(1, 6))
    r = restrict(L1, 2).drop_variable(2)
    t, z = ShiftOp.theta(1, 1), ShiftOp.z(1, 1)
    assert r == t * t - z * (t + Fraction(5, 6)) * (t + Fraction(1, 6)) * 432


def test_univariate_solution_is_2f1():
    t, z = ShiftOp.theta(1, 1), ShiftOp.z(1, 1)
    gauss = t * t - z * (t + Fraction(1, 3)) * (t + Fraction(2, 3)) * 27
    assert univariate_holomorphic(gauss, 8) == hypergeometric_2f1(Fraction(1, 3), Fraction(2, 3), 27, 8)


@pytest.mark.parametrize("n", [3, 4])
def test_holomorphic_solution_is_gkz(n):
    gens = [make_L1(n, 64, Fraction(3, 4), Fraction(1, 4)), make_L2(n)]
    sol = holomorphic_solution(gens, (2 * n + 2, 2))
    for i in range(2 * n + 3):
        for j in range(3):
            assert sol.get((i, j), 0) == gkz_coefficient(n, 64, Fraction(3, 4), Fraction(1, 4), i, j)


def test_annihilates_locates_residual():
    t = ShiftOp.theta(2, 1)
    f = Series2.one(CAPS) + Series2.monomial(2, 1, CAPS)
    rep = annihilates(t, f)
    assert not rep.ok and rep.first_residual == ((0, 0), (2, 1)) and rep.residual_value == 2
    log = LogSeries.log_var(1, CAPS)
    assert annihilates(t * t, log)


def test_apply_refuses_truncation_loss():
    with pytest.raises(Exception):
        (ShiftOp.z(2, 1) ** 3).apply(Series2.one((2, 2)))
