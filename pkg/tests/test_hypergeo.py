from fractions import Fraction
from math import factorial

import pytest
from hypothesis import given, strategies as st

from fibremod.hypergeo import (DiffFieldElem, HGParams, HypergeoError, derivative_rule_check, df_eval,
                               gauss_operator, limit_b_to_negint_check, log_companion, pfq, shift_rule_check,
                               wronskian_closed_form_check)
from fibremod.series import LogSeries, Series2
from oracles import pochhammer

TABLE_ROWS = [(432, Fraction(5, 6), Fraction(1, 6)), (64, Fraction(3, 4), Fraction(1, 4)),
              (27, Fraction(2, 3), Fraction(1, 3)), (16, Fraction(1, 2), Fraction(1, 2))]
param = st.fractions(min_value=Fraction(1, 7), max_value=3, max_denominator=7)


@given(st.lists(param, min_size=1, max_size=3), st.lists(param, min_size=1, max_size=2),
       st.integers(min_value=1, max_value=5))
def test_pfq_matches_pochhammer_formula(upper, lower, scale):
    s = pfq(HGParams(upper, lower), 6, scale)
    for k in range(7):
        want = Fraction(scale) ** k / factorial(k)
        for a in upper:
            want *= pochhammer(a, k)
        for b in lower:
            want /= pochhammer(b, k)
        assert s[k, 0] == want


@pytest.mark.parametrize("a0,a1,a2", TABLE_ROWS)
def test_log_solution_is_annihilated(a0, a1, a2):
    order = 10
    F = pfq(HGParams((a1, a2)), order, a0)
    G = log_companion((a1, a2), order, a0)
    sol = LogSeries({(0, 0): G, (1, 0): F})
    op = gauss_operator(HGParams((a1, a2)), a0)
    assert op.apply(F).is_zero()
    res = op.apply(sol)
    assert all(p.is_zero() for p in res.parts.values())


@pytest.mark.parametrize("a0,a1,a2", TABLE_ROWS)
def test_wronskian_closed_form(a0, a1, a2):
    assert wronskian_closed_form_check(a0, a1, a2, 12)


@pytest.mark.parametrize("upper,lower", [((Fraction(1, 2), Fraction(1, 3)), (1,)), ((2, Fraction(5, 6)), (3,)),
                                         ((Fraction(1, 6), Fraction(5, 6), Fraction(1, 2)), (2, Fraction(1, 2)))])
def test_derivative_rule(upper, lower):
    assert derivative_rule_check(HGParams(upper, lower), 8)


@pytest.mark.parametrize("b1", [1, 2, 3])
def test_shift_rule(b1):
    assert shift_rule_check(HGParams((Fraction(1, 3), Fraction(2, 3)), (b1,)), 8)


@pytest.mark.parametrize("n", [0, 1, 2, 3])
def test_limit_to_negative_integer(n):
    assert limit_b_to_negint_check(Fraction(5, 6), Fraction(1, 6), n, 10)


def test_nonpositive_lower_parameter_rejected():
    with pytest.raises(HypergeoError):
        pfq(HGParams((1,), (-2,)), 4)


@pytest.mark.parametrize("a0,a1,a2", TABLE_ROWS)
def test_field_theta_commutes_with_expansion(a0, a1, a2):
    P = (a0, a1, a2)
    Z, F, T = DiffFieldElem.Z(P), DiffFieldElem.F(P), DiffFieldElem.T(P)
    for e in (F, T, Z * F * F + T * 3, T / F, (F * T - 2) / (1 - a0 * Z)):
        order = 9
        assert df_eval(e.theta(), order) == df_eval(e, order).theta(1)


def test_field_generators_expand_to_2f1():
    P = (432, Fraction(5, 6), Fraction(1, 6))
    F = df_eval(DiffFieldElem.F(P), 8)
    assert F == pfq(HGParams((Fraction(5, 6), Fraction(1, 6))), 8, 432)
    assert df_eval(DiffFieldElem.T(P), 8) == F.theta(1)
    assert df_eval(DiffFieldElem.Z(P), 8) == Series2.monomial(1, 0, (8, 0))


def test_listed_coefficients():
    F = pfq(HGParams((Fraction(1, 6), Fraction(5, 6))), 2)
    assert (F[1, 0], F[2, 0]) == (Fraction(5, 36), Fraction(385, 5184))
    G = log_companion((Fraction(1, 2), Fraction(1, 2)), 3)
    assert G[0, 0] == 0 and G[1, 0] == Fraction(1, 2)


def test_gauss_operator_form():
    from fibremod.weyl import ShiftOp
    t, z = ShiftOp.theta(1, 1), ShiftOp.z(1, 1)
    assert gauss_operator(HGParams((Fraction(5, 6), Fraction(1, 6)))) == t * t - z * (t + Fraction(5, 6)) * (t + Fraction(1, 6))


def test_first_order_case_is_binomial():
    a = Fraction(2, 5)
    op = gauss_operator(HGParams((a,), ()))
    f = Series2.univariate([1, -1], 10).pow_rational(-a)
    assert op.apply(f).is_zero()


def test_theta_of_T_reduction():
    P = (432, Fraction(5, 6), Fraction(1, 6))
    Z, F, T = DiffFieldElem.Z(P), DiffFieldElem.F(P), DiffFieldElem.T(P)
    assert T.theta() == (432 * Z * T + 60 * Z * F) / (1 - 432 * Z)
    assert Z.theta() == Z and F.theta() == T
    geo = df_eval(1 / (1 - 432 * Z), 6)
    assert [geo[k, 0] for k in range(7)] == [432 ** k for k in range(7)]
