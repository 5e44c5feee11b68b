from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from fibremod.series import (ONE, ZERO, LogSeries, QExp, Series2, SeriesError, invert_map, rat, rat_str,
                             substitute)
from oracles import fixed_point_inverse

CAPS = (3, 2)
small_rat = st.fractions(min_value=-5, max_value=5, max_denominator=4)


@st.composite
def series(draw, caps=CAPS, constant=None):
    coeffs = {(i, j): draw(small_rat) for i in range(caps[0] + 1) for j in range(caps[1] + 1)}
    if constant is not None:
        coeffs[(0, 0)] = constant
    return Series2(caps, coeffs)


units = series(constant=Fraction(1))
nilpotent = series(constant=Fraction(0))


@given(series(), series(), series())
def test_ring_laws(a, b, c):
    assert (a * b) * c == a * (b * c)
    assert a * (b + c) == a * b + a * c
    assert a * b == b * a
    assert a - a == Series2(CAPS)


@given(units)
def test_inverse(u):
    assert u * u.inverse() == Series2.one(CAPS)


@given(units, st.integers(min_value=1, max_value=4), st.integers(min_value=1, max_value=3))
def test_rational_power(u, num, den):
    r = Fraction(num, den)
    assert u.pow_rational(r) ** den == u ** num


@given(nilpotent)
def test_exp_log_inverse(g):
    assert g.exp().log() == g


@given(units, units)
def test_log_is_additive(u, v):
    assert (u * v).log() == u.log() + v.log()


@given(series(), series())
def test_theta_leibniz(a, b):
    for axis in (1, 2):
        assert (a * b).theta(axis) == a.theta(axis) * b + a * b.theta(axis)


@given(series())
def test_substitute_identity(f):
    z1, z2 = Series2.monomial(1, 0, CAPS), Series2.monomial(0, 1, CAPS)
    assert substitute(f, z1, z2) == f


@settings(max_examples=25, deadline=None)
@given(units, units)
def test_invert_map_matches_fixed_point(u1, u2):
    v1, v2 = invert_map(u1, u2)
    w1, w2 = fixed_point_inverse(u1, u2)
    assert (v1, v2) == (w1, w2)
    z1, z2 = Series2.monomial(1, 0, CAPS) * v1, Series2.monomial(0, 1, CAPS) * v2
    assert substitute(Series2.monomial(1, 0, CAPS) * u1, z1, z2) == Series2.monomial(1, 0, CAPS)
    assert substitute(Series2.monomial(0, 1, CAPS) * u2, z1, z2) == Series2.monomial(0, 1, CAPS)


def test_invert_map_exact_example():
    # q = z / (1 - z) inverts to z = q / (1 + q)
    caps = (6, 0)
    u = Series2.univariate([1, -1], 6).inverse()
    v1, _ = invert_map(u, Series2.one(caps))
    assert v1 == Series2.univariate([1, 1], 6).inverse()


def test_non_unit_inverse_raises():
    with pytest.raises(SeriesError):
        Series2.monomial(1, 0, CAPS).inverse()


def test_floats_rejected():
    with pytest.raises(TypeError):
        rat(0.5)


def test_rat_str_is_exact():
    assert rat_str(Fraction(-3, 6)) == "-1/2"
    assert rat_str(rat("10/5")) == "2"


@given(series())
def test_json_round_trip(s):
    assert Series2.from_json(s.to_json()) == s


def test_divide_monomial_checks_divisibility():
    s = Series2.monomial(1, 1, CAPS) + Series2.monomial(2, 1, CAPS)
    assert s.divide_monomial(1, 1) == (Series2.one(CAPS) + Series2.monomial(1, 0, CAPS)).truncate((2, 1))
    with pytest.raises(SeriesError):
        (s + ONE).divide_monomial(1, 0)


# -- log series ---------------------------------------------------------------------

@given(series(), series())
def test_theta_of_log_product(a, b):
    ell = LogSeries.log_var(1, CAPS)
    f = LogSeries({(0, 0): a, (1, 0): b})
    assert f == LogSeries.lift(a) + ell * LogSeries.lift(b)
    # theta1 (b log z1) = b + theta1(b) log z1
    assert f.theta(1) == LogSeries({(0, 0): a.theta(1) + b, (1, 0): b.theta(1)})


# -- q-expansions -----------------------------------------------------------------

qcoeffs = st.lists(small_rat, min_size=3, max_size=8)


@given(qcoeffs, qcoeffs)
def test_qexp_product_matches_convolution(a, b):
    x, y = QExp(a), QExp(b)
    p = x * y
    cap = min(len(a), len(b)) - 1
    for e in range(cap + 1):
        assert p[e] == sum(rat(a[i]) * rat(b[e - i]) for i in range(e + 1))


@given(qcoeffs, st.integers(min_value=-3, max_value=3))
def test_qexp_shift(a, k):
    x = QExp(a)
    assert x.shift(k).shift(-k) == x
    assert x.shift(k)[k] == rat(a[0])


def test_qexp_mixed_base():
    half = QExp([1, 0, 3], 0, 2)  # 1 + 3 q
    whole = QExp([1, 3])
    assert half == whole
    assert (half * QExp([0, 1], 0, 2))[Fraction(1, 2)] == 1


def test_qexp_equal_to_with_fractional_cap():
    a = QExp([1, 2, 3, 4])
    b = QExp([1, 2, 3, 5])
    assert a.equal_to(b, Fraction(5, 2))
    assert not a.equal_to(b, 3)


@given(qcoeffs)
def test_qexp_json_round_trip(a):
    x = QExp(a, -1)
    assert QExp.from_json(x.to_json()) == x
