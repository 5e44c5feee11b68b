from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from fibremod.modular import (FitError, LEVELS, UnderdeterminedFit, eisenstein, eta_pow, fit, level_generators,
                              reconstruct, theta_constants, verify_modrep, z_of_q)
from fibremod.series import QExp
from oracles import eisenstein as eisenstein_oracle, eta_power as eta_oracle, j_route_mirror, series_mul

ORDER = 14


def _q(coeffs, min_exp=0):
    return QExp(coeffs, min_exp)


def _r4(n):
    return 8 * sum(d for d in range(1, n + 1) if n % d == 0 and d % 4) if n else 1


@pytest.mark.parametrize("k", [2, 4, 6])
def test_eisenstein_matches_divisor_sums(k):
    assert [eisenstein(k, ORDER)[e] for e in range(ORDER + 1)] == eisenstein_oracle(k, ORDER)


def test_eisenstein_leading_terms():
    assert [eisenstein(4, 2)[e] for e in range(3)] == [1, 240, 2160]
    assert [eisenstein(2, 2)[e] for e in range(3)] == [1, -24, -72]
    assert [eisenstein(6, 2)[e] for e in range(3)] == [1, -504, -16632]


@pytest.mark.parametrize("m", [1, 8, 24, 48, -24, -48])
def test_eta_power_matches_product(m):
    e = eta_pow(m, ORDER)
    body = eta_oracle(m, ORDER)
    lead = Fraction(m, 24)
    for k in range(ORDER + 1):
        assert e[lead + k] == body[k]


def test_eta_examples():
    d = eta_pow(24, 3)
    assert [d[e] for e in range(1, 4)] == [1, -24, 252]
    assert eta_pow(0, 5) == QExp.constant(1, 5)
    assert eta_pow(48, 8).equal_to(eta_pow(24, 9) * eta_pow(24, 9), 9)


def test_discriminant_identity():
    E4, E6 = eisenstein(4, 12), eisenstein(6, 12)
    delta = eta_pow(24, 12)
    assert ((E4 ** 3 - E6 ** 2).scale(Fraction(1, 1728))).equal_to(delta, 12)
    inv = eta_pow(-24, 13)
    assert ((E4 ** 3) * inv - (E6 ** 2) * inv).equal_to(QExp.constant(1728, 11), 11)


def test_theta_constants():
    th = theta_constants(ORDER)
    assert [th["theta3^4"][n] for n in range(ORDER + 1)] == [_r4(n) for n in range(ORDER + 1)]
    assert [th["theta3^4"][n] for n in range(4)] == [1, 8, 24, 32]
    assert th["theta4^4"].equal_to(th["theta3^4"] - th["theta2^4"], ORDER - 1)


def test_level_generator_constants():
    assert level_generators("Gamma0(2)", 6).get("A2")[0] == -1
    assert level_generators("Gamma0(3)", 6).get("B3")[0] == -2
    for level in LEVELS:
        gens = level_generators(level, 6)
        assert all(w % 2 == 0 and q.cap >= 6 for _, w, q in gens.generators)
    with pytest.raises(FitError):
        level_generators("Gamma1(5)", 6)


def test_mirror_coordinate_from_j():
    z = z_of_q(10)
    assert [z[e] for e in range(11)] == j_route_mirror(10)
    assert [z[e] for e in range(4)] == [0, 1, -312, 87084]


def test_inverse_j_expansion():
    inv_j = eta_pow(24, 6) * (eisenstein(4, 6) ** 3).inverse()
    assert [inv_j[e] for e in range(1, 4)] == [1, -744, 356652]


def test_modular_representation():
    res = verify_modrep(12)
    assert all(res.values())


def test_fit_trivial():
    fr = fit(eisenstein(4, 10), 4)
    assert fr.terms() == {(0, 1, 0): 1}


def test_fit_discriminant_both_ways():
    E4, E6 = eisenstein(4, 12), eisenstein(6, 12)
    f = E4 ** 3 - E6 ** 2
    poly = fit(f, 12)
    assert poly.terms() == {(0, 3, 0): 1, (0, 0, 2): -1}
    eta = fit(f, 12, eta_power=-24, q_shift=0)
    assert eta.terms() == {(0, 0, 0): 1728}


def test_fit_four_point_shape():
    order = 16
    E4 = eisenstein_oracle(4, order)
    E6 = eisenstein_oracle(6, order)
    E4_3 = series_mul(series_mul(E4, E4, order), E4, order)
    E6_2 = series_mul(E6, E6, order)
    inner = [35 * a + 37 * b for a, b in zip(E4_3, E6_2)]
    poly = [Fraction(-5, 9) * c for c in series_mul(series_mul(E4, E6, order), inner, order)]
    body = series_mul(poly, eta_oracle(-48, order), order)
    f = QExp(body, 0)  # q^2 eta^-48 = q^0 * prod^-48
    fr = fit(f, -2, eta_power=48, q_shift=2)
    assert fr.terms() == {(0, 4, 1): Fraction(-175, 9), (0, 1, 3): Fraction(-185, 9)}
    assert reconstruct(fr, 10).equal_to(f, 8)


def test_fit_refuses_underdetermined():
    with pytest.raises(UnderdeterminedFit):
        fit(eisenstein(4, 4).truncate(3), 24)


def test_fit_reports_inconsistency():
    bad = eisenstein(4, 10) + QExp([0, 0, 0, 0, 0, 1])
    with pytest.raises(FitError) as info:
        fit(bad, 4)
    assert not isinstance(info.value, UnderdeterminedFit)


def test_gamma03_relation():
    E4 = eisenstein(4, 20)
    fr = fit(E4 * E4, 8, level="Gamma0(3)")
    assert all(b[2] <= 1 for b in fr.terms())
    assert reconstruct(fr, 20).equal_to(E4 * E4, 20)


def test_power_names_are_parenthesized():
    th = theta_constants(20)["theta2^4"]
    fr = fit(th ** 3, 6, level="Gamma(2)")
    assert "(theta2^4)^3" in fr.polynomial_text()


coef = st.integers(min_value=-30, max_value=30)


@settings(max_examples=20)
@given(coef, coef, coef, coef)
def test_e2_split_is_unique(a, b, c, d):
    order = 12
    E2, E4, E6 = (eisenstein(k, order) for k in (2, 4, 6))
    free = (E4 * E6).scale(a) + (E4 ** 2 * E2).scale(b) + (E6 * E2 * E2).scale(c)
    f = free + (E4 * E6).scale(d)
    fr = fit(f, 10, max_E2_degree=2)
    clean, anomaly = fr.e2_split()
    assert clean == ({(0, 1, 1): a + d} if a + d else {})
    assert anomaly == {k: v for k, v in {(1, 2, 0): b, (2, 0, 1): c}.items() if v}
    rest = f - (E4 ** 2 * E2).scale(b) - (E6 * E2 * E2).scale(c)
    if a + d:
        assert fit(rest, 10).terms() == clean
