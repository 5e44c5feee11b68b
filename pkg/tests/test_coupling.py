from fractions import Fraction

import pytest
import sympy
from hypothesis import given, settings, strategies as st

from fibremod.coupling import (CouplingError, RationalFn2, YUK_INDICES, anomaly_decompose, bps_from_gw,
                               derive_yukawa_series, griffiths_relations, main_example_deltas,
                               main_example_intersections,
                               main_example_yukawa, multicover,
                               permutation_symmetry_check, reconstruct_rational, verify_pf_constraints)
from fibremod.periods import cached_periods
from fibremod.pipeline import fit_q2_row, q2_row
from fibremod.presets import get_model, intersection_data
from fibremod.series import Series2
from oracles import OrbitModel, multicover_direct

CAPS = (10, 3)

GAMMA1 = [
    [0, -20, -820, -68060, -7486440],
    [0, 7680, 491520, 56256000, 7943424000],
    [0, -1800000, -159801600, -24602371200, -4394584496640],
    [0, 278394880, 35703398400, 7380433205760, 1662353371955200],
    [0, 623056099920, -6039828417600, -1683081588149760, -478655396625235200],
    [0, 97531011394560, 2356890607411200, 388243145737128960, 119544387620870983680],
]
GAMMA2 = [
    [0, 0, 0, 0, 0],
    [960, 5760, 181440, 13791360, 1458000000],
    [1920, -1817280, -98640000, -10715760000, -1476352644480],
    [2880, 421685760, 29972448000, 4447212981120, 783432258136320],
    [3840, 2555202430080, -6353500619520, -1273702762398720, -285239128072550400],
    [4800, 506461104057600, 4042353816604800, 373520266906348800, 86478430090747622400],
]


@pytest.fixture(scope="module")
def main_params(main4):
    return main4.params


@pytest.fixture(scope="module")
def derived(main_params):
    return derive_yukawa_series(main_params, intersection_data("main4"), CAPS)


# -- the rational couplings -------------------------------------------------------------------

def test_printed_forms():
    Y = main_example_yukawa()
    z1, z2 = RationalFn2.z(1), RationalFn2.z(2)
    d1, d2 = main_example_deltas()
    assert Y[4, 0] == RationalFn2(-64) / (z1 ** 4 * d1)
    assert d2 == -1 + 256 * z2
    w40 = Y.normalized_series((4, 1))
    assert w40[(4, 0)][0, 0] == 64


def test_printed_set_fails_and_corrected_passes(main_params):
    printed = verify_pf_constraints(main_example_yukawa(), main_params, CAPS)
    assert not printed.ok
    assert verify_pf_constraints(main_example_yukawa(corrected=True), main_params, CAPS).ok


def test_derivation_reproduces_corrected_couplings(derived):
    ref = main_example_yukawa(corrected=True).normalized_series(CAPS)
    assert all(derived[m] == ref[m] for m in YUK_INDICES)


def test_derived_constants_are_classical(derived):
    assert [derived[m][0, 0] for m in YUK_INDICES] == [64, 16, 4, 1, 0]


def test_derived_series_head(derived):
    w40 = derived[(4, 0)]
    assert w40[0, 0] == 64 and w40[1, 0] == 64 * 1728


def test_discriminant_from_series(derived):
    d1, _ = main_example_deltas()
    rebuilt = reconstruct_rational(derived[(4, 0)], (0, 0), (4, 1))
    assert rebuilt == RationalFn2(-64) / d1


def test_scaling_preserves_constraints(main_params):
    w = main_example_yukawa(corrected=True).normalized_series(CAPS)
    assert verify_pf_constraints({m: s.scale(3) for m, s in w.items()}, main_params, CAPS).ok


def test_low_order_perturbation_fails(main_params):
    Y = main_example_yukawa(corrected=True).perturb((4, 0), (1, 0), 1)
    rep = verify_pf_constraints(Y, main_params, CAPS)
    assert not rep.ok and sum(rep.first_failure[1]) <= 6


def _first_change(a: Series2, b: Series2):
    diff = (a - b).terms()
    return min(diff, key=lambda e: (e[0] + e[1], e[0])) if diff else None


@settings(max_examples=12)
@given(st.sampled_from(YUK_INDICES), st.integers(0, 3), st.integers(0, 1),
       st.fractions(min_value=-5, max_value=5, max_denominator=3).filter(bool))
def test_perturbations_are_located(m, i, j, delta):
    params = get_model("main4").params
    good = main_example_yukawa(corrected=True)
    bad = good.perturb(m, (i, j), delta)
    changed = _first_change(bad.normalized_series(CAPS)[m], good.normalized_series(CAPS)[m])
    rep = verify_pf_constraints(bad, params, CAPS)
    if changed is None:
        assert rep.ok
    else:
        assert not rep.ok and rep.first_failure[1] == changed


# -- Griffiths relations --------------------------------------------------------------------

def test_relation_coefficients():
    rels = {r.target: r.terms for r in griffiths_relations(2)}
    assert rels[(5, 0)] == ((Fraction(5, 2), 1, (4, 0)),)
    assert rels[(4, 1)] == ((2, 1, (3, 1)), (Fraction(1, 2), 2, (4, 0)))
    assert rels[(3, 2)] == ((Fraction(3, 2), 1, (2, 2)), (1, 2, (3, 1)))
    assert rels[(1, 4)] == ((Fraction(1, 2), 1, (0, 4)), (2, 2, (1, 3)))
    assert len(griffiths_relations(3)) == 21
    with pytest.raises(CouplingError):
        griffiths_relations(4)


def test_relations_hold_in_orbit_model():
    z1, z2 = sympy.symbols("z1 z2")
    kappa = {(4, 0): 64, (3, 1): 16, (2, 2): 4, (1, 3): 1, (0, 4): 0}
    model = OrbitModel(z1 + z1 * z2, z2 + 2 * z1 ** 2, 1 + z1 * z2, kappa)
    for total in range(4):
        for a in range(total + 1):
            assert model.W((a, total - a)) == 0
    for rel in griffiths_relations(2):
        rhs = sum(sympy.Rational(int(c.numerator), int(c.denominator)) *
                  sympy.diff(model.W(src), z1 if axis == 1 else z2) for c, axis, src in rel.terms)
        assert sympy.expand(model.W(rel.target) - rhs) == 0


# -- flat coordinates ---------------------------------------------------------------------

def test_permutation_symmetry(derived, main_params):
    ps = cached_periods(main_params, CAPS)
    assert permutation_symmetry_check(derived, ps)


def test_flat_couplings_start_classical(main_run):
    words = sorted(main_run.C4)
    assert [main_run.C4[w][0, 0] for w in words] == [64, 16, 4, 1, 0]


def test_intersection_data():
    inter = intersection_data("main4")
    assert inter.check()
    assert inter == main_example_intersections()
    assert inter.pairing_inverse == ((-4, 1), (1, 0))


# -- three-point functions and invariants -------------------------------------------------

def test_three_point_seeds(main_run):
    s = main_run.seeds
    assert s["gamma1"][(2, 2)].row(0)[0] == 0 and s["gamma2"][(2, 2)].row(0)[0] == 1


def test_gw_tables_match_appendix(main_run):
    for name, table in (("gamma1", GAMMA1), ("gamma2", GAMMA2)):
        gw = main_run.tables[name]
        for d1 in range(6):
            for d2 in range(4):
                if (d1, d2) != (0, 0):
                    assert gw.n[(d1, d2)] == table[d1][d2], (name, d1, d2)


@pytest.mark.slow
def test_gw_fourth_column():
    from fibremod.pipeline import run_couplings
    run = run_couplings("main4", (8, 4))
    for name, table in (("gamma1", GAMMA1), ("gamma2", GAMMA2)):
        assert [run.tables[name].n[(d1, 4)] for d1 in range(6)] == [row[4] for row in table]


def test_multicover_values(main_run):
    gw = main_run.tables["gamma1"]
    assert gw.N[(0, 1)] == -20 and gw.N[(0, 2)] == -825
    assert gw.multicover_ok()
    assert gw.source[(3, 0)] == "seed" and gw.source[(3, 1)] == "solved"


def test_second_derivative_of_potential(main_run):
    sol = main_run.solution
    f1 = sol.potential_rows["gamma1"][1]
    assert sol.c3_rows[1][((2, 2), "gamma1")] == f1
    assert sol.c3_rows[2][((2, 2), "gamma1")] == sol.potential_rows["gamma1"][2].scale(4)


def test_pairing_reproduces_couplings(main_run):
    sol, C4 = main_run.solution, main_run.C4
    caps = (12, 3)
    c = {g: sol.c3((2, 2), g, caps) for g in ("gamma1", "gamma2")}
    rebuilt = c["gamma1"] * c["gamma1"] * -4 + c["gamma1"] * c["gamma2"] * 2
    assert rebuilt == C4[(2, 2, 2, 2)]


bps = st.dictionaries(st.tuples(st.integers(0, 6), st.integers(0, 6)).filter(lambda k: k != (0, 0)),
                      st.integers(-10 ** 6, 10 ** 6), min_size=1, max_size=12)


@given(bps)
def test_multicover_round_trip(n):
    keys = {(a, b) for a in range(7) for b in range(7) if (a, b) != (0, 0)}
    full = {k: n.get(k, 0) for k in keys}
    N = multicover(full)
    assert N == {k: v for k, v in multicover_direct(full).items()}
    assert bps_from_gw(N) == full


# -- fits of the flat couplings ---------------------------------------------------------------

def test_first_row_fit(main_fits):
    assert main_fits.coupling[1].terms() == {(0, 4, 1): Fraction(-175, 9), (0, 1, 3): Fraction(-185, 9)}
    assert main_fits.potentials["gamma1"][1].terms() == {(0, 4, 1): Fraction(-175, 18),
                                                         (0, 1, 3): Fraction(-185, 18)}


def test_second_row_fit(main_fits):
    free, anomaly = anomaly_decompose(main_fits.coupling[2])
    scale = Fraction(-5, 124416)
    assert free == {(0, 10, 1): scale * 12377569, (0, 7, 3): scale * 85433141,
                    (0, 4, 5): scale * 86392307, (0, 1, 7): scale * 11544823}
    assert anomaly == {(0, 8, 2): scale * 1960000, (0, 5, 4): scale * 4144000, (0, 2, 6): scale * 2190400}
    assert main_fits.anomaly["C2222"] == Fraction(-5, 24)


def test_potential_anomaly(main_fits):
    assert main_fits.anomaly["gamma1"] == Fraction(-1, 12)
    free, _ = anomaly_decompose(main_fits.potentials["gamma1"][2])
    scale = Fraction(-5, 2985984)
    assert free == {(0, 10, 1): scale * 29908007, (0, 7, 3): scale * 207234483,
                    (0, 4, 5): scale * 208392741, (0, 1, 7): scale * 27245569}


def test_gamma2_mixed_weight(main_fits):
    s = Fraction(5, 10368)
    assert main_fits.potentials["gamma2"][1].terms() == {
        (0, 6, 0): s * 10321, (0, 3, 2): s * 59182, (0, 0, 4): s * 9985,
        (1, 4, 1): s * 1680, (0, 4, 1): s * 1680 * -24, (1, 1, 3): s * 1776, (0, 1, 3): s * 1776 * -24}
    assert ("gamma2", 2) in main_fits.unfitted


def test_first_row_needs_no_quasi_generator(main_run, main_fits):
    row = q2_row(main_run.C4[(2, 2, 2, 2)], 1)
    fr = fit_q2_row(row, 1, 4, -2, max_E2_degree=0)
    assert fr.terms() == main_fits.coupling[1].terms()
