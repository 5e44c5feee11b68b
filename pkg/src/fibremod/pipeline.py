"""End-to-end runs: periods, mirror map, couplings, Gromov-Witten tables, fits and checks."""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

from .certify import certify
from .coupling import (CouplingError, GWTable, IntersectionData, ThreePointSolution, YukawaSet, anomaly_decompose,
                       derive_yukawa_series, extract_gw, main_example_yukawa, permutation_symmetry_check,
                       poly_mul, poly_scale, proportionality, solve_three_point, to_tau, verify_pf_constraints)
from .mirror import MirrorMap, build_mirror, jacobian_route_check, x_checks
from .modular import FitError, FitResult, fit, verify_modrep
from .periods import (ModelParams, PeriodSet, cached_periods, field_slice_series_check, gauss_wronskian_check,
                      nonhom_slice_check, slice_constants, closed_form_slices)
from .presets import (ModelPreset, get_model, intersection_data, limit_checks, operator_systems,
                      three_point_seeds)
from .series import QExp, Series2, rat, rat_str
from .weyl import annihilates

YUKAWA_SOURCES = ("derived", "printed", "corrected")
# weights of the fitted q2-rows (before the eta prefactor)
C2222_WEIGHT = -2
POTENTIAL_WEIGHTS = {"gamma1": -2, "gamma2": [-2, 0]}


class PipelineError(RuntimeError):
    pass


@dataclass
class CouplingRun:
    preset: ModelPreset
    caps: tuple
    inter: IntersectionData
    yukawa_source: str
    ps: PeriodSet
    mm: MirrorMap
    w: dict
    C4: dict
    seeds: dict
    solution: ThreePointSolution
    tables: dict = field(default_factory=dict)


def yukawa_series(preset: ModelPreset, inter: IntersectionData, caps, source: str = "derived") -> dict:
    if source == "derived":
        return derive_yukawa_series(preset.params, inter, caps)
    if source in ("printed", "corrected"):
        if preset.name != "main4":
            raise PipelineError(f"the {source} rational couplings exist only for main4")
        return main_example_yukawa(source == "corrected").normalized_series(caps)
    raise PipelineError(f"unknown coupling source {source!r}; expected one of {YUKAWA_SOURCES}")


def run_couplings(preset: str | ModelPreset = "main4", caps=(12, 3), yukawa: str = "derived",
                  t_order: int | None = None) -> CouplingRun:
    """Couplings in flat coordinates and the three-point solution through ``q2^t_order``."""
    mp = get_model(preset) if isinstance(preset, str) else preset
    caps = (int(caps[0]), int(caps[1]))
    if min(caps) < 1:
        raise PipelineError(f"caps must be positive, got {caps}")
    inter = intersection_data(mp.name)
    ps = cached_periods(mp.params, caps)
    mm = build_mirror(ps)
    w = yukawa_series(mp, inter, caps, yukawa)
    C4 = to_tau(w, ps, mm)
    seeds = three_point_seeds(mp.name, caps[0])
    sol = solve_three_point(C4, inter, seeds, t_order)
    run = CouplingRun(mp, caps, inter, yukawa, ps, mm, w, C4, seeds, sol)
    for g in inter.gamma_names:
        run.tables[g] = extract_gw(sol, g, seeds)
    return run


def gw_table(preset: str = "main4", gamma: str = "gamma1", caps=(12, 3), yukawa: str = "derived") -> GWTable:
    run = run_couplings(preset, caps, yukawa)
    if gamma not in run.tables:
        raise PipelineError(f"unknown class {gamma!r}; available: {', '.join(run.tables)}")
    return run.tables[gamma]


# -- fits of q2-rows ------------------------------------------------------------------------------

def q2_row(s: Series2, k: int) -> QExp:
    return QExp(s.row(k), 0, 1)


def fit_q2_row(row: QExp, k: int, n: int, weight, max_E2_degree: int = 1, margin: int = 3) -> FitResult:
    """Fit the ``q2^k`` row as ``q1^(n k / 2) eta^(-12 n k) P`` with ``P`` quasi-modular."""
    shift = Fraction(n * k, 2)
    if shift.denominator != 1:
        raise FitError("odd n k: the q2-row has half-integral q1 prefactor; use the t-expansion")
    return fit(row, weight, "SL2Z", eta_power=12 * n * k, q_shift=int(shift),
               max_E2_degree=max_E2_degree, margin=margin)


@dataclass
class FitReport:
    coupling: dict  # k -> FitResult of C2222
    potentials: dict  # gamma -> {k: FitResult}
    anomaly: dict  # name -> proportionality constant (or None)
    unfitted: dict = field(default_factory=dict)  # (name, k) -> reason

    def to_json(self):
        return {"C2222": {str(k): f.to_json() for k, f in self.coupling.items()},
                "potentials": {g: {str(k): f.to_json() for k, f in rows.items()} for g, rows in self.potentials.items()},
                "anomaly": {k: (rat_str(v) if v is not None else None) for k, v in self.anomaly.items()},
                "unfitted": {f"{g}:q2^{k}": why for (g, k), why in sorted(self.unfitted.items())}}


def fit_report(run: CouplingRun, t_order: int = 2) -> FitReport:
    """Quasi-modular fits of ``C2222`` and ``F(gamma)`` rows for ``1 <= k <= t_order``.

    ``anomaly`` records ``c`` in ``E2-part(row 2) = c * (row 1)^2`` for ``C2222``
    and ``c`` in ``E2-part = c * (F(gamma1) row 1)^2`` for ``gamma1``.
    """
    n = run.preset.params.n
    top = min(t_order, run.caps[1])
    c = run.C4[(2, 2, 2, 2)]
    coupling, potentials, unfitted = {}, {}, {}
    for k in range(1, top + 1):
        try:
            coupling[k] = fit_q2_row(q2_row(c, k), k, n, C2222_WEIGHT)
        except FitError as exc:
            unfitted[("C2222", k)] = str(exc)
    for g, rows in run.solution.potential_rows.items():
        weight = POTENTIAL_WEIGHTS.get(g, C2222_WEIGHT)
        potentials[g] = {}
        for k in range(1, top + 1):
            if k not in rows:
                continue
            try:
                potentials[g][k] = fit_q2_row(q2_row(rows[k], 0), k, n, weight)
            except FitError as exc:
                unfitted[(g, k)] = str(exc)
    anomaly = {}
    if 1 in coupling and 2 in coupling:
        y1 = anomaly_decompose(coupling[1])[0]
        anomaly["C2222"] = proportionality(anomaly_decompose(coupling[2])[1], poly_mul(y1, y1))
        if {1, 2} <= set(potentials.get("gamma1", {})):
            f1 = anomaly_decompose(potentials["gamma1"][1])[0]
            anomaly["gamma1"] = proportionality(anomaly_decompose(potentials["gamma1"][2])[1], poly_mul(f1, f1))
    return FitReport(coupling, potentials, anomaly, unfitted)


def half_y1(fr: FitReport) -> dict:
    return poly_scale(anomaly_decompose(fr.coupling[1])[0], rat(1) / 2)


# -- verification suite ----------------------------------------------------------------------------

@dataclass
class Check:
    name: str
    ok: bool
    detail: str = ""

    def to_json(self):
        return {"name": self.name, "ok": self.ok, "detail": self.detail}


@dataclass
class VerifyReport:
    preset: str
    checks: list

    @property
    def ok(self) -> bool:
        return all(c.ok for c in self.checks)

    def failures(self) -> list:
        return [c for c in self.checks if not c.ok]

    def to_json(self):
        return {"preset": self.preset, "ok": self.ok, "checks": [c.to_json() for c in self.checks]}

    def to_text(self) -> str:
        lines = [f"{'PASS' if c.ok else 'FAIL'} {c.name}" + (f": {c.detail}" if c.detail else "") for c in self.checks]
        lines.append(f"{self.preset}: {'all checks passed' if self.ok else f'{len(self.failures())} failed'}")
        return "\n".join(lines) + "\n"


def _period_checks(params: ModelParams, caps) -> list:
    ps = cached_periods(params, caps)
    out = []
    for name, op in zip(("L1", "L2"), params.operators()):
        for a in range(3):
            rep = annihilates(op, ps.period(a))
            out.append(Check(f"{name} annihilates Pi{a}", rep.ok,
                             "" if rep.ok else f"first residual at {rep.first_residual}"))
    out.append(Check("Wronskian closed form at z2 = 0", gauss_wronskian_check(ps)))
    balanced = params.a1 + params.a2 == 1
    for i in range(min(3, caps[1]) + 1):
        try:
            data = slice_constants(params, i, ps, with_field=False)
            p0, p1 = closed_form_slices(params, i, data, caps[0])
            ok = p0 == ps.pi0.slice(i) and p1 == ps.s1.slice(i)
            out.append(Check(f"slice {i} closed form", ok, f"c0={rat_str(data.c0)}, c1~={rat_str(data.c1_tilde)}"))
        except Exception as exc:  # a failed fit is a failed check, not a crash
            out.append(Check(f"slice {i} closed form", False, str(exc)))
        if i:
            res = nonhom_slice_check(params, i, ps)
            out.append(Check(f"slice {i} equations", all(res.values()), ", ".join(k for k, v in res.items() if not v)))
    if balanced:
        upto = min(2, caps[1])
        fs = field_slice_series_check(params, ps, upto)
        out.append(Check(f"field slices match series (i <= {upto})", all(all(v.values()) for v in fs.values())))
        mm = build_mirror(ps)
        xc = x_checks(ps, mm, field_upto=min(2, caps[1]))
        out.append(Check("X recursion and direct construction", all(xc.values()),
                         ", ".join(k for k, v in xc.items() if not v)))
        out.append(Check("mirror map round trip", mm.round_trip_ok()))
        out.append(Check("Jacobian two-route agreement", jacobian_route_check(ps, mm)))
    return out


def verify_suite(preset: str = "main4", caps=(10, 2), modrep_order: int = 12, certify_order: int | None = None,
                 yukawa: YukawaSet | None = None) -> VerifyReport:
    """Invariant checks for one preset; couplings are checked where intersection data exist."""
    mp = get_model(preset)
    caps = (int(caps[0]), int(caps[1]))
    if min(caps) < 1:
        raise PipelineError(f"caps must be positive, got {caps}")
    checks = _period_checks(mp.params, caps)
    mod = verify_modrep(modrep_order)
    checks.append(Check(f"F(z(q))^4 = E4 to q^{modrep_order}", bool(mod["F^4=E4"])))
    checks.append(Check("theta F identity (cleared)", bool(mod["thetaF"])))
    for system in operator_systems():
        for lc in limit_checks(system):
            detail = "printed" if lc.printed_matches else ("corrected" if lc.corrected_matches else lc.restricted.to_text())
            checks.append(Check(f"{system.name} limit of generator {lc.generator} (axis {lc.keep})", lc.ok, detail))
    if mp.name == "main4":
        ycaps = (min(caps[0], 10), max(caps[1], 3))
        rep = verify_pf_constraints(yukawa or main_example_yukawa(corrected=True), mp.params, ycaps)
        checks.append(Check("Yukawa Picard-Fuchs constraints", rep.ok,
                            "" if rep.ok else f"first failure {rep.first_failure[0]} at z^{rep.first_failure[1]}"))
        derived = derive_yukawa_series(mp.params, intersection_data("main4"), ycaps)
        ref = main_example_yukawa(corrected=True).normalized_series(ycaps)
        checks.append(Check("derived couplings equal rational couplings", all(derived[m] == ref[m] for m in ref)))
        ps = cached_periods(mp.params, ycaps)
        checks.append(Check("permutation symmetry of tau couplings", permutation_symmetry_check(derived, ps)))
        try:
            run = run_couplings(mp, ycaps)
            consts = [run.C4[w].row(0)[0] for w in sorted(run.C4)]
            checks.append(Check("classical limits (64, 16, 4, 1, 0)", consts == [64, 16, 4, 1, 0]))
            for g, t in run.tables.items():
                checks.append(Check(f"multicover round trip {g}", t.multicover_ok()))
        except CouplingError as exc:
            checks.append(Check("three-point solve", False, str(exc)))
    if certify_order:
        cert = certify(mp.params, mp.level, certify_order)
        for e in cert.entries:
            checks.append(Check(f"t^{e.i} coefficient is quasi-modular ({mp.level}, weight {e.weight})", e.ok,
                                e.error or ""))
    return VerifyReport(mp.name, checks)
