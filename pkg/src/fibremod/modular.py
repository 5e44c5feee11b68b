"""q-expansions of quasi-modular generators and an exact linear recognizer.

All series use the same nome as the mirror map.  Theta constants are written
in the Jacobi nome, so ``theta3^4 = sum r4(n) q^n``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from itertools import product
from math import isqrt

from .series import ONE, ZERO, QExp, Series2, SeriesError, rat, rat_str, substitute


class FitError(ValueError):
    pass


class UnderdeterminedFit(FitError):
    """Too few known coefficients for the requested basis."""


def _sigma(k: int, n: int) -> int:
    s = 0
    for d in range(1, isqrt(n) + 1):
        if n % d == 0:
            s += d ** k
            e = n // d
            if e != d:
                s += e ** k
    return s


_EIS_FACTOR = {2: -24, 4: 240, 6: -504}


def eisenstein(k: int, order: int) -> QExp:
    """Normalized ``E_k`` for ``k in {2, 4, 6}`` through ``q^order``."""
    if k not in _EIS_FACTOR:
        raise FitError(f"unsupported Eisenstein weight {k}")
    c = _EIS_FACTOR[k]
    return QExp([1] + [c * _sigma(k - 1, m) for m in range(1, order + 1)], 0, 1, k)


def euler_product(order: int) -> Series2:
    """``prod_{k>=1} (1 - q^k)`` via the pentagonal number theorem."""
    coeffs = [0] * (order + 1)
    k = 0
    while True:
        done = True
        for kk in ((k, -k) if k else (0,)):
            e = kk * (3 * kk - 1) // 2
            if e <= order:
                coeffs[e] += -1 if kk % 2 else 1
                done = False
        if done and k > 0:
            break
        k += 1
    return Series2.univariate(coeffs)


def eta_pow(m: int, order: int) -> QExp:
    """``q^(m/24) prod (1 - q^k)^m``; known through ``q^(order + m/24)``."""
    body = euler_product(order).pow_rational(m) if m else Series2.one((order, 0))
    frac = Fraction(m, 24)
    base = frac.denominator
    if base == 1:
        return QExp(body.row(0), frac.numerator, 1, m // 2 if m % 2 == 0 else None)
    spread = [ZERO] * (base * order + 1)
    spread[::base] = body.row(0)
    return QExp(spread, frac.numerator, base, None)


def theta_constants(order: int) -> dict:
    """``theta2^4``, ``theta3^4``, ``theta4^4`` in the Jacobi nome."""
    t3 = [0] * (order + 1)
    n = 0
    while n * n <= order:
        t3[n * n] += 1 if n == 0 else 2
        n += 1
    t4 = [c * (-1) ** e for e, c in enumerate(t3)]
    # theta2 = 2 q^(1/4) sum_{n>=0} q^(n(n+1)), so theta2^4 = 16 q (sum)^4
    s = [0] * (order + 1)
    n = 0
    while n * (n + 1) <= order:
        s[n * (n + 1)] += 1
        n += 1
    S = Series2.univariate(s)
    t2_4 = (S ** 4).scale(16).row(0)
    T3, T4 = Series2.univariate(t3) ** 4, Series2.univariate(t4) ** 4
    return {
        "theta2^4": QExp(t2_4[:order], 1, 1, 2),
        "theta3^4": QExp(T3.row(0), 0, 1, 2),
        "theta4^4": QExp(T4.row(0), 0, 1, 2),
    }


@dataclass
class GeneratorSet:
    level: str
    generators: list  # (name, weight, QExp)
    quasi: tuple = ("E2", 2)
    max_exponents: dict = field(default_factory=dict)  # drops monomials spanned by the rest

    def names(self):
        return [g[0] for g in self.generators]

    def get(self, name: str) -> QExp:
        if name == self.quasi[0]:
            return eisenstein(2, self.order)
        for n, _, q in self.generators:
            if n == name:
                return q
        raise KeyError(name)

    @property
    def order(self) -> int:
        return min(q.cap for _, _, q in self.generators)


LEVELS = ("SL2Z", "Gamma0(2)", "Gamma0(3)", "Gamma(2)")


def level_generators(level: str, order: int) -> GeneratorSet:
    """Modular generators of one Table-1 row (``E2`` is added separately as the quasi generator)."""
    E2 = eisenstein(2, order)
    if level == "SL2Z":
        gens = [("E4", 4, eisenstein(4, order)), ("E6", 6, eisenstein(6, order))]
    elif level == "Gamma0(2)":
        a = E2 - E2.subs_power(2).scale(2)
        a.weight = 2
        gens = [("A2", 2, a.truncate(order)), ("E4", 4, eisenstein(4, order))]
    elif level == "Gamma0(3)":
        b = E2 - E2.subs_power(3).scale(3)
        b.weight = 2
        gens = [("B3", 2, b.truncate(order)), ("E4", 4, eisenstein(4, order)), ("E6", 6, eisenstein(6, order))]
        # E4^2 is a combination of B3^4, B3^2 E4 and B3 E6
        return GeneratorSet(level, gens, max_exponents={"E4": 1})
    elif level == "Gamma(2)":
        th = theta_constants(order)
        gens = [("theta2^4", 2, th["theta2^4"]), ("theta3^4", 2, th["theta3^4"])]
    else:
        raise FitError(f"unknown level {level!r}; expected one of {LEVELS}")
    return GeneratorSet(level, gens)


LEVEL_OF_A0 = {432: "SL2Z", 64: "Gamma0(2)", 27: "Gamma0(3)", 16: "Gamma(2)"}


# -- the j-function route for the 432 family --------------------------------------------

def z_of_q(order: int) -> QExp:
    """``(1 - sqrt(1 - 1728/J)) / 864`` with ``1/J = eta^24 / E4^3``."""
    E4 = eisenstein(4, order)
    inv_j = eta_pow(24, order) * (E4 ** 3).inverse()
    inner = (QExp.constant(1, order) - inv_j.scale(1728)).truncate(order)
    root = inner.pow_rational(Fraction(1, 2))
    z = (QExp.constant(1, order) - root).scale(Fraction(1, 864))
    return z.truncate(order)


def _compose_with(f: Series2, z: QExp, order: int) -> QExp:
    zs = z.to_series().truncate((order, 0)) if z.cap >= order else None
    if zs is None:
        raise SeriesError("z(q) not known to the requested order")
    return QExp(substitute(f.truncate((order, 0)), zs).row(0), 0, 1)


def verify_modrep(order: int) -> dict:
    """Identities linking ``F(5/6, 1/6; 1 | 432 z)`` and ``E2, E4, E6`` under ``z = z(q)``."""
    from .hypergeo import HGParams, pfq
    F = pfq(HGParams((Fraction(5, 6), Fraction(1, 6)), (1,)), order, 432)
    z = z_of_q(order)
    Fq = _compose_with(F, z, order)
    tFq = _compose_with(F.theta(1), z, order)
    E2, E4, E6 = (eisenstein(k, order) for k in (2, 4, 6))
    f4 = Fq ** 4
    one_minus = QExp.constant(1, order) - z.scale(432)
    lhs = (tFq * (Fq ** 5) * one_minus).scale(12)
    rhs = E2 * E4 - E6
    return {
        "z_series": z.coeffs[:4],
        "F^4=E4": f4.equal_to(E4, order),
        "theta(F^4)": f4.theta().scale(4).equal_to(E4.theta().scale(4), order),
        "thetaF": lhs.equal_to(rhs, order),
    }


# -- linear algebra -------------------------------------------------------------------------

def solve_exact(rows: list, rhs: list):
    """Exact solution of an overdetermined system; returns ``(solution, rank, consistent)``.

    Free variables (dependent columns) are set to zero.
    """
    m = len(rows)
    ncols = len(rows[0]) if rows else 0
    A = [[rat(x) for x in r] + [rat(b)] for r, b in zip(rows, rhs)]
    pivots = []
    r = 0
    for c in range(ncols):
        piv = next((i for i in range(r, m) if A[i][c] != 0), None)
        if piv is None:
            continue
        A[r], A[piv] = A[piv], A[r]
        inv = ONE / A[r][c]
        A[r] = [x * inv for x in A[r]]
        for i in range(m):
            if i != r and A[i][c] != 0:
                f = A[i][c]
                A[i] = [x - f * y for x, y in zip(A[i], A[r])]
        pivots.append(c)
        r += 1
        if r == m:
            break
    consistent = all(A[i][ncols] == 0 for i in range(r, m))
    sol = [ZERO] * ncols
    for i, c in enumerate(pivots):
        sol[c] = A[i][ncols]
    return sol, len(pivots), consistent


def monomials(gens: GeneratorSet, weight: int, max_e2: int) -> list:
    """Exponent tuples ``(e2, e_g1, e_g2, ...)`` of total weight ``weight``."""
    ws = [2] + [g[1] for g in gens.generators]
    out = []
    bounds = [min(max_e2, weight // 2)] + [min(weight // g[1], gens.max_exponents.get(g[0], weight))
                                             for g in gens.generators]
    for exps in product(*(range(b + 1) for b in bounds)):
        if sum(e * w for e, w in zip(exps, ws)) == weight:
            out.append(exps)
    out.sort(key=lambda e: (e[0], tuple(-x for x in e[1:])))
    return out


def _monomial_series(gens: GeneratorSet, exps, order: int, cache: dict) -> QExp:
    if exps in cache:
        return cache[exps]
    series = [eisenstein(2, order)] + [g[2] for g in gens.generators]
    result = QExp.constant(1, order)
    for s, e in zip(series, exps):
        for _ in range(e):
            result = (result * s).truncate(order)
    cache[exps] = result
    return result


def _power_text(name: str, e: int) -> str:
    if e == 1:
        return name
    return f"({name})^{e}" if "^" in name else f"{name}^{e}"


@dataclass
class FitResult:
    level: str
    eta_power: int
    q_shift: int
    weights: tuple
    basis: list  # exponent tuples (e2, g1, g2, ...)
    coefficients: list
    generator_names: list
    checked_to: Fraction
    rank: int
    dropped: list = field(default_factory=list)

    def terms(self) -> dict:
        return {b: c for b, c in zip(self.basis, self.coefficients) if c}

    def polynomial_text(self) -> str:
        names = ["E2"] + self.generator_names
        parts = []
        for b, c in self.terms().items():
            mono = "*".join(_power_text(n, e) for n, e in zip(names, b) if e)
            parts.append(f"{rat_str(c)}" + (f"*{mono}" if mono else ""))
        return " + ".join(parts) if parts else "0"

    def __str__(self):
        pref = ""
        if self.q_shift or self.eta_power:
            pref = f"q^{self.q_shift}/eta^{self.eta_power} * " if self.eta_power else f"q^{self.q_shift} * "
        return pref + "(" + self.polynomial_text() + ")"

    def e2_split(self) -> tuple[dict, dict]:
        free = {b: c for b, c in self.terms().items() if b[0] == 0}
        anom = {b: c for b, c in self.terms().items() if b[0] > 0}
        return free, anom

    def coefficient(self, exps) -> object:
        return self.terms().get(tuple(exps), ZERO)

    def to_json(self):
        return {"level": self.level, "eta_power": self.eta_power, "q_shift": self.q_shift,
                "weights": list(self.weights), "generators": ["E2"] + self.generator_names,
                "terms": [[list(b), rat_str(c)] for b, c in self.terms().items()],
                "checked_to": str(self.checked_to), "rank": self.rank,
                "dropped": [list(d) for d in self.dropped]}


def fit(f: QExp, weight, level: str = "SL2Z", eta_power: int = 0, q_shift=0, max_E2_degree: int = 0,
        margin: int = 3) -> FitResult:
    """Write ``f = q^s eta^(-p) P`` with ``P`` quasi-modular of weight ``weight + p/2``.

    ``weight`` may be an int or a list of ints (mixed weights).  The system is
    solved exactly and checked on every known coefficient; at least ``margin``
    equations beyond the basis size are required.
    """
    weights = tuple(weight) if isinstance(weight, (list, tuple)) else (weight,)
    target = f.normalized()
    if eta_power:
        val = target.valuation()
        span = int(target.cap_value - (Fraction(val, target.base_den) if val is not None else 0)) + 1
        target = target * eta_pow(eta_power, max(span, 1))
    if q_shift:
        target = target.shift(-Fraction(q_shift))
    target = target.normalized()
    if target.base_den != 1 and any(target.terms()):
        target = _to_integral(target)
    if target.min_exp < 0:
        raise FitError("after removing the prefactor the series still has negative powers of q")
    order = target.cap
    gens = level_generators(level, max(order, 1))
    basis = []
    for w in weights:
        total = w + Fraction(eta_power, 2)
        if total.denominator != 1 or total < 0:
            raise FitError(f"weight {w} with eta power {eta_power} gives non-integral weight {total}")
        basis += [(int(total), e) for e in monomials(gens, int(total), max_E2_degree)]
    if not basis:
        raise FitError("empty monomial basis")
    n_eq = order + 1
    if n_eq < len(basis) + margin:
        raise UnderdeterminedFit(f"underdetermined: {n_eq} known coefficients for {len(basis)} unknowns (+{margin} margin)")
    cache: dict = {}
    cols = [_monomial_series(gens, e, order, cache) for _, e in basis]
    rows = [[c._at(k) for c in cols] for k in range(n_eq)]
    rhs = [target._at(k) for k in range(n_eq)]
    sol, rank, ok = solve_exact(rows, rhs)
    if not ok:
        raise FitError("inconsistent: no quasi-modular combination reproduces the series")
    dropped = []
    if rank < len(basis):
        kept = []
        for idx in range(len(basis)):
            trial = kept + [idx]
            _, r, _ = solve_exact([[row[i] for i in trial] for row in rows], [ZERO] * n_eq)
            if r == len(trial):
                kept.append(idx)
            else:
                dropped.append(basis[idx][1])
    return FitResult(level, eta_power, int(q_shift), weights, [e for _, e in basis], sol, gens.names(),
                     Fraction(order) + Fraction(q_shift), rank, dropped)


def _to_integral(q: QExp) -> QExp:
    """Drop a fractional base when every non-zero exponent is integral."""
    b = q.base_den
    if any(e.denominator != 1 for e in q.terms()):
        raise FitError("series has fractional q-exponents after removing the prefactor")
    lo = -((-q.min_exp) // b)
    hi = q.cap // b
    return QExp([q[Fraction(e)] for e in range(lo, hi + 1)], lo, 1, q.weight)


def reconstruct(fr: FitResult, order: int) -> QExp:
    """``q^s eta^(-p) P`` from a fit, through ``q^order`` of ``P``."""
    gens = level_generators(fr.level, order)
    cache: dict = {}
    total = QExp.constant(0, order)
    for b, c in fr.terms().items():
        total = total + _monomial_series(gens, b, order, cache).scale(c)
    if fr.eta_power:
        total = total * eta_pow(-fr.eta_power, order + fr.eta_power // 24 + 2)
    return total.shift(fr.q_shift)


def fit_search(f: QExp, weight, level="SL2Z", etas=range(0, 97, 24), max_E2_degree: int = 0):
    """Try ``(p, s)`` with ``s = p / 24`` over small eta powers; return the first consistent fit."""
    for p in etas:
        try:
            return fit(f, weight, level, p, p // 24, max_E2_degree)
        except FitError:
            continue
    raise FitError("no consistent fit on the searched grid")


# -- diagnostics for the four Table-1 rows ----------------------------------------------------

def mirror_denominator_report(a0, a1, a2, order: int) -> dict:
    """Denominators of ``q(z)`` and ``z(q)`` for ``F(a1, a2; 1 | a0 z)`` (no integrality claim)."""
    from .hypergeo import HGParams, log_companion, pfq
    F = pfq(HGParams((a1, a2), (1,)), order, a0)
    G = log_companion((a1, a2), order, a0)
    u = (G * F.inverse()).exp()
    from .series import invert_map
    v1, _ = invert_map(u.pad((order, 1)), Series2.one((order, 1)))
    return {"q_of_z": [int(c.denominator) for c in u.row(0)],
            "z_of_q": [int(c.denominator) for c in v1.row(0)]}
