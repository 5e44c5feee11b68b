"""Frobenius periods of the two-parameter system and their z2-slices.

The system is generated by

    L1 = theta1^2 - n theta1 theta2 - a0 z1 (theta1 + a1)(theta1 + a2)
    L2 = theta2^n - (-1)^n z2 prod_{k<n} (n theta2 - theta1 + k)

and has the solutions ``Pi0`` (holomorphic) and ``Pi0 log z_a + S_a``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from math import comb, factorial

from .hypergeo import DiffFieldElem, HGParams, df_eval, df_theta, log_companion, pfq
from .series import ONE, ZERO, LogSeries, Series2, SeriesError, rat, rat_str
from .weyl import ShiftOp, make_L1, make_L2, make_gauss


class PeriodError(ValueError):
    pass


@dataclass(frozen=True)
class ModelParams:
    n: int
    a0: object
    a1: object
    a2: object

    def __post_init__(self):
        if int(self.n) < 1:
            raise PeriodError("n must be a positive integer")
        object.__setattr__(self, "n", int(self.n))
        for name in ("a0", "a1", "a2"):
            object.__setattr__(self, name, rat(getattr(self, name)))
        if self.a0 == 0:
            raise PeriodError("a0 must be non-zero")

    @property
    def triple(self):
        return (self.a0, self.a1, self.a2)

    def require_balanced(self):
        if self.a1 + self.a2 != 1:
            raise PeriodError(f"this construction needs a1 + a2 = 1, got {rat_str(self.a1 + self.a2)}")

    def operators(self) -> tuple[ShiftOp, ShiftOp]:
        return make_L1(self.n, self.a0, self.a1, self.a2), make_L2(self.n)

    def gauss(self, m=0) -> ShiftOp:
        return make_gauss(self.a0, self.a1, self.a2, m)

    def to_json(self):
        return {"n": self.n, "a0": rat_str(self.a0), "a1": rat_str(self.a1), "a2": rat_str(self.a2)}


# -- Frobenius recursion ------------------------------------------------------------

def _grouped(op: ShiftOp):
    """``[(alpha, [(beta, coeff), ...]), ...]`` with the ``z^0`` group first."""
    g = op.by_z()
    zero = (0, 0)
    items = [(zero, list(g.get(zero, {}).items()))]
    items += [(a, list(p.items())) for a, p in g.items() if a != zero]
    return items


def _eval_poly(poly, point):
    s = ZERO
    x, y = point
    for (b1, b2), v in poly:
        s += v * (x ** b1) * (y ** b2)
    return s


def _solve_system(ops, rhs, caps, origin):
    """Solve ``op_k S = rhs_k`` for a holomorphic ``S`` with prescribed ``S(0,0)``.

    Each coefficient is taken from the first operator whose ``z^0`` symbol is
    non-zero at that exponent; the remaining equations are asserted.
    """
    D1, D2 = caps
    s = [[ZERO] * (D2 + 1) for _ in range(D1 + 1)]
    s[0][0] = rat(origin)
    grouped = [_grouped(op) for op in ops]
    for j in range(D2 + 1):
        for i in range(D1 + 1):
            value = None
            checks = []
            for k, grp in enumerate(grouped):
                lead = _eval_poly(grp[0][1], (i, j))
                acc = ZERO
                for (a1, a2), poly in grp[1:]:
                    si, sj = i - a1, j - a2
                    if si < 0 or sj < 0:
                        continue
                    c = s[si][sj]
                    if c:
                        acc += c * _eval_poly(poly, (si, sj))
                target = rhs[k].c[i][j] if rhs[k] is not None else ZERO
                if (i or j) and lead != 0 and value is None:
                    value = (target - acc) / lead
                else:
                    checks.append((k, lead, target - acc))
            if i or j:
                if value is None:
                    raise PeriodError(f"no operator determines the coefficient at {(i, j)}")
                s[i][j] = value
            for k, lead, r in checks:
                if lead * s[i][j] != r:
                    raise PeriodError(f"recursion inconsistent for operator {k} at {(i, j)}")
    return Series2(caps, s)


@dataclass(frozen=True)
class PeriodSet:
    params: ModelParams
    caps: tuple
    pi0: Series2
    s1: Series2
    s2: Series2

    def period(self, a: int) -> LogSeries:
        if a == 0:
            return LogSeries.lift(self.pi0)
        s = self.s1 if a == 1 else self.s2
        key = (1, 0) if a == 1 else (0, 1)
        return LogSeries({(0, 0): s, key: self.pi0})

    def nonlog(self, a: int) -> Series2:
        return (self.pi0, self.s1, self.s2)[a]

    def truncate(self, caps) -> "PeriodSet":
        return PeriodSet(self.params, tuple(caps), self.pi0.truncate(caps), self.s1.truncate(caps), self.s2.truncate(caps))

    def to_json(self):
        return {"params": self.params.to_json(), "caps": list(self.caps),
                "Pi0": self.pi0.to_json(), "S1": self.s1.to_json(), "S2": self.s2.to_json()}


def frobenius_solve(params: ModelParams, caps) -> PeriodSet:
    """Holomorphic and single-log solutions normalized by ``Pi0(0,0)=1``, ``S_a(0,0)=0``."""
    caps = (int(caps[0]), int(caps[1]))
    if min(caps) < 0 or max(caps) < 1:
        raise PeriodError(f"invalid caps {caps}")
    L1, L2 = params.operators()
    pi0 = _solve_system([L1, L2], [None, None], caps, ONE)
    logs = []
    for a in (1, 2):
        rhs = [(-L.d_theta(a)).apply(pi0) for L in (L1, L2)]
        logs.append(_solve_system([L1, L2], rhs, caps, ZERO))
    return PeriodSet(params, caps, pi0, logs[0], logs[1])


@lru_cache(maxsize=32)
def cached_periods(params: ModelParams, caps: tuple) -> PeriodSet:
    return frobenius_solve(params, caps)


def gkz_coefficient(params: ModelParams, d1: int, d2: int):
    """Independent factorial formula for the coefficient of ``z1^d1 z2^d2`` in ``Pi0``."""
    from .hypergeo import pochhammer
    n = params.n
    if d1 < n * d2:
        return ZERO
    head = pochhammer(params.a1, d1) * pochhammer(params.a2, d1) * params.a0 ** d1 / factorial(d1) ** 2
    return head * factorial(d1) / (factorial(d1 - n * d2) * factorial(d2) ** n)


# -- slices ---------------------------------------------------------------------------

def slice(ps: PeriodSet, a: int, i: int, part: str = "nonlog") -> Series2:
    """Coefficient of ``z2^i``: ``part='nonlog'`` gives ``Pi^a_i``, ``part='log'`` the log coefficient."""
    if not 0 <= i <= ps.caps[1]:
        raise PeriodError(f"slice {i} outside cap {ps.caps[1]}")
    if a not in (0, 1, 2):
        raise PeriodError(f"unknown period index {a}")
    if part == "log":
        return ps.pi0.slice(i) if a else Series2((ps.caps[0], 0))
    return ps.nonlog(a).slice(i)


def hypergeometric_pair(params: ModelParams, order: int):
    """``F(a1, a2; 1 | a0 z)`` and its log companion ``G``."""
    F = pfq(HGParams((params.a1, params.a2), (1,)), order, params.a0)
    G = log_companion((params.a1, params.a2), order, params.a0)
    return F, G


def z_power_derivative(f: Series2, m: int) -> Series2:
    """``z^m d^m/dz^m f`` coefficientwise."""
    out = []
    for l, c in enumerate(f.row(0)):
        if l < m:
            out.append(ZERO)
        else:
            out.append(c * factorial(l) / factorial(l - m))
    return Series2.univariate(out)


def log_z_power_derivative(F: Series2, G: Series2, m: int) -> Series2:
    """Non-log part of ``z^m d^m/dz^m (F log z + G)``."""
    total = z_power_derivative(G, m)
    for k in range(1, m + 1):
        coef = comb(m, k) * (-1) ** (k - 1) * factorial(k - 1)
        total = total + z_power_derivative(F, m - k).scale(coef)
    return total


@dataclass
class SliceData:
    i: int
    c0: object
    c1: object
    c1_tilde: object
    A: DiffFieldElem | None = None
    B: DiffFieldElem | None = None
    pi0_field: DiffFieldElem | None = None

    def to_json(self):
        out = {"i": self.i, "c0": rat_str(self.c0), "c1": rat_str(self.c1), "c1_tilde": rat_str(self.c1_tilde)}
        for name in ("A", "B", "pi0_field"):
            v = getattr(self, name)
            if v is not None:
                out[name] = v.to_text()
        return out


def _fit_constant(target: Series2, basis: Series2, what: str):
    """Scalar ``c`` with ``target == c * basis``; raises when no such constant exists."""
    pos = basis.first_nonzero()
    if pos is None:
        if not target.is_zero():
            raise PeriodError(f"{what}: basis vanishes but target does not")
        return ZERO
    c = target[pos] / basis[pos]
    if target != basis.scale(c):
        raise PeriodError(f"{what}: target is not a constant multiple of the closed form")
    return c


def slice_constants(params: ModelParams, i: int, ps: PeriodSet | None = None, order: int | None = None,
                    with_field: bool = True) -> SliceData:
    """Constants of the closed forms of the ``z2^i`` slices, plus ``A_i, B_i`` in ``Q(z, F, theta F)``."""
    n = params.n
    m = n * i
    if ps is None:
        d1 = order if order is not None else m + 8
        ps = cached_periods(params, (d1, max(i, 1)))
    D1 = ps.caps[0]
    if i > ps.caps[1]:
        raise PeriodError(f"slice {i} beyond period caps {ps.caps}")
    F, G = hypergeometric_pair(params, D1)
    pi0_i = ps.pi0.slice(i)
    closed0 = z_power_derivative(F, m)
    c0 = _fit_constant(pi0_i, closed0, f"holomorphic slice {i}")
    closed1 = log_z_power_derivative(F, G, m)
    c1 = c0
    rest = ps.s1.slice(i) - closed1.scale(c1)
    c1t = _fit_constant(rest, pi0_i, f"log slice {i}") if not rest.is_zero() else ZERO
    data = SliceData(i, c0, c1, c1t)
    if with_field and params.a1 + params.a2 == 1:
        fields = field_slices(params, i)
        data.A = fields.A[i]
        data.B = fields.B[i]
        data.pi0_field = fields.pi0[i]
    return data


def closed_form_slices(params: ModelParams, i: int, data: SliceData, order: int):
    """Series of the closed forms ``c0 z^m F^(m)`` and ``c1 z^m d^m(F log z + G) + c1~ Pi0_i``."""
    F, G = hypergeometric_pair(params, order)
    m = params.n * i
    p0 = z_power_derivative(F, m).scale(data.c0)
    p1 = log_z_power_derivative(F, G, m).scale(data.c1) + p0.scale(data.c1_tilde)
    return p0, p1


# -- Wronskians -------------------------------------------------------------------

def wronskian(ps: PeriodSet, a: int, b: int) -> Series2:
    """``W^{a,b} = Pi0 theta_a Pi^b - Pi^b theta_a Pi0`` (log terms cancel)."""
    p0 = ps.pi0
    sb = ps.nonlog(b)
    w = p0 * sb.theta(a) - sb * p0.theta(a)
    if a == b:
        w = w + p0 * p0
    return w


def wronskian_logform(ps: PeriodSet, a: int, b: int) -> LogSeries:
    p0 = ps.period(0)
    pb = ps.period(b)
    return p0 * pb.theta(a) - pb * p0.theta(a)


def gauss_wronskian_check(ps: PeriodSet) -> bool:
    """``W^{1,1}`` at ``z2 = 0`` equals ``(1 - a0 z1)^-(a1 + a2)``."""
    p = ps.params
    w = wronskian(ps, 1, 1).slice(0)
    expected = Series2.univariate([1, -p.a0], ps.caps[0]).pow_rational(-(p.a1 + p.a2))
    return w == expected


# -- non-homogeneous slice equations ----------------------------------------------------

def nonhom_slice_check(params: ModelParams, i: int, ps: PeriodSet | None = None, order: int = 10) -> dict:
    """The three slice equations for ``L - n i theta``; returns ``{name: bool}``."""
    if ps is None:
        ps = cached_periods(params, (max(order, params.n * i + 4), max(i, 1)))
    n = params.n
    Lm = params.gauss(n * i)
    t = ShiftOp.theta(1, 1)
    p0 = ps.pi0.slice(i)
    p1 = ps.s1.slice(i)
    p2 = ps.s2.slice(i)
    return {
        "holomorphic": Lm.apply(p0).is_zero(),
        "log_z1": (Lm.apply(p1) + Lm.d_theta(1).apply(p0)).is_zero(),
        "log_z2": (Lm.apply(p2) - (t * n).apply(p0)).is_zero(),
    }


# -- A_i, B_i, C_i in the differential field ---------------------------------------------

class _LinLog:
    """``c0 + c1 * ell`` with coefficients in the differential field."""

    __slots__ = ("c0", "c1")

    def __init__(self, c0, c1):
        self.c0, self.c1 = c0, c1


def _apply_factor(u: _LinLog, lam, t_shift: int, n: int, k: int, use_dell: bool) -> _LinLog:
    """Apply ``n (t_shift + d_ell) - D1 + k`` where ``D1 ell = lam``."""
    d0 = df_theta(u.c0) + lam * u.c1
    d1 = df_theta(u.c1)
    r0 = u.c0 * (n * t_shift + k) - d0
    r1 = u.c1 * (n * t_shift + k) - d1
    if use_dell:
        r0 = r0 + u.c1 * n
    return _LinLog(r0, r1)


@dataclass
class FieldSlices:
    params: ModelParams
    pi0: list = field(default_factory=list)
    A: list = field(default_factory=list)
    B: list = field(default_factory=list)


_FIELD_CACHE: dict = {}


def field_slices(params: ModelParams, upto: int) -> FieldSlices:
    """``Pi0_i``, ``A_i``, ``B_i`` as elements of ``Q(z, F, theta F)`` from the ``L2`` recursion."""
    params.require_balanced()
    key = params
    cached = _FIELD_CACHE.get(key)
    if cached is not None and len(cached.A) > upto:
        return cached
    n = params.n
    P = params.triple
    Z, F = DiffFieldElem.Z(P), DiffFieldElem.F(P)
    one_minus = 1 - params.a0 * Z
    lam_q = 1 / (one_minus * F * F)
    lam_b = (lam_q - 1 / one_minus) * (-rat(n) / 2)
    zero = DiffFieldElem.const(0, P)
    out = cached if cached is not None else FieldSlices(params, [F], [zero], [zero])
    sign = (-1) ** n
    for i in range(len(out.A), upto + 1):
        # A: ell = log q, theta2 ell = 0
        u = _LinLog(out.A[i - 1], out.pi0[i - 1])
        for k in range(n):
            u = _apply_factor(u, lam_q, i - 1, n, k, use_dell=False)
        denom = rat(i) ** n
        pi0_i = u.c1 * sign / denom
        A_i = u.c0 * sign / denom
        # B: ell = log z2 + shift, theta2 ell = 1
        v = _LinLog(out.B[i - 1], out.pi0[i - 1])
        for k in range(n):
            v = _apply_factor(v, lam_b, i - 1, n, k, use_dell=True)
        if v.c1 * sign / denom != pi0_i:
            raise PeriodError(f"holomorphic slice {i} disagrees between the two recursions")
        B_i = (v.c0 * sign - pi0_i * (n * rat(i) ** (n - 1))) / denom
        out.pi0.append(pi0_i)
        out.A.append(A_i)
        out.B.append(B_i)
    _FIELD_CACHE[key] = out
    return out


def field_slice_series_check(params: ModelParams, ps: PeriodSet, upto: int) -> dict:
    """Compare the field-valued slices with the Frobenius slices as series."""
    D1 = ps.caps[0]
    fs = field_slices(params, upto)
    F, G = hypergeometric_pair(params, D1)
    ratio = G * F.inverse()
    log1m = Series2.univariate([1, -params.a0], D1).log()
    result = {}
    for i in range(upto + 1):
        p0 = ps.pi0.slice(i)
        a_ser = ps.s1.slice(i) - p0 * ratio
        b_ser = ps.s2.slice(i) + (p0 * (ratio + log1m)).scale(rat(params.n) / 2)
        result[i] = {
            "pi0": df_eval(fs.pi0[i], D1) == p0,
            "A": df_eval(fs.A[i], D1) == a_ser,
            "B": df_eval(fs.B[i], D1) == b_ser,
        }
    return result


def shape_polynomial(elem: DiffFieldElem, i: int, params: ModelParams):
    """``elem * F * (1 - a0 z)^(n i)`` as a field element; a polynomial when the shape law holds."""
    P = params.triple
    Z, F = DiffFieldElem.Z(P), DiffFieldElem.F(P)
    return elem * F * (1 - params.a0 * Z) ** (params.n * i)


def is_polynomial(elem: DiffFieldElem) -> bool:
    return elem.denom.is_ground


def c_slices_field(params: ModelParams, upto: int) -> list:
    """Slices ``C_i`` of ``exp((B + (n/2) A) / Pi0)`` as field elements."""
    fs = field_slices(params, upto)
    n = params.n
    half = rat(n) / 2
    P = params.triple
    num = [fs.B[i] + fs.A[i] * half for i in range(upto + 1)]
    # Y = num / Pi0 as a z2-series over the field
    inv0 = 1 / fs.pi0[0]
    Y = []
    for k in range(upto + 1):
        acc = num[k]
        for j in range(1, k + 1):
            acc = acc - fs.pi0[j] * Y[k - j]
        Y.append(acc * inv0)
    X = [DiffFieldElem.const(1, P)]
    for k in range(1, upto + 1):
        acc = DiffFieldElem.const(0, P)
        for j in range(1, k + 1):
            acc = acc + Y[j] * X[k - j] * j
        X.append(acc / k)
    return X
