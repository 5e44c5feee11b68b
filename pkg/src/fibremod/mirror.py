"""Mirror maps, flat-coordinate derivations and the expansion in ``t = q2 q1^(n/2)``."""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from .hypergeo import df_eval
from .periods import PeriodSet, c_slices_field, wronskian
from .series import ONE, ZERO, QExp, Series2, SeriesError, invert_map, rat, substitute


class MirrorError(ValueError):
    pass


@dataclass(frozen=True)
class MirrorMap:
    """``q_a = z_a u_a(z)`` and the inverse ``z_a = q_a v_a(q)``."""

    u1: Series2
    u2: Series2
    v1: Series2
    v2: Series2

    @property
    def caps(self):
        return self.u1.caps

    def q_of_z(self) -> tuple[Series2, Series2]:
        caps = self.caps
        return Series2.monomial(1, 0, caps) * self.u1, Series2.monomial(0, 1, caps) * self.u2

    def z_of_q(self) -> tuple[Series2, Series2]:
        caps = self.caps
        return Series2.monomial(1, 0, caps) * self.v1, Series2.monomial(0, 1, caps) * self.v2

    def to_q(self, f: Series2) -> Series2:
        """Substitute ``z = z(q)`` into a holomorphic series."""
        z1, z2 = self.z_of_q()
        caps = (min(f.caps[0], self.caps[0]), min(f.caps[1], self.caps[1]))
        return substitute(f, z1.truncate(caps), z2.truncate(caps))

    def to_z(self, g: Series2) -> Series2:
        q1, q2 = self.q_of_z()
        caps = (min(g.caps[0], self.caps[0]), min(g.caps[1], self.caps[1]))
        return substitute(g, q1.truncate(caps), q2.truncate(caps))

    def round_trip_ok(self) -> bool:
        q1, q2 = self.q_of_z()
        z1, z2 = self.z_of_q()
        return substitute(q1, z1, z2) == Series2.monomial(1, 0, self.caps) and \
            substitute(q2, z1, z2) == Series2.monomial(0, 1, self.caps)

    def to_json(self):
        return {"u1": self.u1.to_json(), "u2": self.u2.to_json(), "v1": self.v1.to_json(), "v2": self.v2.to_json()}


def build_mirror(ps: PeriodSet) -> MirrorMap:
    """``u_a = exp(S_a / Pi0)``, inverted to ``z_a = q_a v_a(q)``."""
    inv = ps.pi0.inverse()
    u1 = (ps.s1 * inv).exp()
    u2 = (ps.s2 * inv).exp()
    v1, v2 = invert_map(u1, u2)
    return MirrorMap(u1, u2, v1, v2)


# -- flat-coordinate derivations ----------------------------------------------------------

@dataclass(frozen=True)
class TauDerivations:
    """``d/d tau_a`` realized through the Wronskians."""

    ps: PeriodSet
    w11: Series2
    w12: Series2
    w21: Series2
    w22: Series2
    det: Series2

    def scale(self) -> Series2:
        return self.ps.pi0 * self.ps.pi0 * self.det.inverse()

    def d_tau1(self, f: Series2) -> Series2:
        return self.scale() * (self.w22 * f.theta(1) - self.w12 * f.theta(2))

    def d_tau2(self, f: Series2) -> Series2:
        return self.scale() * (self.w11 * f.theta(2) - self.w21 * f.theta(1))

    def on_tau(self, a: int, b: int) -> Series2:
        """``D_a tau_b`` using ``theta_c tau_b = W^{c,b} / Pi0^2``."""
        W = {(1, 1): self.w11, (1, 2): self.w12, (2, 1): self.w21, (2, 2): self.w22}
        p2inv = (self.ps.pi0 * self.ps.pi0).inverse()
        t1 = W[(1, b)] * p2inv
        t2 = W[(2, b)] * p2inv
        if a == 1:
            return self.scale() * (self.w22 * t1 - self.w12 * t2)
        return self.scale() * (self.w11 * t2 - self.w21 * t1)

    def limit_w21(self) -> Series2:
        """``Pi0^2 W^{21} / (z2 det)`` at ``z2 = 0``."""
        return (self.scale() * self.w21).divide_monomial(0, 1).slice(0)

    def limit_w11(self) -> Series2:
        """``Pi0^2 W^{11} / det`` at ``z2 = 0``."""
        return (self.scale() * self.w11).slice(0)


def tau_derivations(ps: PeriodSet, mm: MirrorMap | None = None) -> TauDerivations:
    w = {(a, b): wronskian(ps, a, b) for a in (1, 2) for b in (1, 2)}
    det = w[1, 1] * w[2, 2] - w[2, 1] * w[1, 2]
    if not det.is_unit():
        raise MirrorError("Wronskian determinant is not invertible at the origin")
    return TauDerivations(ps, w[1, 1], w[1, 2], w[2, 1], w[2, 2], det)


def jacobian_route_check(ps: PeriodSet, mm: MirrorMap, td: TauDerivations | None = None) -> bool:
    """``D_b z_a`` from the Wronskians equals ``q_b d/dq_b (q_a v_a)`` pulled back to ``z``."""
    td = td or tau_derivations(ps, mm)
    caps = ps.caps
    z = (Series2.monomial(1, 0, caps), Series2.monomial(0, 1, caps))
    zq = mm.z_of_q()
    ok = True
    for b in (1, 2):
        deriv = td.d_tau1 if b == 1 else td.d_tau2
        for a in (1, 2):
            w_route = deriv(z[a - 1])
            j_route = mm.to_z(zq[a - 1].theta(b))
            ok = ok and w_route == j_route
    return ok


# -- Prop. 7 quantity -------------------------------------------------------------------

def x_series(ps: PeriodSet, mm: MirrorMap) -> Series2:
    """``(1 - a0 z1)^(n/2) u1^(n/2) u2`` as a unit series."""
    p = ps.params
    p.require_balanced()
    half = rat(p.n) / 2
    lin = Series2.univariate([1, -p.a0], ps.caps[0]).pad(ps.caps)
    return lin.pow_rational(half) * mm.u1.pow_rational(half) * mm.u2


def x_recursion(ps: PeriodSet) -> list[Series2]:
    """Slices of ``X`` from ``theta2 X = g X`` with ``g = (W22 + (n/2) W21)/Pi0^2 - 1``."""
    p = ps.params
    half = rat(p.n) / 2
    g = (wronskian(ps, 2, 2) + wronskian(ps, 2, 1).scale(half)) * (ps.pi0 * ps.pi0).inverse() - 1
    D1, D2 = ps.caps
    gs = [g.slice(j) for j in range(D2 + 1)]
    if not gs[0].is_zero():
        raise MirrorError("the z2^0 part of the driving term does not vanish")
    xs = [Series2.one((D1, 0))]
    for k in range(1, D2 + 1):
        acc = Series2((D1, 0))
        for j in range(1, k + 1):
            acc = acc + gs[j] * xs[k - j]
        xs.append(acc.scale(ONE / k))
    return xs


def x_checks(ps: PeriodSet, mm: MirrorMap, field_upto: int | None = None) -> dict:
    X = x_series(ps, mm)
    rec = x_recursion(ps)
    out = {"starts_with_one": X.slice(0) == Series2.one((ps.caps[0], 0)),
           "recursion": all(X.slice(k) == rec[k] for k in range(ps.caps[1] + 1))}
    if field_upto is not None:
        cs = c_slices_field(ps.params, field_upto)
        out["field"] = all(df_eval(cs[k], ps.caps[0]) == X.slice(k) for k in range(field_upto + 1))
    return out


# -- t-expansion ---------------------------------------------------------------------------

@dataclass
class TExpansion:
    """``f = sum_i f_i(q1) t^i`` with ``t = q2 q1^(n/2)``."""

    n: int
    coeffs: list

    def __getitem__(self, i) -> QExp:
        return self.coeffs[i]

    def __len__(self):
        return len(self.coeffs)

    def to_json(self):
        return {"n": self.n, "orders": [c.to_json() for c in self.coeffs]}


def t_expand_q(g: Series2, n: int, shift=(0, 0), t_order: int | None = None) -> TExpansion:
    """Regroup ``q1^s1 q2^s2 g(q1, q2)`` as a series in ``t`` with Laurent ``q1`` coefficients.

    The coefficient of ``t^i`` is ``q1^(s1 - n (i - s2)/2) [q2^(i - s2)] g``; it
    is valid through ``q1^(s1 + D1 - n (i - s2)/2)``.
    """
    s1, s2 = int(shift[0]), int(shift[1])
    D1, D2 = g.caps
    top = D2 + s2 if t_order is None else t_order
    if top > D2 + s2:
        raise MirrorError(f"t-order {top} needs q2-cap {top - s2}, have {D2}")
    out = []
    for i in range(top + 1):
        j = i - s2
        if j < 0:
            out.append(QExp([ZERO], 0, 1))
            continue
        num = 2 * s1 - n * j  # exponent offset in halves
        base = 1 if num % 2 == 0 else 2
        row = g.row(j)
        if base == 1:
            out.append(QExp(row, num // 2, 1))
        else:
            spread = [ZERO] * (2 * len(row) - 1)
            spread[::2] = row
            out.append(QExp(spread, num, 2))
    return TExpansion(n, out)


def t_expand(f: Series2, ps: PeriodSet, mm: MirrorMap, n: int | None = None, t_order: int | None = None) -> TExpansion:
    """``t``-expansion of a holomorphic function of ``z`` after inserting the mirror map."""
    n = ps.params.n if n is None else n
    return t_expand_q(mm.to_q(f), n, (0, 0), t_order)


def t_reconstruct(te: TExpansion, caps) -> Series2:
    """Rebuild the ``(q1, q2)`` series from its ``t``-expansion (inverse of ``t_expand_q``)."""
    D1, D2 = caps
    rows = [[ZERO] * (D2 + 1) for _ in range(D1 + 1)]
    for i, fi in enumerate(te.coeffs[: D2 + 1]):
        for e, v in fi.terms().items():
            k = e + Fraction(te.n * i, 2)
            if k.denominator != 1:
                raise MirrorError("non-integral q1 exponent after removing t")
            if 0 <= k <= D1:
                rows[int(k)][i] = v
    return Series2(caps, rows)


class TwistedDerivation:
    """``q1^(-n/2) d/dq2`` acting on ``z1^s g(z)`` (even ``n``).

    Uses ``(q2 q1^(n/2)/z2)^-1 Pi0^2/(z2 det) (-W21 theta1 + W11 theta2)``.
    """

    def __init__(self, ps: PeriodSet, mm: MirrorMap, td: TauDerivations | None = None):
        if ps.params.n % 2:
            raise MirrorError("the twisted derivation cross-check needs even n")
        self.ps, self.mm = ps, mm
        td = td or tau_derivations(ps, mm)
        p = ps.params
        half = p.n // 2
        X = x_series(ps, mm)
        lin = Series2.univariate([1, -p.a0], ps.caps[0]).pad(ps.caps) ** half
        self.h = X.inverse() * lin * td.scale()
        self.w21 = td.w21.divide_monomial(0, 1)
        self.w11 = td.w11
        self.half = half

    def __call__(self, s: int, g: Series2) -> tuple[int, Series2]:
        caps = (g.caps[0], g.caps[1] - 1)
        t1 = (g.theta(1) + g.scale(s)).truncate(caps)
        t2 = g.theta(2).divide_monomial(0, 1)
        body = self.w11.truncate(caps) * t2 - self.w21.truncate(caps) * t1
        return s - self.half, self.h.truncate(caps) * body

    def t_coefficient(self, f: Series2, i: int) -> QExp:
        """``f_i(q1) = (D^i f)|_{z2=0} / i!`` as a q1-series."""
        s, g = 0, f
        for _ in range(i):
            s, g = self(s, g)
        g0 = g.slice(0)
        v1 = self.mm.v1.slice(0).truncate(g0.caps)
        z1 = Series2.monomial(1, 0, g0.caps) * v1
        body = substitute(g0, z1) * (v1 ** s)
        from math import factorial
        return QExp(body.row(0), s, 1).scale(ONE / factorial(i))
