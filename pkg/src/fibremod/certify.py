"""Exact modularity certificates for the ``t``-expansion of fibred periods.

For a balanced family the coefficient ``f_i(q1)`` of ``t^i`` in ``Pi0^w`` is a
quasi-modular form of the fibre's level, up to a power of the level's cusp
form ``Delta_L = z1 (1 - a0 z1) F^k``.  ``certify`` clears that denominator and
fits the result exactly in the ring generated by ``E2`` and the level's
modular generators, with spare equations as a consistency check.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from .mirror import build_mirror, t_expand_q
from .modular import FitError, FitResult, UnderdeterminedFit, fit
from .periods import ModelParams, cached_periods
from .series import QExp, rat, rat_str

# weight of Delta_L, i.e. k with Delta_L = z (1 - a0 z) F^k
CUSP_WEIGHT = {"SL2Z": 12, "Gamma0(2)": 8, "Gamma0(3)": 6, "Gamma(2)": 4}
# weight of the power of Pi0 whose expansion is certified
ELEMENT_POWER = {"SL2Z": 4, "Gamma0(2)": 2, "Gamma0(3)": 2, "Gamma(2)": 2}


@dataclass
class CertEntry:
    i: int
    weight: int
    delta_power: Fraction
    extra_f: int
    fit: FitResult | None
    error: str | None
    underdetermined: bool = False

    @property
    def ok(self) -> bool:
        return self.fit is not None

    def to_json(self):
        return {"i": self.i, "weight": self.weight, "delta_power": rat_str(self.delta_power),
                "extra_F": self.extra_f, "ok": self.ok, "underdetermined": self.underdetermined,
                "fit": self.fit.to_json() if self.fit else None, "error": self.error}


@dataclass
class Certificate:
    params: ModelParams
    level: str
    element_power: int
    order: int
    entries: list

    @property
    def ok(self) -> bool:
        return all(e.ok for e in self.entries)

    def to_json(self):
        p = self.params
        return {"n": p.n, "a0": rat_str(p.a0), "a1": rat_str(p.a1), "a2": rat_str(p.a2),
                "level": self.level, "element": f"Pi0^{self.element_power}", "order": self.order,
                "ok": self.ok, "entries": [e.to_json() for e in self.entries]}


def fibre_forms(params: ModelParams, order: int, q2_cap: int = 2):
    """``(F, z, Delta_L / F^k, ps, mm)`` along ``q2 = 0``: ``F = Pi0``, ``z = z1(q1)``."""
    ps = cached_periods(params, (order, q2_cap))
    mm = build_mirror(ps)
    F = QExp(mm.to_q(ps.pi0).row(0), 0, 1)
    z = QExp([rat(0)] + list(mm.v1.row(0))[:order], 0, 1)
    base = z * (QExp.constant(1, order) - z.scale(params.a0))
    return F, base, ps, mm


def _power(series: QExp, r: Fraction) -> QExp:
    """``series^r`` for a series starting ``c q^1``."""
    if r == 0:
        return QExp.constant(1, series.cap)
    return series.shift(-1).normalized().pow_rational(r).shift(r)


def certify(params: ModelParams, level: str, order: int = 32, t_order: int = 2, margin: int = 3) -> Certificate:
    """Fit ``f_i Delta_L^(n i / 2)`` for ``i <= t_order``.

    The weight is ``w + k n i / 2``; when it is odd (level 3, odd ``n i``) one
    more factor of the weight-one form ``F`` is included.
    """
    if level not in CUSP_WEIGHT:
        raise FitError(f"unknown level {level!r}")
    if t_order < 0:
        raise FitError(f"t-order must be non-negative, got {t_order}")
    k =CUSP_WEIGHT[level]
    w = ELEMENT_POWER[level]
    F, base, ps, mm = fibre_forms(params, order, max(t_order, 1))
    delta = base * (F ** k)
    te = t_expand_q(mm.to_q(ps.pi0 ** w), params.n, t_order=t_order)
    entries = []
    for i in range(t_order + 1):
        r = Fraction(params.n * i, 2)
        weight = w + k * r
        extra = int(weight % 2)
        g = te[i] * _power(delta, r) if i else te[i]
        if extra:
            g = g * F
        weight = int(weight) + extra
        try:
            fr = fit(g, weight, level, max_E2_degree=i, margin=margin)
            entries.append(CertEntry(i, weight, r, extra, fr, None))
        except FitError as exc:
            entries.append(CertEntry(i, weight, r, extra, None, str(exc), isinstance(exc, UnderdeterminedFit)))
    return Certificate(params, level, w, order, entries)
