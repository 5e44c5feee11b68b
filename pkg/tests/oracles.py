"""Independent reference computations used by the tests.

None of these call into the package's algorithms; they use plain ``fractions``,
``math`` and ``sympy`` with textbook formulas.
"""
from __future__ import annotations

from fractions import Fraction
from math import comb, factorial

import sympy


def pochhammer(a: Fraction, k: int) -> Fraction:
    out = Fraction(1)
    for m in range(k):
        out *= a + m
    return out


def gkz_coefficient(n: int, a0, a1, a2, i: int, j: int) -> Fraction:
    """Coefficient of ``z1^i z2^j`` in the holomorphic period, from the Mori-vector formula."""
    if i < n * j:
        return Fraction(0)
    a0, a1, a2 = Fraction(a0), Fraction(a1), Fraction(a2)
    return (a0 ** i * pochhammer(a1, i) * pochhammer(a2, i)
            / (factorial(i) * factorial(i - n * j) * factorial(j) ** n))


def main_fibre_coefficient(k: int) -> int:
    return factorial(6 * k) // (factorial(3 * k) * factorial(2 * k) * factorial(k))


def hypergeometric_2f1(a1, a2, scale, order: int) -> list:
    return [Fraction(scale) ** k * pochhammer(Fraction(a1), k) * pochhammer(Fraction(a2), k) / factorial(k) ** 2
            for k in range(order + 1)]


def eisenstein(k: int, order: int) -> list:
    """Normalized ``E_k`` via ``divisor_sigma`` and the Bernoulli number."""
    const = Fraction(-2 * k) / Fraction(sympy.bernoulli(k))
    return [Fraction(1)] + [const * int(sympy.divisor_sigma(m, k - 1)) for m in range(1, order + 1)]


def eta_power(m: int, order: int) -> list:
    """Coefficients of ``prod (1 - q^k)^m`` (without the ``q^(m/24)``), via the binomial theorem per factor."""
    out = [Fraction(1)] + [Fraction(0)] * order
    for k in range(1, order + 1):
        factor = [Fraction(0)] * (order + 1)
        for r in range(order // k + 1):
            factor[k * r] = Fraction((-1) ** r * comb(m, r)) if m >= 0 else Fraction(comb(-m + r - 1, r))
        out = series_mul(out, factor, order)
    return out


def series_mul(a: list, b: list, order: int) -> list:
    out = [Fraction(0)] * (order + 1)
    for i, x in enumerate(a[: order + 1]):
        if x:
            for j, y in enumerate(b[: order + 1 - i]):
                out[i + j] += x * y
    return out


def fixed_point_inverse(u1, u2):
    """Invert ``q_a = z_a u_a(z)`` by plain fixed-point iteration (one total degree per pass)."""
    from fibremod.series import ONE, Series2, substitute

    caps = u1.caps
    q1 = Series2.monomial(1, 0, caps)
    q2 = Series2.monomial(0, 1, caps)
    v1 = Series2.constant(ONE / u1.c[0][0], caps)
    v2 = Series2.constant(ONE / u2.c[0][0], caps)
    for _ in range(caps[0] + caps[1] + 1):
        z1, z2 = q1 * v1, q2 * v2
        v1, v2 = substitute(u1, z1, z2).inverse(), substitute(u2, z1, z2).inverse()
    return v1, v2


def multicover_direct(n: dict) -> dict:
    """``N_beta = sum_{k | beta} n_{beta/k} / k^2`` by brute force over all k."""
    out = {}
    for (d1, d2) in n:
        total = Fraction(0)
        for k in range(1, max(d1, d2) + 1):
            if d1 % k == 0 and d2 % k == 0:
                total += Fraction(n.get((d1 // k, d2 // k), 0)) / (k * k)
        out[(d1, d2)] = total
    return out


# -- nilpotent-orbit model of a variation of Hodge structure ---------------------------------

class OrbitModel:
    """``Omega = g(z) exp(t1 J1 + t2 J2)`` in ``Q[J1, J2]/(deg > 4)``.

    ``<a, b> = int sigma(a) b`` with ``sigma(J) = -J`` and ``int J1^a J2^b = kappa[(a, b)]``.
    Any such ``Omega`` satisfies the transversality relations of a fourfold, so
    couplings computed from it test the package's relations without using them.
    """

    def __init__(self, t1, t2, g, kappa: dict):
        self.z1, self.z2 = sympy.symbols("z1 z2")
        self.kappa = kappa
        self._w = {}
        self.omega = {}
        for a in range(5):
            for b in range(5 - a):
                self.omega[(a, b)] = g * t1 ** a * t2 ** b / (factorial(a) * factorial(b))

    def derivative(self, j: tuple) -> dict:
        out = {}
        for key, expr in self.omega.items():
            e = expr
            if j[0]:
                e = sympy.diff(e, self.z1, j[0])
            if j[1]:
                e = sympy.diff(e, self.z2, j[1])
            out[key] = e
        return out

    def pairing(self, x: dict, y: dict):
        total = 0
        for (a, b), u in x.items():
            for (c, d), v in y.items():
                if a + b + c + d == 4:
                    total += (-1) ** (a + b) * u * v * self.kappa[(a + c, b + d)]
        return sympy.expand(total)

    def W(self, j: tuple):
        j = tuple(j)
        if j not in self._w:
            self._w[j] = self.pairing(self.omega, self.derivative(j))
        return self._w[j]


def j_route_mirror(order: int) -> list:
    """``z(q) = (1 - sqrt(1 - 1728/J)) / 864`` with ``1/J = Delta / E4^3``."""
    delta = [Fraction(0)] + eta_power(24, order)[:order]
    e4 = eisenstein(4, order)
    e4_cubed = series_mul(series_mul(e4, e4, order), e4, order)
    inv = [Fraction(1)] + [Fraction(0)] * order
    for k in range(1, order + 1):
        inv[k] = -sum(e4_cubed[m] * inv[k - m] for m in range(1, k + 1))
    x = [1728 * c for c in series_mul(delta, inv, order)]
    root = [Fraction(0)] * (order + 1)
    power = [Fraction(1)] + [Fraction(0)] * order
    for k in range(order + 1):
        binom = Fraction(1)
        for m in range(k):
            binom *= (Fraction(1, 2) - m) / (m + 1)
        for e in range(order + 1):
            root[e] += binom * (-1) ** k * power[e]
        power = series_mul(power, x, order)
    return [(int(e == 0) - root[e]) / 864 for e in range(order + 1)]
