"""Exact truncated power series over the rationals.

Three containers live here:

* :class:`Series2` -- dense bivariate series in ``(z1, z2)`` truncated to a
  rectangle ``i <= D1, j <= D2``.  A univariate series is a ``Series2`` with
  ``D2 == 0``.
* :class:`LogSeries` -- polynomials in ``log z1``, ``log z2`` with ``Series2``
  coefficients.
* :class:`QExp` -- Laurent q-series with exponents in ``(1/b) Z``.

Every coefficient is a :class:`gmpy2.mpq`.  Values are never mutated after
construction.
"""
from __future__ import annotations

from fractions import Fraction
from typing import Iterable, Mapping, Sequence

from gmpy2 import mpq

Rat = type(mpq(0))

ZERO = mpq(0)
ONE = mpq(1)


class SeriesError(ValueError):
    """Raised on precondition violations (non-unit division, bad caps...)."""


def rat(x) -> mpq:
    """Coerce ints, Fractions, mpq and ``"p/q"`` strings to ``mpq``."""
    if isinstance(x, Rat):
        return x
    if isinstance(x, str):
        s = x.strip()
        if not s:
            raise ValueError("empty rational string")
        return mpq(Fraction(s))
    if isinstance(x, Fraction):
        return mpq(x.numerator, x.denominator)
    if isinstance(x, float):
        raise TypeError("floats are not accepted; pass an exact rational")
    return mpq(x)


def rat_str(x) -> str:
    x = rat(x)
    if x.denominator == 1:
        return str(x.numerator)
    return f"{x.numerator}/{x.denominator}"


class Series2:
    """Bivariate series ``sum c[i][j] z1^i z2^j`` known for ``i<=D1, j<=D2``."""

    __slots__ = ("caps", "c")

    def __init__(self, caps: tuple[int, int], coeffs=None):
        D1, D2 = int(caps[0]), int(caps[1])
        if D1 < 0 or D2 < 0:
            raise SeriesError(f"negative caps {caps}")
        self.caps = (D1, D2)
        if coeffs is None:
            self.c = tuple(tuple(ZERO for _ in range(D2 + 1)) for _ in range(D1 + 1))
        elif isinstance(coeffs, Mapping):
            rows = [[ZERO] * (D2 + 1) for _ in range(D1 + 1)]
            for (i, j), v in coeffs.items():
                if 0 <= i <= D1 and 0 <= j <= D2:
                    rows[i][j] = rat(v)
                elif i < 0 or j < 0:
                    raise SeriesError(f"negative exponent {(i, j)}")
            self.c = tuple(tuple(r) for r in rows)
        else:
            rows = [list(r) for r in coeffs]
            if len(rows) != D1 + 1 or any(len(r) != D2 + 1 for r in rows):
                raise SeriesError("coefficient array does not match caps")
            self.c = tuple(tuple(rat(v) for v in r) for r in rows)

    # -- constructors -------------------------------------------------------
    @classmethod
    def _raw(cls, caps, rows) -> "Series2":
        s = cls.__new__(cls)
        s.caps = caps
        s.c = tuple(tuple(r) for r in rows)
        return s

    @classmethod
    def constant(cls, value, caps) -> "Series2":
        return cls(caps, {(0, 0): value})

    @classmethod
    def one(cls, caps) -> "Series2":
        return cls.constant(ONE, caps)

    @classmethod
    def monomial(cls, i: int, j: int, caps, coeff=ONE) -> "Series2":
        return cls(caps, {(i, j): coeff})

    @classmethod
    def univariate(cls, coeffs: Sequence, cap: int | None = None) -> "Series2":
        coeffs = list(coeffs)
        if cap is None:
            cap = len(coeffs) - 1
        rows = [[rat(coeffs[i]) if i < len(coeffs) else ZERO] for i in range(cap + 1)]
        return cls._raw((cap, 0), rows)

    @classmethod
    def from_polynomial(cls, terms: Mapping, caps) -> "Series2":
        return cls(caps, terms)

    # -- access ---------------------------------------------------------------
    def __getitem__(self, ij) -> mpq:
        i, j = ij
        if 0 <= i <= self.caps[0] and 0 <= j <= self.caps[1]:
            return self.c[i][j]
        raise IndexError(f"{ij} outside caps {self.caps}")

    def coeff(self, i: int, j: int = 0) -> mpq:
        return self[i, j]

    def terms(self) -> dict:
        return {(i, j): v for i, row in enumerate(self.c) for j, v in enumerate(row) if v}

    def is_zero(self) -> bool:
        return not any(v for row in self.c for v in row)

    def is_unit(self) -> bool:
        return self.c[0][0] != 0

    def row(self, j: int) -> list[mpq]:
        """Coefficients of ``z2^j`` as a list indexed by the z1-exponent."""
        return [self.c[i][j] for i in range(self.caps[0] + 1)]

    def slice(self, j: int) -> "Series2":
        """The coefficient of ``z2^j`` as a univariate series in z1."""
        if not 0 <= j <= self.caps[1]:
            raise SeriesError(f"slice {j} outside cap {self.caps[1]}")
        return Series2._raw((self.caps[0], 0), [[v] for v in self.row(j)])

    def first_nonzero(self) -> tuple[int, int] | None:
        for d in range(sum(self.caps) + 1):
            for i in range(max(0, d - self.caps[1]), min(d, self.caps[0]) + 1):
                if self.c[i][d - i]:
                    return (i, d - i)
        return None

    def __eq__(self, other) -> bool:
        if isinstance(other, Series2):
            return self.caps == other.caps and self.c == other.c
        if isinstance(other, (int, Rat, Fraction)):
            return self == Series2.constant(other, self.caps)
        return NotImplemented

    def __hash__(self):
        return hash((self.caps, self.c))

    def equal_to_caps(self, other: "Series2") -> bool:
        caps = _common(self.caps, other.caps)
        return self.truncate(caps).c == other.truncate(caps).c

    def __repr__(self) -> str:
        return f"Series2(caps={self.caps}, {self.to_text(6)})"

    def to_text(self, max_terms: int | None = None) -> str:
        parts = []
        for (i, j), v in sorted(self.terms().items(), key=lambda t: (t[0][0] + t[0][1], t[0])):
            mono = "*".join(p for p in (_pw("z1", i), _pw("z2", j)) if p)
            parts.append(rat_str(v) + ("*" + mono if mono else ""))
            if max_terms and len(parts) >= max_terms:
                parts.append("...")
                break
        return " + ".join(parts) if parts else "0"

    # -- shape ----------------------------------------------------------------
    def truncate(self, caps) -> "Series2":
        D1, D2 = caps
        if D1 > self.caps[0] or D2 > self.caps[1]:
            raise SeriesError(f"cannot extend caps {self.caps} to {tuple(caps)}")
        if (D1, D2) == self.caps:
            return self
        return Series2._raw((D1, D2), [self.c[i][: D2 + 1] for i in range(D1 + 1)])

    def pad(self, caps) -> "Series2":
        """Zero-extend.  Only valid when the caller knows the series is a polynomial."""
        D1, D2 = caps
        rows = [[self.c[i][j] if i <= self.caps[0] and j <= self.caps[1] else ZERO
                 for j in range(D2 + 1)] for i in range(D1 + 1)]
        return Series2._raw((D1, D2), rows)

    # -- ring operations ------------------------------------------------------
    def _coerce(self, other) -> "Series2":
        if isinstance(other, Series2):
            return other
        return Series2.constant(rat(other), self.caps)

    def __add__(self, other):
        if isinstance(other, LogSeries):
            return NotImplemented
        other = self._coerce(other)
        D1, D2 = _common(self.caps, other.caps)
        a, b = self.c, other.c
        return Series2._raw((D1, D2), [[a[i][j] + b[i][j] for j in range(D2 + 1)] for i in range(D1 + 1)])

    __radd__ = __add__

    def __neg__(self):
        return Series2._raw(self.caps, [[-v for v in row] for row in self.c])

    def __sub__(self, other):
        if isinstance(other, LogSeries):
            return NotImplemented
        return self + (-self._coerce(other))

    def __rsub__(self, other):
        return (-self) + other

    def scale(self, k) -> "Series2":
        k = rat(k)
        return Series2._raw(self.caps, [[k * v for v in row] for row in self.c])

    def __mul__(self, other):
        if isinstance(other, (LogSeries, QExp)):
            return NotImplemented
        if not isinstance(other, Series2):
            return self.scale(other)
        D1, D2 = _common(self.caps, other.caps)
        a, b = self.c, other.c
        out = [[ZERO] * (D2 + 1) for _ in range(D1 + 1)]
        anz = [(i, j, a[i][j]) for i in range(D1 + 1) for j in range(D2 + 1) if a[i][j]]
        bnz = [(i, j, b[i][j]) for i in range(D1 + 1) for j in range(D2 + 1) if b[i][j]]
        for i, j, x in anz:
            for k, l, y in bnz:
                if i + k <= D1 and j + l <= D2:
                    out[i + k][j + l] += x * y
        return Series2._raw((D1, D2), out)

    __rmul__ = __mul__

    def inverse(self) -> "Series2":
        f0 = self.c[0][0]
        if f0 == 0:
            raise SeriesError("division by a non-unit series")
        D1, D2 = self.caps
        f = self.c
        inv0 = ONE / f0
        h = [[ZERO] * (D2 + 1) for _ in range(D1 + 1)]
        fnz = [(k, l, f[k][l]) for k in range(D1 + 1) for l in range(D2 + 1) if f[k][l] and (k or l)]
        for i in range(D1 + 1):
            for j in range(D2 + 1):
                if i == 0 and j == 0:
                    h[0][0] = inv0
                    continue
                s = ZERO
                for k, l, v in fnz:
                    if k <= i and l <= j:
                        s += v * h[i - k][j - l]
                h[i][j] = -s * inv0
        return Series2._raw(self.caps, h)

    def __truediv__(self, other):
        if isinstance(other, Series2):
            return self * other.inverse()
        other = rat(other)
        if other == 0:
            raise SeriesError("division by zero")
        return self.scale(ONE / other)

    def __rtruediv__(self, other):
        return self.inverse().scale(other)

    def __pow__(self, e: int):
        e = int(e)
        if e < 0:
            return self.inverse() ** (-e)
        result = Series2.one(self.caps)
        base = self
        while e:
            if e & 1:
                result = result * base
            base = base * base
            e >>= 1
        return result

    # -- analytic operations --------------------------------------------------
    def pow_rational(self, r) -> "Series2":
        """``self ** r`` for a unit with constant term 1 (Euler-operator recursion)."""
        r = rat(r)
        if self.c[0][0] != 1:
            raise SeriesError("pow_rational needs constant term 1")
        D1, D2 = self.caps
        f = self.c
        fnz = [(k, l, f[k][l]) for k in range(D1 + 1) for l in range(D2 + 1) if f[k][l] and (k or l)]
        g = [[ZERO] * (D2 + 1) for _ in range(D1 + 1)]
        g[0][0] = ONE
        for d in range(1, D1 + D2 + 1):
            for i in range(max(0, d - D2), min(d, D1) + 1):
                j = d - i
                s = ZERO
                for k, l, v in fnz:
                    if k <= i and l <= j:
                        s += v * (r * (k + l) - (d - k - l)) * g[i - k][j - l]
                g[i][j] = s / d
        return Series2._raw(self.caps, g)

    def log(self) -> "Series2":
        if self.c[0][0] != 1:
            raise SeriesError("log needs constant term 1")
        h = self.euler() * self.inverse()
        D1, D2 = self.caps
        return Series2._raw(self.caps, [[(h.c[i][j] / (i + j)) if (i or j) else ZERO
                                         for j in range(D2 + 1)] for i in range(D1 + 1)])

    def exp(self) -> "Series2":
        if self.c[0][0] != 0:
            raise SeriesError("exp needs zero constant term")
        D1, D2 = self.caps
        g = self.c
        gnz = [(k, l, (k + l) * g[k][l]) for k in range(D1 + 1) for l in range(D2 + 1) if g[k][l]]
        e = [[ZERO] * (D2 + 1) for _ in range(D1 + 1)]
        e[0][0] = ONE
        for d in range(1, D1 + D2 + 1):
            for i in range(max(0, d - D2), min(d, D1) + 1):
                j = d - i
                s = ZERO
                for k, l, v in gnz:
                    if k <= i and l <= j:
                        s += v * e[i - k][j - l]
                e[i][j] = s / d
        return Series2._raw(self.caps, e)

    def theta(self, axis: int) -> "Series2":
        """``z_a d/dz_a`` with ``axis`` in {1, 2}."""
        D1, D2 = self.caps
        if axis == 1:
            rows = [[i * v for v in self.c[i]] for i in range(D1 + 1)]
        elif axis == 2:
            rows = [[j * v for j, v in enumerate(self.c[i])] for i in range(D1 + 1)]
        else:
            raise SeriesError(f"bad axis {axis}")
        return Series2._raw(self.caps, rows)

    def euler(self) -> "Series2":
        D1, D2 = self.caps
        return Series2._raw(self.caps, [[(i + j) * self.c[i][j] for j in range(D2 + 1)] for i in range(D1 + 1)])

    def derivative(self, axis: int = 1) -> "Series2":
        """Plain ``d/dz_a``; the top row along ``axis`` becomes unknown and is dropped."""
        D1, D2 = self.caps
        if axis == 1:
            if D1 == 0:
                raise SeriesError("cannot differentiate a cap-0 series")
            return Series2._raw((D1 - 1, D2), [[(i + 1) * v for v in self.c[i + 1]] for i in range(D1)])
        if D2 == 0:
            raise SeriesError("cannot differentiate a cap-0 series")
        return Series2._raw((D1, D2 - 1), [[(j + 1) * self.c[i][j + 1] for j in range(D2)] for i in range(D1 + 1)])

    def shift(self, a: int, b: int = 0) -> "Series2":
        """Multiply by ``z1^a z2^b`` (a, b >= 0); the caps are kept."""
        D1, D2 = self.caps
        rows = [[self.c[i - a][j - b] if i >= a and j >= b else ZERO for j in range(D2 + 1)]
                for i in range(D1 + 1)]
        return Series2._raw(self.caps, rows)

    def divide_monomial(self, a: int, b: int = 0) -> "Series2":
        """Exact division by ``z1^a z2^b``; the caps shrink by ``(a, b)``."""
        D1, D2 = self.caps
        for i in range(D1 + 1):
            for j in range(D2 + 1):
                if (i < a or j < b) and self.c[i][j]:
                    raise SeriesError(f"not divisible by z1^{a} z2^{b}: term at {(i, j)}")
        return Series2._raw((D1 - a, D2 - b), [self.c[i][b:] for i in range(a, D1 + 1)])

    def scale_variables(self, s1=ONE, s2=ONE) -> "Series2":
        s1, s2 = rat(s1), rat(s2)
        D1, D2 = self.caps
        return Series2._raw(self.caps, [[self.c[i][j] * s1 ** i * s2 ** j for j in range(D2 + 1)]
                                        for i in range(D1 + 1)])

    # -- serialization --------------------------------------------------------
    def to_json(self) -> dict:
        return {"caps": list(self.caps),
                "terms": [[i, j, rat_str(v)] for (i, j), v in sorted(self.terms().items())]}

    @classmethod
    def from_json(cls, data: Mapping) -> "Series2":
        caps = tuple(data["caps"])
        return cls(caps, {(int(i), int(j)): rat(v) for i, j, v in data["terms"]})


def _pw(name: str, e: int) -> str:
    if e == 0:
        return ""
    return name if e == 1 else f"{name}^{e}"


def _common(a, b) -> tuple[int, int]:
    return (min(a[0], b[0]), min(a[1], b[1]))


# -- free functions mirroring the operation list -------------------------------

def pow_rational(f: Series2, r) -> Series2:
    return f.pow_rational(r)


def log_unit(f: Series2) -> Series2:
    return f.log()


def exp_nilconst(g: Series2) -> Series2:
    return g.exp()


def theta(f, axis: int):
    return f.theta(axis)


def substitute(f: Series2, g1: Series2, g2: Series2 | None = None) -> Series2:
    """``f(g1, g2)``.

    ``g1, g2`` must have zero constant term.  When ``g_a`` is divisible by the
    a-th variable (the mirror-map situation) the result is exact on the full
    common rectangle; otherwise it is exact up to total degree
    ``min(f.caps)``.  ``f``'s caps must cover the output caps.
    """
    if g2 is None:
        g2 = Series2(g1.caps)
    if g1.c[0][0] != 0 or g2.c[0][0] != 0:
        raise SeriesError("substitute: arguments must have zero constant term")
    caps = _common(g1.caps, g2.caps)
    g1, g2 = g1.truncate(caps), g2.truncate(caps)
    F1, F2 = f.caps
    # z1^i with i > caps total degree cannot contribute
    top1 = min(F1, caps[0] + caps[1])
    top2 = min(F2, caps[0] + caps[1])
    result = Series2(caps)
    for i in range(top1, -1, -1):
        inner = Series2(caps)
        for j in range(top2, -1, -1):
            inner = inner * g2 + f.c[i][j] if j <= F2 else inner
        result = result * g1 + inner
    return result


def invert_map(u1: Series2, u2: Series2) -> tuple[Series2, Series2]:
    """Invert ``(z1, z2) -> (q1, q2) = (z1 u1(z), z2 u2(z))``.

    Returns units ``v1, v2`` with ``z_a = q_a v_a(q)``.  Newton iteration on
    relative corrections ``v_a -> v_a (1 + e_a)``; the correct total degree
    roughly doubles per step, so early steps run on small truncations.
    """
    if u1.c[0][0] == 0 or u2.c[0][0] == 0:
        raise SeriesError("invert_map needs unit series")
    caps = _common(u1.caps, u2.caps)
    u = (u1.truncate(caps), u2.truncate(caps))
    du = {(a, b): u[a].theta(b + 1) for a in (0, 1) for b in (0, 1)}
    v = [Series2.constant(ONE / u[0].c[0][0], (0, 0)), Series2.constant(ONE / u[1].c[0][0], (0, 0))]
    full = caps[0] + caps[1]
    prec = 0
    while prec < full:
        prec = min(2 * prec + 1, full)
        cc = (min(caps[0], prec), min(caps[1], prec))
        v = [x.pad(cc) for x in v]
        z1 = Series2.monomial(1, 0, cc) * v[0]
        z2 = Series2.monomial(0, 1, cc) * v[1]
        U = [substitute(x.truncate(cc), z1, z2) for x in u]
        M = {k: substitute(x.truncate(cc), z1, z2) for k, x in du.items()}
        M[0, 0] = M[0, 0] + U[0]
        M[1, 1] = M[1, 1] + U[1]
        R = [v[0].inverse() - U[0], v[1].inverse() - U[1]]
        det_inv = (M[0, 0] * M[1, 1] - M[0, 1] * M[1, 0]).inverse()
        e1 = (R[0] * M[1, 1] - M[0, 1] * R[1]) * det_inv
        e2 = (M[0, 0] * R[1] - M[1, 0] * R[0]) * det_inv
        v = [v[0] + v[0] * e1, v[1] + v[1] * e2]
    return v[0].pad(caps), v[1].pad(caps)


class LogSeries:
    """``sum_{p,q} S_{p,q}(z1, z2) (log z1)^p (log z2)^q``."""

    __slots__ = ("parts", "caps")

    def __init__(self, parts: Mapping[tuple[int, int], Series2]):
        if not parts:
            raise SeriesError("LogSeries needs at least one part")
        caps = None
        for s in parts.values():
            caps = s.caps if caps is None else _common(caps, s.caps)
        self.caps = caps
        self.parts = {k: v.truncate(caps) for k, v in parts.items() if not v.is_zero()}
        if not self.parts:
            self.parts = {(0, 0): Series2(caps)}

    @classmethod
    def lift(cls, s: Series2, logs: tuple[int, int] = (0, 0)) -> "LogSeries":
        return cls({logs: s})

    @classmethod
    def log_var(cls, axis: int, caps) -> "LogSeries":
        key = (1, 0) if axis == 1 else (0, 1)
        return cls({key: Series2.one(caps)})

    def part(self, p: int, q: int) -> Series2:
        return self.parts.get((p, q), Series2(self.caps))

    @property
    def logdeg(self) -> tuple[int, int]:
        return (max(p for p, _ in self.parts), max(q for _, q in self.parts))

    def is_log_free(self) -> bool:
        return all(k == (0, 0) for k in self.parts)

    def __add__(self, other):
        other = _as_log(other, self.caps)
        keys = set(self.parts) | set(other.parts)
        return LogSeries({k: self.part(*k) + other.part(*k) for k in keys})

    __radd__ = __add__

    def __neg__(self):
        return LogSeries({k: -v for k, v in self.parts.items()})

    def __sub__(self, other):
        return self + (-_as_log(other, self.caps))

    def __rsub__(self, other):
        return _as_log(other, self.caps) - self

    def __mul__(self, other):
        if isinstance(other, (Series2, int, Rat, Fraction)):
            return LogSeries({k: v * other for k, v in self.parts.items()})
        other = _as_log(other, self.caps)
        out: dict = {}
        for (p, q), a in self.parts.items():
            for (r, s), b in other.parts.items():
                key = (p + r, q + s)
                out[key] = out[key] + a * b if key in out else a * b
        return LogSeries(out)

    __rmul__ = __mul__

    def theta(self, axis: int) -> "LogSeries":
        out: dict = {}

        def put(k, v):
            out[k] = out[k] + v if k in out else v

        for (p, q), s in self.parts.items():
            put((p, q), s.theta(axis))
            if axis == 1 and p:
                put((p - 1, q), s.scale(p))
            if axis == 2 and q:
                put((p, q - 1), s.scale(q))
        return LogSeries(out)

    def __eq__(self, other):
        if not isinstance(other, LogSeries):
            return NotImplemented
        keys = set(self.parts) | set(other.parts)
        return all(self.part(*k) == other.part(*k) for k in keys)

    def __repr__(self):
        return "LogSeries(" + ", ".join(f"{k}: {v.to_text(4)}" for k, v in sorted(self.parts.items())) + ")"

    def to_json(self) -> dict:
        return {"caps": list(self.caps),
                "parts": [{"log_powers": list(k), "series": v.to_json()} for k, v in sorted(self.parts.items())]}


def _as_log(x, caps) -> LogSeries:
    if isinstance(x, LogSeries):
        return x
    if isinstance(x, Series2):
        return LogSeries.lift(x)
    return LogSeries.lift(Series2.constant(rat(x), caps))


class QExp:
    """Laurent q-series ``sum_e c_e q^(e/b)`` known for ``min_exp <= e <= cap``.

    ``weight`` is metadata: an int, ``"mixed"`` or ``None``.
    """

    __slots__ = ("base_den", "min_exp", "coeffs", "weight")

    def __init__(self, coeffs: Sequence, min_exp: int = 0, base_den: int = 1, weight=None):
        if base_den < 1:
            raise SeriesError("base denominator must be positive")
        self.base_den = int(base_den)
        self.min_exp = int(min_exp)
        self.coeffs = tuple(rat(v) for v in coeffs)
        if not self.coeffs:
            raise SeriesError("QExp needs at least one known coefficient")
        self.weight = weight

    @property
    def cap(self) -> int:
        """Largest known exponent numerator (inclusive)."""
        return self.min_exp + len(self.coeffs) - 1

    @property
    def cap_value(self) -> Fraction:
        return Fraction(self.cap, self.base_den)

    @classmethod
    def from_dict(cls, terms: Mapping, cap: int, base_den: int = 1, weight=None, min_exp: int | None = None):
        if min_exp is None:
            min_exp = min([e for e, v in terms.items() if v] or [0])
        return cls([terms.get(e, ZERO) for e in range(min_exp, cap + 1)], min_exp, base_den, weight)

    @classmethod
    def from_series(cls, s: Series2, weight=None, shift: int = 0, base_den: int = 1) -> "QExp":
        if s.caps[1] != 0:
            raise SeriesError("from_series expects a univariate series")
        return cls(s.row(0), shift, base_den, weight)

    @classmethod
    def constant(cls, value, cap: int, weight=None) -> "QExp":
        return cls([value] + [ZERO] * cap, 0, 1, weight)

    def __getitem__(self, e) -> mpq:
        """Coefficient of ``q^e``; ``e`` may be an int or a Fraction in units of 1."""
        num = Fraction(e) * self.base_den
        if num.denominator != 1:
            return ZERO
        k = int(num) - self.min_exp
        if int(num) > self.cap:
            raise IndexError(f"exponent {e} beyond cap {self.cap_value}")
        return self.coeffs[k] if k >= 0 else ZERO

    def terms(self) -> dict:
        return {Fraction(self.min_exp + k, self.base_den): v for k, v in enumerate(self.coeffs) if v}

    def with_base(self, b: int) -> "QExp":
        if b % self.base_den:
            raise SeriesError(f"cannot rebase {self.base_den} to {b}")
        m = b // self.base_den
        if m == 1:
            return self
        out = [ZERO] * ((len(self.coeffs) - 1) * m + 1)
        for k, v in enumerate(self.coeffs):
            out[k * m] = v
        return QExp(out, self.min_exp * m, b, self.weight)

    def _align(self, other: "QExp"):
        from math import lcm
        b = lcm(self.base_den, other.base_den)
        return self.with_base(b), other.with_base(b), b

    def normalized(self) -> "QExp":
        """Drop leading zeros (keeping at least one coefficient)."""
        k = 0
        while k < len(self.coeffs) - 1 and self.coeffs[k] == 0:
            k += 1
        return QExp(self.coeffs[k:], self.min_exp + k, self.base_den, self.weight)

    def valuation(self) -> int | None:
        for k, v in enumerate(self.coeffs):
            if v:
                return self.min_exp + k
        return None

    def truncate(self, cap: int) -> "QExp":
        if cap > self.cap:
            raise SeriesError("cannot extend a QExp")
        return QExp(self.coeffs[: max(1, cap - self.min_exp + 1)], self.min_exp, self.base_den, self.weight)

    def __add__(self, other):
        if not isinstance(other, QExp):
            other = QExp.constant(rat(other), max(self.cap, 0) // self.base_den + 1).with_base(self.base_den)
        a, b, base = self._align(other)
        lo = min(a.min_exp, b.min_exp)
        hi = min(a.cap, b.cap)
        out = [a._at(e) + b._at(e) for e in range(lo, hi + 1)]
        w = self.weight if self.weight == other.weight else "mixed"
        return QExp(out, lo, base, w)

    __radd__ = __add__

    def _at(self, e: int) -> mpq:
        k = e - self.min_exp
        return self.coeffs[k] if 0 <= k < len(self.coeffs) else ZERO

    def __neg__(self):
        return QExp([-v for v in self.coeffs], self.min_exp, self.base_den, self.weight)

    def __sub__(self, other):
        return self + (-other if isinstance(other, QExp) else -rat(other))

    def __rsub__(self, other):
        return (-self) + other

    def scale(self, k) -> "QExp":
        k = rat(k)
        return QExp([k * v for v in self.coeffs], self.min_exp, self.base_den, self.weight)

    def __mul__(self, other):
        if not isinstance(other, QExp):
            return self.scale(other)
        a, b, base = self._align(other)
        a, b = a.normalized(), b.normalized()
        lo = a.min_exp + b.min_exp
        hi = min(a.cap + b.min_exp, b.cap + a.min_exp)
        n = hi - lo + 1
        if n <= 0:
            raise SeriesError("product has no known coefficients")
        out = [ZERO] * n
        for i, x in enumerate(a.coeffs[:n]):
            if x:
                for j, y in enumerate(b.coeffs[: n - i]):
                    out[i + j] += x * y
        w = None
        if isinstance(a.weight, int) and isinstance(b.weight, int):
            w = a.weight + b.weight
        return QExp(out, lo, base, w)

    __rmul__ = __mul__

    def inverse(self) -> "QExp":
        a = self.normalized()
        if a.coeffs[0] == 0:
            raise SeriesError("inverse of a zero series")
        s = Series2.univariate(a.coeffs).inverse()
        w = -a.weight if isinstance(a.weight, int) else a.weight
        return QExp(s.row(0), -a.min_exp, a.base_den, w).truncate(-a.min_exp + len(a.coeffs) - 1)

    def __truediv__(self, other):
        if isinstance(other, QExp):
            return self * other.inverse()
        return self.scale(ONE / rat(other))

    def __pow__(self, e: int):
        e = int(e)
        if e < 0:
            return self.inverse() ** (-e)
        result = None
        base = self
        while e:
            if e & 1:
                result = base if result is None else result * base
            e >>= 1
            if e:
                base = base * base
        if result is None:
            return QExp.constant(ONE, max(self.cap - self.min_exp, 0) // self.base_den).with_base(self.base_den)
        return result

    def shift(self, k) -> "QExp":
        """Multiply by ``q^k`` (k a rational with denominator dividing the base)."""
        num = Fraction(k) * self.base_den
        if num.denominator != 1:
            from math import lcm
            b = lcm(self.base_den, Fraction(k).denominator)
            return self.with_base(b).shift(k)
        return QExp(self.coeffs, self.min_exp + int(num), self.base_den, self.weight)

    def theta(self) -> "QExp":
        """``q d/dq``."""
        b = self.base_den
        w = self.weight + 2 if isinstance(self.weight, int) else self.weight
        return QExp([Fraction(self.min_exp + k, b) * v for k, v in enumerate(self.coeffs)],
                    self.min_exp, b, w)

    def subs_power(self, m: int) -> "QExp":
        """``q -> q^m``."""
        out = [ZERO] * ((len(self.coeffs) - 1) * m + 1)
        for k, v in enumerate(self.coeffs):
            out[k * m] = v
        return QExp(out, self.min_exp * m, self.base_den, self.weight)

    def pow_rational(self, r) -> "QExp":
        """``self ** r`` for a series with integer exponents starting ``1 + O(q)``."""
        a = self.normalized()
        if a.min_exp != 0 or a.coeffs[0] != 1:
            raise SeriesError("pow_rational needs a series 1 + O(q)")
        s = Series2.univariate(a.coeffs).pow_rational(r)
        return QExp(s.row(0), 0, a.base_den, None)

    def to_series(self) -> Series2:
        if self.min_exp < 0:
            raise SeriesError("negative exponents")
        return Series2.univariate([ZERO] * self.min_exp + list(self.coeffs))

    def equal_to(self, other: "QExp", cap=None) -> bool:
        """Compare through ``q^cap`` (default: the common known range)."""
        a, b, base = self._align(other)
        hi = min(a.cap, b.cap) if cap is None else int(Fraction(cap) * base // 1)
        lo = min(a.min_exp, b.min_exp)
        return all(a._at(e) == b._at(e) for e in range(lo, hi + 1))

    def first_difference(self, other: "QExp"):
        a, b, base = self._align(other)
        for e in range(min(a.min_exp, b.min_exp), min(a.cap, b.cap) + 1):
            if a._at(e) != b._at(e):
                return Fraction(e, base)
        return None

    def _canonical(self) -> tuple:
        """``(base, min_exp, coeffs)`` over the smallest base that holds the terms and the cap."""
        a = self.normalized()
        b = a.base_den
        for m in sorted((d for d in range(2, b + 1) if b % d == 0), reverse=True):
            if a.min_exp % m == 0 and a.cap % m == 0 and all(v == 0 for k, v in enumerate(a.coeffs) if k % m):
                return (b // m, a.min_exp // m, a.coeffs[::m])
        return (b, a.min_exp, a.coeffs)

    def __eq__(self, other):
        if not isinstance(other, QExp):
            return NotImplemented
        return self._canonical() == other._canonical()

    def __hash__(self):
        return hash(self._canonical())

    def __repr__(self):
        return f"QExp({self.to_text(6)}, cap={self.cap_value})"

    def to_text(self, max_terms: int | None = None) -> str:
        parts = []
        for e, v in sorted(self.terms().items()):
            mono = "" if e == 0 else ("q" if e == 1 else f"q^{e}" if e.denominator == 1 else f"q^({e})")
            parts.append(rat_str(v) + ("*" + mono if mono else ""))
            if max_terms and len(parts) >= max_terms:
                parts.append("...")
                break
        return " + ".join(parts) if parts else "0"

    def to_json(self) -> dict:
        return {"base_den": self.base_den, "min_exp": self.min_exp, "cap": self.cap,
                "weight": self.weight,
                "terms": [[self.min_exp + k, rat_str(v)] for k, v in enumerate(self.coeffs) if v]}

    @classmethod
    def from_json(cls, data: Mapping) -> "QExp":
        terms = {int(e): rat(v) for e, v in data["terms"]}
        return cls.from_dict(terms, int(data["cap"]), int(data.get("base_den", 1)),
                             data.get("weight"), int(data["min_exp"]))


def qexp_sum(items: Iterable[QExp]) -> QExp:
    items = list(items)
    total = items[0]
    for x in items[1:]:
        total = total + x
    return total
