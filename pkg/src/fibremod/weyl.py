"""Operators in the shift algebra Q[z, theta] with theta_i z_i = z_i (theta_i + 1).

An operator is stored in normal form (all ``z`` to the left of all ``theta``)
as a map ``(alpha, beta) -> coefficient`` standing for ``z^alpha theta^beta``.
"""
from __future__ import annotations

import re
from dataclasses import dataclass, field
from itertools import product
from math import comb
from typing import Iterable, Mapping

from .series import LogSeries, Rat, Series2, SeriesError, ZERO, ONE, rat, rat_str

Key = tuple[tuple[int, ...], tuple[int, ...]]


class OperatorError(ValueError):
    pass


def _add_into(d: dict, k, v):
    if not v:
        return
    s = d.get(k, ZERO) + v
    if s:
        d[k] = s
    else:
        d.pop(k, None)


def _shift_theta_power(beta: tuple[int, ...], gamma: tuple[int, ...]) -> dict:
    """Expand ``prod_i (theta_i + gamma_i)^beta_i`` as ``{delta: coeff}``."""
    per_var = []
    for b, g in zip(beta, gamma):
        per_var.append([(k, comb(b, k) * (g ** (b - k))) for k in range(b + 1)])
    out: dict = {}
    for choice in product(*per_var):
        c = 1
        for _, v in choice:
            c *= v
        if c:
            key = tuple(k for k, _ in choice)
            out[key] = out.get(key, 0) + c
    return out


class ShiftOp:
    """Normal-form element of the shift algebra in ``h`` variables."""

    __slots__ = ("h", "terms")

    def __init__(self, h: int, terms: Mapping[Key, object] | None = None):
        self.h = int(h)
        clean: dict = {}
        for (a, b), v in (terms or {}).items():
            a, b = tuple(int(x) for x in a), tuple(int(x) for x in b)
            if len(a) != self.h or len(b) != self.h:
                raise OperatorError(f"exponent length mismatch for h={self.h}: {(a, b)}")
            if min(a + b, default=0) < 0:
                raise OperatorError(f"negative exponent {(a, b)}")
            _add_into(clean, (a, b), rat(v))
        self.terms = clean

    # -- constructors -----------------------------------------------------------
    @classmethod
    def const(cls, h: int, c) -> "ShiftOp":
        return cls(h, {((0,) * h, (0,) * h): c})

    @classmethod
    def z(cls, h: int, i: int) -> "ShiftOp":
        a = [0] * h
        a[i - 1] = 1
        return cls(h, {(tuple(a), (0,) * h): 1})

    @classmethod
    def theta(cls, h: int, i: int) -> "ShiftOp":
        b = [0] * h
        b[i - 1] = 1
        return cls(h, {((0,) * h, tuple(b)): 1})

    # -- arithmetic --------------------------------------------------------------
    def _check(self, other: "ShiftOp"):
        if not isinstance(other, ShiftOp):
            raise TypeError(f"expected ShiftOp, got {type(other).__name__}")
        if other.h != self.h:
            raise OperatorError(f"variable count mismatch: {self.h} vs {other.h}")

    def _lift(self, other) -> "ShiftOp":
        if isinstance(other, ShiftOp):
            self._check(other)
            return other
        return ShiftOp.const(self.h, other)

    def __add__(self, other):
        other = self._lift(other)
        out = dict(self.terms)
        for k, v in other.terms.items():
            _add_into(out, k, v)
        return ShiftOp(self.h, out)

    __radd__ = __add__

    def __neg__(self):
        return ShiftOp(self.h, {k: -v for k, v in self.terms.items()})

    def __sub__(self, other):
        return self + (-self._lift(other))

    def __rsub__(self, other):
        return self._lift(other) - self

    def __mul__(self, other):
        if not isinstance(other, ShiftOp):
            k = rat(other)
            return ShiftOp(self.h, {t: k * v for t, v in self.terms.items()})
        self._check(other)
        out: dict = {}
        for (a, b), x in self.terms.items():
            for (g, d), y in other.terms.items():
                alpha = tuple(p + q for p, q in zip(a, g))
                for delta, c in _shift_theta_power(b, g).items():
                    beta = tuple(p + q for p, q in zip(delta, d))
                    _add_into(out, (alpha, beta), x * y * c)
        return ShiftOp(self.h, out)

    def __rmul__(self, other):
        return self * other

    def __pow__(self, e: int):
        result = ShiftOp.const(self.h, 1)
        for _ in range(int(e)):
            result = result * self
        return result

    def __eq__(self, other):
        if not isinstance(other, ShiftOp):
            return NotImplemented
        return self.h == other.h and self.terms == other.terms

    def __hash__(self):
        return hash((self.h, frozenset(self.terms.items())))

    def is_zero(self) -> bool:
        return not self.terms

    # -- structure ---------------------------------------------------------------
    def z_degree(self) -> tuple[int, ...]:
        return tuple(max((a[i] for a, _ in self.terms), default=0) for i in range(self.h))

    def theta_degree(self) -> int:
        return max((sum(b) for _, b in self.terms), default=0)

    def by_z(self) -> dict:
        """Group as ``{alpha: {beta: coeff}}``."""
        out: dict = {}
        for (a, b), v in self.terms.items():
            out.setdefault(a, {})[b] = v
        return out

    def d_theta(self, axis: int) -> "ShiftOp":
        """Formal derivative with respect to ``theta_axis`` of the normal form."""
        i = axis - 1
        out: dict = {}
        for (a, b), v in self.terms.items():
            if b[i]:
                nb = list(b)
                nb[i] -= 1
                _add_into(out, (a, tuple(nb)), v * b[i])
        return ShiftOp(self.h, out)

    def substitute_theta(self, axis: int, value) -> "ShiftOp":
        """Replace ``theta_axis`` by a constant (valid on eigenfunctions of ``theta_axis``)."""
        i = axis - 1
        value = rat(value)
        out: dict = {}
        for (a, b), v in self.terms.items():
            nb = list(b)
            e = nb[i]
            nb[i] = 0
            _add_into(out, (a, tuple(nb)), v * value ** e)
        return ShiftOp(self.h, out)

    def drop_variable(self, axis: int) -> "ShiftOp":
        """Remove a variable that does not occur."""
        i = axis - 1
        out: dict = {}
        for (a, b), v in self.terms.items():
            if a[i] or b[i]:
                raise OperatorError(f"variable {axis} still occurs")
            _add_into(out, (a[:i] + a[i + 1:], b[:i] + b[i + 1:]), v)
        return ShiftOp(self.h - 1, out)

    def embed(self, h: int, positions: Iterable[int]) -> "ShiftOp":
        """Place this operator's variables at the given 1-based positions of an ``h``-variable algebra."""
        positions = list(positions)
        out: dict = {}
        for (a, b), v in self.terms.items():
            na, nb = [0] * h, [0] * h
            for src, dst in enumerate(positions):
                na[dst - 1], nb[dst - 1] = a[src], b[src]
            _add_into(out, (tuple(na), tuple(nb)), v)
        return ShiftOp(h, out)

    def normalized_scale(self) -> "ShiftOp":
        """Divide by the coefficient of the leading term (for comparison up to scale)."""
        if not self.terms:
            return self
        lead = min(self.terms, key=lambda k: (sum(k[0]), k[0], tuple(-x for x in k[1])))
        return self * (ONE / self.terms[lead])

    def equal_up_to_scale(self, other: "ShiftOp") -> bool:
        return self.normalized_scale() == other.normalized_scale()

    # -- text --------------------------------------------------------------------
    def __str__(self) -> str:
        return self.to_text()

    def __repr__(self) -> str:
        return f"ShiftOp(h={self.h}, {self.to_text()})"

    def to_text(self) -> str:
        if not self.terms:
            return "0"
        parts = []
        for (a, b) in sorted(self.terms, key=lambda k: (sum(k[0]), k[0], tuple(-x for x in k[1]))):
            v = self.terms[(a, b)]
            mono = [f"z{i + 1}" + (f"^{e}" if e > 1 else "") for i, e in enumerate(a) if e]
            mono += [f"T{i + 1}" + (f"^{e}" if e > 1 else "") for i, e in enumerate(b) if e]
            parts.append(rat_str(v) + (" * " + " ".join(mono) if mono else ""))
        return " + ".join(parts)

    @classmethod
    def parse(cls, text: str, h: int) -> "ShiftOp":
        return _Parser(text, h).parse()

    # -- action --------------------------------------------------------------------
    def apply(self, f):
        """Act on a ``Series2`` or ``LogSeries`` (two variables at most)."""
        if self.h > 2:
            raise OperatorError("apply on Series2 supports at most two variables")
        is_log = isinstance(f, LogSeries)
        if not is_log and not isinstance(f, Series2):
            raise TypeError("apply expects Series2 or LogSeries")
        caps = f.caps
        zd = self.z_degree() + (0,) * (2 - self.h)
        if zd[0] > caps[0] or zd[1] > caps[1]:
            raise SeriesError(f"caps {caps} too small for operator z-degree {zd}: truncation loss")
        cache: dict = {(0, 0): f}

        def theta_pow(b):
            if b not in cache:
                if b[1] > 0:
                    cache[b] = theta_pow((b[0], b[1] - 1)).theta(2)
                else:
                    cache[b] = theta_pow((b[0] - 1, 0)).theta(1)
            return cache[b]

        result = None
        for (a, b), v in self.terms.items():
            a2 = a + (0,) * (2 - self.h)
            b2 = b + (0,) * (2 - self.h)
            g = theta_pow(b2)
            term = _shift_any(g, a2) * v
            result = term if result is None else result + term
        if result is None:
            return f * 0
        return result

    def apply_dense(self, coeffs: Mapping[tuple[int, ...], object], caps: tuple[int, ...]) -> dict:
        """Act on a holomorphic series in ``h`` variables given as ``{exponent: coeff}``.

        Returns the non-zero coefficients of the image inside the box ``caps``.
        """
        out: dict = {}
        grouped = self.by_z()
        for d in product(*(range(c + 1) for c in caps)):
            s = ZERO
            for a, poly in grouped.items():
                src = tuple(x - y for x, y in zip(d, a))
                if min(src) < 0:
                    continue
                c = coeffs.get(src)
                if not c:
                    continue
                s += c * _eval_theta_poly(poly, src)
            if s:
                out[d] = s
        return out

    def theta_poly_at(self, alpha: tuple[int, ...], point: tuple) -> Rat:
        """Evaluate the theta-polynomial attached to ``z^alpha`` at ``theta = point``."""
        return _eval_theta_poly(self.by_z().get(tuple(alpha), {}), point)


def _eval_theta_poly(poly: Mapping, point) -> Rat:
    s = ZERO
    for b, v in poly.items():
        t = v
        for e, x in zip(b, point):
            if e:
                t = t * rat(x) ** e
        s += t
    return s


def _shift_any(g, a):
    if a == (0, 0):
        return g
    if isinstance(g, LogSeries):
        return LogSeries({k: s.shift(*a) for k, s in g.parts.items()})
    return g.shift(*a)


@dataclass
class AnnihilationReport:
    ok: bool
    caps: tuple
    first_residual: tuple | None = None
    residual_value: object = None

    def __bool__(self):
        return self.ok


def annihilates(op: ShiftOp, f, caps=None) -> AnnihilationReport:
    """Check ``op f == 0`` up to ``caps`` and locate the first non-zero residual."""
    if isinstance(f, (Series2, LogSeries)):
        if caps is not None:
            f = f.truncate(caps) if isinstance(f, Series2) else LogSeries({k: v.truncate(caps) for k, v in f.parts.items()})
        res = op.apply(f)
        parts = res.parts if isinstance(res, LogSeries) else {(0, 0): res}
        worst = None
        for logs, s in sorted(parts.items()):
            pos = s.first_nonzero()
            if pos is not None and (worst is None or sum(pos) < sum(worst[1])):
                worst = (logs, pos, s[pos])
        if worst is None:
            return AnnihilationReport(True, f.caps)
        return AnnihilationReport(False, f.caps, (worst[0], worst[1]), worst[2])
    coeffs, box = f
    res = op.apply_dense(coeffs, box)
    if not res:
        return AnnihilationReport(True, tuple(box))
    first = min(res, key=lambda d: (sum(d), d))
    return AnnihilationReport(False, tuple(box), first, res[first])


def make_L1(n: int, a0, a1, a2) -> ShiftOp:
    """``theta1^2 - n theta1 theta2 - a0 z1 (theta1 + a1)(theta1 + a2)``."""
    t1, t2, z1 = ShiftOp.theta(2, 1), ShiftOp.theta(2, 2), ShiftOp.z(2, 1)
    return t1 * t1 - t1 * t2 * n - z1 * (t1 + rat(a1)) * (t1 + rat(a2)) * rat(a0)


def make_L2(n: int) -> ShiftOp:
    """``theta2^n - (-1)^n z2 prod_{k<n} (n theta2 - theta1 + k)``."""
    t1, t2, z2 = ShiftOp.theta(2, 1), ShiftOp.theta(2, 2), ShiftOp.z(2, 2)
    prod_ = ShiftOp.const(2, 1)
    for k in range(n):
        prod_ = prod_ * (t2 * n - t1 + k)
    return t2 ** n - z2 * prod_ * ((-1) ** n)


def make_gauss(a0, a1, a2, m=0) -> ShiftOp:
    """Univariate ``theta^2 - a0 z (theta + a1)(theta + a2) - m theta``."""
    t, z = ShiftOp.theta(1, 1), ShiftOp.z(1, 1)
    return t * t - z * (t + rat(a1)) * (t + rat(a2)) * rat(a0) - t * rat(m)


def restrict(op: ShiftOp, axis: int | Iterable[int]) -> ShiftOp:
    """Normal-form projection to ``z_k = 0``.

    Keeps the terms free of both ``z_k`` and ``theta_k``; the variable count is
    preserved.  ``axis`` may be a single index or several.
    """
    axes = [axis] if isinstance(axis, int) else list(axis)
    idx = [k - 1 for k in axes]
    return ShiftOp(op.h, {(a, b): v for (a, b), v in op.terms.items()
                          if all(a[i] == 0 and b[i] == 0 for i in idx)})


def univariate_holomorphic(op: ShiftOp, order: int) -> list:
    """Power-series solution ``1 + c1 z + ...`` of a one-variable operator.

    Requires the theta-polynomial of the ``z^0`` part to vanish at 0 only
    (indicial root 0) and be non-zero at positive integers.
    """
    if op.h != 1:
        raise OperatorError("univariate_holomorphic needs h = 1")
    grouped = {a[0]: poly for a, poly in op.by_z().items()}
    lead = grouped.get(0, {})
    if _eval_theta_poly(lead, (0,)) != 0:
        raise OperatorError("0 is not an indicial root")
    c = [ONE]
    for m in range(1, order + 1):
        q0 = _eval_theta_poly(lead, (m,))
        if q0 == 0:
            raise OperatorError(f"resonant indicial root at {m}")
        s = ZERO
        for a, poly in grouped.items():
            if a and a <= m:
                s += _eval_theta_poly(poly, (m - a,)) * c[m - a]
        c.append(-s / q0)
    return c


def holomorphic_solution(generators: list[ShiftOp], caps: tuple[int, ...]) -> dict:
    """Solve for the normalized holomorphic solution of a hypergeometric-type system.

    Coefficients are fixed one exponent at a time from a generator whose
    ``z^0`` theta-polynomial is non-zero there; every other generator is then
    checked.  Raises when the system is inconsistent or under-determined.
    """
    h = generators[0].h
    grouped = [g.by_z() for g in generators]
    zero = (0,) * h
    coeffs: dict = {zero: ONE}
    for d in sorted(product(*(range(c + 1) for c in caps)), key=lambda t: (sum(t), t)):
        if d == zero:
            continue
        value = None
        pending = []
        for gi, grp in enumerate(grouped):
            lead = _eval_theta_poly(grp.get(zero, {}), d)
            rest = ZERO
            for a, poly in grp.items():
                if a == zero:
                    continue
                src = tuple(x - y for x, y in zip(d, a))
                if min(src) < 0:
                    continue
                c = coeffs.get(src)
                if c:
                    rest += c * _eval_theta_poly(poly, src)
            if lead != 0 and value is None:
                value = -rest / lead
            else:
                pending.append((gi, lead, rest))
        if value is None:
            if any(r != 0 for _, _, r in pending):
                raise OperatorError(f"inconsistent system at exponent {d}")
            raise OperatorError(f"under-determined system at exponent {d}")
        for gi, lead, rest in pending:
            if lead * value + rest != 0:
                raise OperatorError(f"generator {gi} inconsistent at exponent {d}")
        if value:
            coeffs[d] = value
    return coeffs


# -- parser --------------------------------------------------------------------------

_TOKEN = re.compile(r"\s*(?:(\d+(?:/\d+)?)|([A-Za-zθ]+)(\d+)?|(\*\*|[-+*/^()]))")


class _Parser:
    """Recursive-descent parser for operator text.

    Accepts ``z1``, ``T1`` / ``theta1`` / ``θ1``, rational literals, ``+ - * / ^``,
    parentheses and juxtaposition as multiplication.  Division is by constants only.
    """

    def __init__(self, text: str, h: int):
        self.h = h
        self.toks = []
        pos = 0
        text = text.strip()
        while pos < len(text):
            m = _TOKEN.match(text, pos)
            if not m or m.end() == pos:
                raise OperatorError(f"cannot parse operator text at {text[pos:pos + 10]!r}")
            pos = m.end()
            if m.group(1):
                self.toks.append(("num", m.group(1)))
            elif m.group(2):
                name, idx = m.group(2), m.group(3)
                self.toks.append(("var", name, int(idx) if idx else 1))
            else:
                op = m.group(4)
                self.toks.append(("op", "^" if op == "**" else op))
            while pos < len(text) and text[pos].isspace():
                pos += 1
        self.i = 0

    def peek(self):
        return self.toks[self.i] if self.i < len(self.toks) else None

    def take(self):
        t = self.peek()
        self.i += 1
        return t

    def parse(self) -> ShiftOp:
        e = self.expr()
        if self.peek() is not None:
            raise OperatorError(f"trailing input near token {self.peek()}")
        return e

    def expr(self) -> ShiftOp:
        sign = 1
        t = self.peek()
        if t and t[0] == "op" and t[1] in "+-":
            self.take()
            sign = -1 if t[1] == "-" else 1
        acc = self.term() * sign
        while (t := self.peek()) and t[0] == "op" and t[1] in "+-":
            self.take()
            rhs = self.term()
            acc = acc + rhs if t[1] == "+" else acc - rhs
        return acc

    def term(self) -> ShiftOp:
        acc = self.power()
        while True:
            t = self.peek()
            if t is None:
                break
            if t[0] == "op" and t[1] == "*":
                self.take()
                acc = acc * self.power()
            elif t[0] == "op" and t[1] == "/":
                self.take()
                d = self.power()
                if set(d.terms) - {((0,) * self.h, (0,) * self.h)}:
                    raise OperatorError("division by a non-constant operator")
                acc = acc * (ONE / d.terms[((0,) * self.h, (0,) * self.h)])
            elif t[0] in ("num", "var") or (t[0] == "op" and t[1] == "("):
                acc = acc * self.power()
            else:
                break
        return acc

    def power(self) -> ShiftOp:
        base = self.atom()
        t = self.peek()
        if t and t[0] == "op" and t[1] == "^":
            self.take()
            e = self.take()
            if not e or e[0] != "num" or "/" in e[1]:
                raise OperatorError("exponent must be a non-negative integer")
            return base ** int(e[1])
        return base

    def atom(self) -> ShiftOp:
        t = self.take()
        if t is None:
            raise OperatorError("unexpected end of operator text")
        if t[0] == "num":
            return ShiftOp.const(self.h, rat(t[1]))
        if t[0] == "var":
            name, idx = t[1], t[2]
            if not 1 <= idx <= self.h:
                raise OperatorError(f"variable index {idx} out of range for h={self.h}")
            if name == "z":
                return ShiftOp.z(self.h, idx)
            if name in ("T", "theta", "θ", "t"):
                return ShiftOp.theta(self.h, idx)
            raise OperatorError(f"unknown symbol {name!r}")
        if t == ("op", "("):
            e = self.expr()
            if self.take() != ("op", ")"):
                raise OperatorError("missing closing parenthesis")
            return e
        if t == ("op", "-"):
            return -self.power()
        raise OperatorError(f"unexpected token {t}")


@dataclass(frozen=True)
class PFSystemPreset:
    """A Picard-Fuchs system with its printed and corrected limit operators."""

    name: str
    h: int
    generators: tuple[ShiftOp, ...]
    limits: tuple = ()  # entries: (generator index, axis kept, printed op, corrected op or None)
    params: tuple | None = None
    description: str = ""
    notes: tuple = field(default_factory=tuple)
