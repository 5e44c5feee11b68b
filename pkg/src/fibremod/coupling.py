"""Four-point couplings of the two-parameter fourfold family and what follows from them.

The couplings ``W^(i,j) = int Omega d1^i d2^j Omega`` (``i + j = 4``) are handled
through their log-normalized versions ``w(i,j) = z1^i z2^j W^(i,j)``, which are
holomorphic at ``z = 0``.  A theta-operator ``z^alpha theta^beta`` annihilating
``Omega`` pairs with ``Omega`` to ``sum_m S(beta, m) z^alpha w(m)`` (Stirling
numbers of the second kind), with ``w(m) = 0`` for ``|m| < 4`` and ``|m| = 5``
reduced to first derivatives of the ``|m| = 4`` functions.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from itertools import product

from sympy import QQ, sympify
from sympy.polys.fields import field as _sympy_field

from .modular import FitResult, fit, solve_exact
from .periods import ModelParams, PeriodSet, wronskian
from .mirror import MirrorMap
from .series import ONE, ZERO, Series2, SeriesError, rat, rat_str
from .weyl import ShiftOp


class CouplingError(ValueError):
    pass


YUK_INDICES = ((4, 0), (3, 1), (2, 2), (1, 3), (0, 4))
# tau-coupling components, listed by their index word
COMPONENTS = ((1, 1, 1, 1), (1, 1, 1, 2), (1, 1, 2, 2), (1, 2, 2, 2), (2, 2, 2, 2))


def word_to_index(word) -> tuple[int, int]:
    return (sum(1 for a in word if a == 1), sum(1 for a in word if a == 2))


# -- rational functions in (z1, z2) ------------------------------------------------------

_RF, _Z1, _Z2 = _sympy_field("z1,z2", QQ)


class RationalFn2:
    """Reduced quotient of polynomials over Q in ``z1, z2``."""

    __slots__ = ("value",)

    def __init__(self, value):
        if isinstance(value, RationalFn2):
            value = value.value
        elif not hasattr(value, "numer"):
            value = _RF(rat(value))
        self.value = value

    @classmethod
    def z(cls, i: int) -> "RationalFn2":
        return cls(_Z1 if i == 1 else _Z2)

    @classmethod
    def parse(cls, text: str) -> "RationalFn2":
        return cls(_RF.from_expr(sympify(text.replace("^", "**"))))

    def _o(self, other):
        return other.value if isinstance(other, RationalFn2) else _RF(rat(other))

    def __add__(self, o):
        return RationalFn2(self.value + self._o(o))

    __radd__ = __add__

    def __sub__(self, o):
        return RationalFn2(self.value - self._o(o))

    def __rsub__(self, o):
        return RationalFn2(self._o(o) - self.value)

    def __mul__(self, o):
        return RationalFn2(self.value * self._o(o))

    __rmul__ = __mul__

    def __truediv__(self, o):
        return RationalFn2(self.value / self._o(o))

    def __rtruediv__(self, o):
        return RationalFn2(self._o(o) / self.value)

    def __neg__(self):
        return RationalFn2(-self.value)

    def __pow__(self, e: int):
        return RationalFn2(self.value ** e)

    def __eq__(self, o):
        if isinstance(o, RationalFn2):
            return self.value == o.value
        return NotImplemented

    def __hash__(self):
        return hash(self.value)

    @property
    def numerator(self) -> dict:
        return {e: rat(c) for e, c in self.value.numer.terms()}

    @property
    def denominator(self) -> dict:
        return {e: rat(c) for e, c in self.value.denom.terms()}

    def to_text(self) -> str:
        return str(self.value.as_expr()).replace("**", "^")

    __str__ = to_text

    def series(self, caps, shift=(0, 0)) -> Series2:
        """Taylor expansion of ``z1^s1 z2^s2 * f`` inside ``caps``."""
        den = self.denominator
        mu = (min(e[0] for e in den), min(e[1] for e in den))
        if (mu[0], mu[1]) not in den:
            raise SeriesError("denominator is not a monomial times a unit at the origin")
        off = (shift[0] - mu[0], shift[1] - mu[1])
        num = {}
        for e, c in self.numerator.items():
            k = (e[0] + off[0], e[1] + off[1])
            if min(k) < 0:
                raise SeriesError(f"pole of order {(-k[0], -k[1])} survives the prefactor z^{tuple(shift)}")
            num[k] = c
        d = {(e[0] - mu[0], e[1] - mu[1]): c for e, c in den.items()}
        return Series2.from_polynomial(num, caps) / Series2.from_polynomial(d, caps)


# -- the printed main example -----------------------------------------------------------------

@dataclass
class YukawaSet:
    """The five couplings ``W^(i,j)`` as rational functions (keys ``(i, j)``)."""

    functions: dict
    label: str = ""

    def __getitem__(self, ij) -> RationalFn2:
        return self.functions[tuple(ij)]

    def normalized_series(self, caps) -> dict:
        """``w(i,j) = z1^i z2^j W^(i,j)`` expanded to ``caps``."""
        return {m: self.functions[m].series(caps, m) for m in YUK_INDICES}

    def replace(self, m, f: RationalFn2, label: str | None = None) -> "YukawaSet":
        funcs = dict(self.functions)
        funcs[tuple(m)] = f
        return YukawaSet(funcs, self.label if label is None else label)

    def perturb(self, m, monomial, delta) -> "YukawaSet":
        """Add ``delta`` to the coefficient of ``z^monomial`` in the numerator of ``W^m``."""
        f = self.functions[tuple(m)]
        den = RationalFn2(_RF(f.value.denom))
        bump = RationalFn2(rat(delta)) * RationalFn2.z(1) ** monomial[0] * RationalFn2.z(2) ** monomial[1]
        return self.replace(m, f + bump / den, f"{self.label}+perturbed")

    def to_json(self, caps=None) -> dict:
        out = {"label": self.label,
               "functions": {f"W({i},{j})": self.functions[(i, j)].to_text() for i, j in YUK_INDICES}}
        if caps is not None:
            out["normalized_series"] = {f"w({i},{j})": s.to_json()
                                        for (i, j), s in self.normalized_series(caps).items()}
        return out


def main_example_deltas() -> tuple[RationalFn2, RationalFn2]:
    z1, z2 = RationalFn2.z(1), RationalFn2.z(2)
    d1 = -1 + 1728 * z1 - 1119744 * z1 ** 2 + 322486272 * z1 ** 3 + 34828517376 * z1 ** 4 * (-1 + 256 * z2)
    d2 = -1 + 256 * z2
    return d1, d2


def main_example_yukawa(corrected: bool = False) -> YukawaSet:
    """The couplings of the elliptic fibration over P^3 (``n = 4``, ``a0 = 432``).

    With ``corrected=True`` the one entry that disagrees with the
    Picard-Fuchs derivation, ``W^(1,3)``, carries a ``z2^3`` pole instead of
    ``z2^2``; the other four agree with the derivation as given.
    """
    z1, z2 = RationalFn2.z(1), RationalFn2.z(2)
    d1, d2 = main_example_deltas()
    lin = -1 + 432 * z1
    w = {
        (4, 0): RationalFn2(-64) / (z1 ** 4 * d1),
        (3, 1): 16 * lin / (z1 ** 3 * z2 * d1),
        (2, 2): -4 * lin ** 2 / (z1 ** 2 * z2 ** 2 * d1),
        (1, 3): lin ** 3 / (z1 * z2 ** 2 * d1),
        (0, 4): 64 * (-1 + 1728 * z1 - 1119744 * z1 ** 2 + 322486272 * z1 ** 3) / (z2 ** 3 * d1 * d2),
    }
    if not corrected:
        return YukawaSet(w, "printed")
    w[(1, 3)] = lin ** 3 / (z1 * z2 ** 3 * d1)
    return YukawaSet(w, "corrected")


# -- Griffiths transversality ----------------------------------------------------------------

@dataclass(frozen=True)
class GriffithsRelation:
    """``W(target) = sum coeff * d_axis W(source)``."""

    target: tuple
    terms: tuple  # (coeff, axis, source)

    def to_text(self) -> str:
        def w(m):
            return "W(" + ",".join(map(str, m)) + ")"
        body = " + ".join(f"{rat_str(c)}*d{a}{w(s)}" for c, a, s in self.terms)
        return f"{w(self.target)} = {body}"


def _compositions(total: int, parts: int):
    if parts == 1:
        yield (total,)
        return
    for k in range(total, -1, -1):
        for rest in _compositions(total - k, parts - 1):
            yield (k,) + rest


def griffiths_relations(h: int) -> list[GriffithsRelation]:
    """Order-five couplings in terms of derivatives of order-four ones.

    Differentiating ``int Omega d^m Omega = 0`` (``|m| = 3``) and the order-four
    couplings gives ``W(j) = (1/2) sum_a j_a d_a W(j - e_a)`` for ``|j| = 5``.
    """
    if h not in (2, 3):
        raise CouplingError(f"relations are generated for 2 or 3 moduli, not {h}")
    rels = []
    for j in _compositions(5, h):
        terms = []
        for a in range(h):
            if j[a]:
                src = tuple(x - (1 if b == a else 0) for b, x in enumerate(j))
                terms.append((rat(j[a]) / 2, a + 1, src))
        rels.append(GriffithsRelation(j, tuple(terms)))
    return rels


# -- Picard-Fuchs constraints on the couplings -------------------------------------------------

@lru_cache(maxsize=None)
def stirling2(k: int, m: int) -> int:
    """Stirling numbers of the second kind: ``theta^k = sum_m S(k, m) z^m d^m``."""
    if k == m:
        return 1
    if m == 0 or m > k:
        return 0
    return m * stirling2(k - 1, m) + stirling2(k - 1, m - 1)


def pf_generators(params: ModelParams, max_order: int = 5) -> list[tuple[str, ShiftOp]]:
    """``theta^gamma L_k`` for every ``gamma`` keeping the theta-degree at most ``max_order``."""
    L1, L2 = params.operators()
    out = []
    for name, L in (("L1", L1), ("L2", L2)):
        room = max_order - L.theta_degree()
        for g in range(room + 1):
            for g1 in range(g, -1, -1):
                gamma = (g1, g - g1)
                op = (ShiftOp.theta(2, 1) ** gamma[0]) * (ShiftOp.theta(2, 2) ** gamma[1]) * L
                out.append((f"theta^{gamma} {name}", op))
    return out


@dataclass
class Constraint:
    """``sum_m ops[m] w(m) = 0`` over the five normalized couplings."""

    label: str
    ops: dict  # (i, j) -> ShiftOp

    def residual(self, w: dict) -> Series2:
        total = None
        for m, op in self.ops.items():
            if op.is_zero():
                continue
            term = op.apply(w[m])
            total = term if total is None else total + term
        return total if total is not None else next(iter(w.values())) * 0


def _reduce_pairing(op: ShiftOp, relations: dict) -> dict:
    """Pair ``op`` with ``Omega`` and express the result through ``w(i,j)``, ``i + j = 4``."""
    theta = (ShiftOp.theta(2, 1), ShiftOp.theta(2, 2))
    ops = {m: ShiftOp(2) for m in YUK_INDICES}
    for (alpha, beta), c in op.terms.items():
        za = ShiftOp(2, {(alpha, (0, 0)): 1})
        for m1 in range(beta[0] + 1):
            for m2 in range(beta[1] + 1):
                s = stirling2(beta[0], m1) * stirling2(beta[1], m2)
                if not s:
                    continue
                m = (m1, m2)
                deg = m1 + m2
                if deg < 4:
                    continue
                if deg == 4:
                    ops[m] = ops[m] + za * (c * s)
                elif deg == 5:
                    for coeff, axis, src in relations[m]:
                        # w(j) = (1/2) sum_a j_a (theta_a - j_a + 1) w(j - e_a)
                        shifted = theta[axis - 1] - (m[axis - 1] - 1)
                        ops[src] = ops[src] + za * shifted * (c * s * coeff)
                else:
                    raise CouplingError("operators of theta-degree above five are not reduced")
    return ops


@lru_cache(maxsize=16)
def constraint_system(params: ModelParams, max_order: int = 5) -> tuple[Constraint, ...]:
    rels = {r.target: r.terms for r in griffiths_relations(2)}
    out = []
    for label, op in pf_generators(params, max_order):
        ops = _reduce_pairing(op, rels)
        if any(not o.is_zero() for o in ops.values()):
            out.append(Constraint(label, ops))
    return tuple(out)


@dataclass
class ConstraintReport:
    ok: bool
    caps: tuple
    residuals: dict  # label -> first non-zero monomial or None
    first_failure: tuple | None = None

    def __bool__(self):
        return self.ok

    def to_json(self):
        return {"ok": self.ok, "caps": list(self.caps), "first_failure": self.first_failure,
                "residuals": {k: (list(v[0]) + [rat_str(v[1])] if v else None)
                              for k, v in self.residuals.items()}}


def _first_by_degree(s: Series2):
    best = None
    for (i, j), v in s.terms().items():
        if best is None or (i + j, i) < (best[0][0] + best[0][1], best[0][0]):
            best = ((i, j), v)
    return best


def verify_pf_constraints(Y, params: ModelParams, caps=(10, 3)) -> ConstraintReport:
    """Check every pairing constraint on ``Y`` (a YukawaSet or a dict of normalized series).

    Constraints come from ``theta^gamma L_k`` of theta-degree at most five;
    the degree-five couplings are eliminated with the Griffiths relations.
    """
    w = Y.normalized_series(caps) if isinstance(Y, YukawaSet) else {m: Y[m].truncate(caps) for m in YUK_INDICES}
    residuals, first = {}, None
    for con in constraint_system(params):
        r = _first_by_degree(con.residual(w))
        residuals[con.label] = r
        if r and (first is None or sum(r[0]) < sum(first[1])):
            first = (con.label, r[0])
    return ConstraintReport(first is None, tuple(caps), residuals, first)


# -- order-by-order derivation ---------------------------------------------------------------

@dataclass(frozen=True)
class IntersectionData:
    """Classical data of the mirror: quartic numbers, the H^{2,2} basis and its pairing."""

    quartic: dict  # sorted index word -> int J_a J_b J_c J_d
    gamma_names: tuple
    gamma_basis: dict  # name -> {(a, b): coefficient of J_a J_b}
    pairing_inverse: tuple  # (eta^(2))^-1

    def c4(self, word) -> object:
        return rat(self.quartic.get(tuple(sorted(word)), 0))

    def c3(self, a: int, b: int, gamma: str) -> object:
        """``int J_a J_b gamma``."""
        total = ZERO
        for (c, d), k in self.gamma_basis[gamma].items():
            total += rat(k) * self.c4((a, b, c, d))
        return total

    def check(self) -> bool:
        G = self.pairing_inverse
        sym = all(G[i][j] == G[j][i] for i in range(len(G)) for j in range(len(G)))
        # C0_{abcd} = sum C0_{ab gamma} G^{gamma delta} C0_{delta cd}
        consistent = True
        for word in product((1, 2), repeat=4):
            a, b, c, d = word
            acc = ZERO
            for i, gi in enumerate(self.gamma_names):
                for j, gj in enumerate(self.gamma_names):
                    acc += self.c3(a, b, gi) * rat(G[i][j]) * self.c3(c, d, gj)
            consistent = consistent and acc == self.c4(word)
        return sym and consistent

    def to_json(self):
        return {"quartic": {"".join(map(str, k)): rat_str(rat(v)) for k, v in self.quartic.items()},
                "gamma_basis": {g: {f"J{a}J{b}": rat_str(rat(c)) for (a, b), c in v.items()}
                                for g, v in self.gamma_basis.items()},
                "pairing_inverse": [[rat_str(rat(x)) for x in r] for r in self.pairing_inverse]}


def main_example_intersections() -> IntersectionData:
    return IntersectionData(
        quartic={(1, 1, 1, 1): 64, (1, 1, 1, 2): 16, (1, 1, 2, 2): 4, (1, 2, 2, 2): 1, (2, 2, 2, 2): 0},
        gamma_names=("gamma1", "gamma2"),
        gamma_basis={"gamma1": {(2, 2): 1}, "gamma2": {(1, 1): rat(4) / 17, (1, 2): rat(1) / 17}},
        pairing_inverse=((-4, 1), (1, 0)),
    )


@dataclass
class DerivationReport:
    caps: tuple
    kernel_orders: list  # monomials where the local system was rank deficient before normalization
    normalization: dict


def derive_yukawa_series(params: ModelParams, inter: IntersectionData, caps=(10, 3),
                         report: bool = False):
    """Solve the pairing constraints for the normalized couplings, monomial by monomial.

    At ``z^0`` the constant terms are pinned to the classical numbers
    ``int J^m``; at every other monomial the local system must have full rank.
    """
    cons = constraint_system(params)
    D1, D2 = caps
    coeffs = {m: {} for m in YUK_INDICES}
    grouped = [{m: op.by_z() for m, op in c.ops.items()} for c in cons]
    from .weyl import _eval_theta_poly
    order = sorted(product(range(D1 + 1), range(D2 + 1)), key=lambda p: (p[0] + p[1], p))
    kernels = []
    norm = {m: inter.c4((1,) * m[0] + (2,) * m[1]) for m in YUK_INDICES}
    for (a, b) in order:
        rows, rhs = [], []
        for g in grouped:
            row = [ZERO] * 5
            r = ZERO
            for k, m in enumerate(YUK_INDICES):
                for alpha, poly in g[m].items():
                    src = (a - alpha[0], b - alpha[1])
                    if min(src) < 0:
                        continue
                    val = _eval_theta_poly(poly, src)
                    if not val:
                        continue
                    if alpha == (0, 0):
                        row[k] += val
                    else:
                        r -= val * coeffs[m].get(src, ZERO)
            rows.append(row)
            rhs.append(r)
        _, rank, _ = solve_exact(rows, rhs)
        if rank < 5:
            kernels.append(((a, b), 5 - rank))
            if (a, b) != (0, 0):
                raise CouplingError(f"underdetermined at z^{(a, b)}: kernel dimension {5 - rank}")
            for k, m in enumerate(YUK_INDICES):
                rows.append([ONE if i == k else ZERO for i in range(5)])
                rhs.append(norm[m])
        sol, rank, ok = solve_exact(rows, rhs)
        if not ok:
            raise CouplingError(f"inconsistent constraints at z^{(a, b)}")
        if rank < 5:
            raise CouplingError(f"underdetermined at z^{(a, b)} after normalization")
        for k, m in enumerate(YUK_INDICES):
            if sol[k]:
                coeffs[m][(a, b)] = sol[k]
    out = {m: Series2.from_polynomial(coeffs[m], caps) for m in YUK_INDICES}
    if report:
        return out, DerivationReport(tuple(caps), kernels, norm)
    return out


def reconstruct_rational(s: Series2, num_deg: tuple, den_deg: tuple) -> RationalFn2 | None:
    """Find ``P/Q`` with ``Q(0) = 1`` and the given degree boxes matching ``s`` to its caps."""
    D1, D2 = s.caps
    qmon = [(i, j) for i in range(den_deg[0] + 1) for j in range(den_deg[1] + 1) if (i, j) != (0, 0)]
    rows, rhs = [], []
    for a in range(D1 + 1):
        for b in range(D2 + 1):
            if a <= num_deg[0] and b <= num_deg[1]:
                continue
            # [z^(a,b)] (Q s) = 0
            rows.append([s.coeff(a - i, b - j) if a >= i and b >= j else ZERO for i, j in qmon])
            rhs.append(-s.coeff(a, b))
    if len(rows) <= len(qmon):
        raise CouplingError("not enough coefficients to reconstruct the requested degrees")
    sol, rank, ok = solve_exact(rows, rhs)
    if not ok or rank < len(qmon):
        return None
    qd = {(0, 0): ONE}
    qd.update({m: c for m, c in zip(qmon, sol) if c})
    Q = Series2.from_polynomial(qd, s.caps)
    P = (Q * s).terms()
    z1, z2 = RationalFn2.z(1), RationalFn2.z(2)

    def poly(d):
        out = RationalFn2(0)
        for (i, j), c in d.items():
            out = out + c * z1 ** i * z2 ** j
        return out
    return poly({k: v for k, v in P.items() if k[0] <= num_deg[0] and k[1] <= num_deg[1]}) / poly(qd)


# -- flat coordinates -------------------------------------------------------------------------

def _mat_inverse(m):
    (a, b), (c, d) = m
    det = a * d - b * c
    inv = det.inverse()
    return ((d * inv, -b * inv), (-c * inv, a * inv))


def log_jacobian(ps: PeriodSet) -> tuple:
    """``M[e][a] = d log z_e / d tau_a`` as the inverse of ``theta_e tau_a = W^{e,a} / Pi0^2``."""
    p2inv = (ps.pi0 * ps.pi0).inverse()
    N = tuple(tuple(wronskian(ps, e, a) * p2inv for e in (1, 2)) for a in (1, 2))  # N[a][e]
    return _mat_inverse(N)  # rows indexed by e, columns by a


def to_tau_z(w: dict, ps: PeriodSet, words=COMPONENTS) -> dict:
    """Flat-coordinate couplings as series in ``z`` (keys: index words of COMPONENTS).

    ``C_abcd = Pi0^-2 sum_efgh w(efgh) M_ea M_fb M_gc M_hd`` where ``w`` is the
    normalized coupling; the ``z^-m`` poles of ``W`` cancel against the
    ``z_e`` factors of ``d z_e / d tau_a = z_e M_ea``.
    """
    caps = ps.caps
    w = {m: w[m].truncate(caps) for m in YUK_INDICES}
    M = log_jacobian(ps)
    p2inv = (ps.pi0 * ps.pi0).inverse()
    out = {}
    for word in words:
        total = Series2(caps)
        for efgh in product((1, 2), repeat=4):
            term = w[word_to_index(efgh)]
            if term.is_zero():
                continue
            for e, a in zip(efgh, word):
                term = term * M[e - 1][a - 1]
            total = total + term
        out[word] = total * p2inv
    return out


def to_tau(Y, ps: PeriodSet, mm: MirrorMap) -> dict:
    """The five couplings ``C_abcd`` as series in ``(q1, q2)``."""
    w = Y.normalized_series(ps.caps) if isinstance(Y, YukawaSet) else Y
    for m in YUK_INDICES:
        if w[m].caps[0] < ps.caps[0] or w[m].caps[1] < ps.caps[1]:
            raise CouplingError(f"coupling series caps {w[m].caps} below period caps {ps.caps}")
    return {word: mm.to_q(s) for word, s in to_tau_z(w, ps).items()}


def permutation_symmetry_check(w: dict, ps: PeriodSet) -> bool:
    """All 16 index words transform to the value of their sorted word."""
    full = to_tau_z(w, ps, tuple(product((1, 2), repeat=4)))
    return all(full[word] == full[tuple(sorted(word))] for word in full)


def symmetric_component(C: dict, word) -> Series2:
    return C[tuple(sorted(word))]


# -- E2 bookkeeping on fits --------------------------------------------------------------------

def poly_mul(a: dict, b: dict) -> dict:
    out: dict = {}
    for ea, ca in a.items():
        for eb, cb in b.items():
            e = tuple(x + y for x, y in zip(ea, eb))
            v = out.get(e, ZERO) + ca * cb
            if v:
                out[e] = v
            else:
                out.pop(e, None)
    return out


def poly_scale(a: dict, k) -> dict:
    k = rat(k)
    return {e: c * k for e, c in a.items() if c * k}


def anomaly_decompose(fr: FitResult) -> tuple[dict, dict]:
    """Split a fit into its E2-free part and the coefficient of ``E2`` (exponent tuples)."""
    free, anom = fr.e2_split()
    if any(e[0] > 1 for e in anom):
        raise CouplingError("fit contains E2^2 or higher; only the linear anomaly is split")
    coeff = {(0,) + e[1:]: c for e, c in anom.items()}
    return free, coeff


def proportionality(a: dict, b: dict):
    """The constant ``k`` with ``a = k b``, or None."""
    if not b:
        return None
    key = next(iter(b))
    k = a.get(key, ZERO) / b[key]
    return k if poly_scale(b, k) == {e: c for e, c in a.items() if c} else None


# -- three-point functions and the Gromov-Witten potential --------------------------------------

PAIRS = ((1, 1), (1, 2), (2, 2))


@dataclass
class ThreePointSolution:
    """``C_{ab gamma}`` by powers of ``q2``: ``rows[k][(pair, gamma)]`` is a q1-series."""

    gammas: tuple
    potential_rows: dict  # gamma -> {k: q1 Series2 with caps (D1, 0)} for k >= 1
    c3_rows: list  # k -> {(pair, gamma): Series2}
    checked: list  # (order, equation) pairs verified as consistent

    def c3(self, pair, gamma, caps) -> Series2:
        rows = [[ZERO] * (caps[1] + 1) for _ in range(caps[0] + 1)]
        for k, data in enumerate(self.c3_rows[: caps[1] + 1]):
            for i, v in enumerate(data[(pair, gamma)].row(0)[: caps[0] + 1]):
                rows[i][k] = v
        return Series2(caps, rows)


def fibre_seed(inter: IntersectionData, gamma: str, fibre_bps, order: int) -> dict:
    """Order-``q2^0`` three-point functions for one ``gamma``.

    ``fibre_bps(d1)`` gives ``n_{d1,0}(gamma)``; only ``C_{11 gamma}`` receives
    the fibre instantons, as ``sum d1^2 N_{d1,0} q1^d1``.
    """
    N = multicover_row([ZERO] + [rat(fibre_bps(d)) for d in range(1, order + 1)])
    out = {}
    for pair in PAIRS:
        coeffs = [inter.c3(pair[0], pair[1], gamma)] + [ZERO] * order
        if pair == (1, 1):
            for d in range(1, order + 1):
                coeffs[d] += d * d * N[d]
        out[pair] = Series2.univariate(coeffs, order)
    return out


def multicover_row(n: list) -> list:
    """``N_d = sum_{k | d} n_{d/k} / k^2`` along one ray (index 0 ignored)."""
    N = [ZERO] * len(n)
    for d in range(1, len(n)):
        N[d] = sum((rat(n[d // k]) / (k * k) for k in range(1, d + 1) if d % k == 0), ZERO)
    return N


def solve_three_point(C4: dict, inter: IntersectionData, seeds: dict, t_order: int | None = None
                      ) -> ThreePointSolution:
    """Solve ``C_abcd = C_{ab gamma} G^{gamma delta} C_{delta cd}`` order by order in ``q2``.

    ``C4`` maps component words to ``(q1, q2)`` series; ``seeds[gamma][pair]``
    are the ``q2^0`` three-point functions.  Above ``q2^0`` the three-point
    functions are second derivatives of potentials ``F_k(gamma) q2^k``; at each
    order the equations are linear in the ``F_k`` and the surplus equations are
    asserted.
    """
    gammas = inter.gamma_names
    G = [[rat(x) for x in r] for r in inter.pairing_inverse]
    r = len(gammas)
    caps = next(iter(C4.values())).caps
    D1 = caps[0]
    top = caps[1] if t_order is None else t_order
    if top > caps[1]:
        raise CouplingError(f"q2-order {top} exceeds the coupling caps {caps}")
    row_caps = (D1, 0)

    def c4row(P, Q, k) -> Series2:
        return Series2.univariate(symmetric_component(C4, P + Q).row(k), D1)

    def pair_form(x: dict, y: dict, P, Q) -> Series2:
        acc = Series2(row_caps)
        for i, gi in enumerate(gammas):
            for j, gj in enumerate(gammas):
                if G[i][j]:
                    acc = acc + (x[(P, gi)] * y[(Q, gj)]).scale(G[i][j])
        return acc

    rows = [{(P, g): seeds[g][P].truncate(row_caps) for P in PAIRS for g in gammas}]
    eqs = [(P, Q) for a, P in enumerate(PAIRS) for Q in PAIRS[a:]]
    checked = []
    for P, Q in eqs:
        if pair_form(rows[0], rows[0], P, Q) != c4row(P, Q, 0):
            raise CouplingError(f"seeds disagree with C_{P + Q} at q2^0")
        checked.append((0, P + Q))
    potentials = {g: {} for g in gammas}
    for k in range(1, top + 1):
        known = {}
        for P, Q in eqs:
            acc = c4row(P, Q, k)
            for l in range(1, k):
                acc = acc - pair_form(rows[l], rows[k - l], P, Q)
            known[(P, Q)] = acc
        # D_P F = theta1^{#1 in P} k^{#2 in P} F ; unknown coefficient F_k(gamma)[m]
        F = {g: [ZERO] * (D1 + 1) for g in gammas}

        def dfac(P, m):
            return rat(m) ** P.count(1) * rat(k) ** P.count(2)

        for m in range(D1 + 1):
            A, b = [], []
            for P, Q in eqs:
                row = [ZERO] * r
                rhs = known[(P, Q)].coeff(m)
                # sum_{i,j} G_ij [ s_P,i * (D_Q F_j) + (D_P F_i) * s_Q,j ]
                for i, gi in enumerate(gammas):
                    for j, gj in enumerate(gammas):
                        if not G[i][j]:
                            continue
                        for mm_ in range(m + 1):
                            sP = rows[0][(P, gi)].coeff(m - mm_)
                            sQ = rows[0][(Q, gj)].coeff(m - mm_)
                            if mm_ == m:
                                row[j] += G[i][j] * sP * dfac(Q, m)
                                row[i] += G[i][j] * sQ * dfac(P, m)
                            else:
                                rhs -= G[i][j] * (sP * dfac(Q, mm_) * F[gj][mm_] +
                                                  sQ * dfac(P, mm_) * F[gi][mm_])
                A.append(row)
                b.append(rhs)
            sol, rank, ok = solve_exact(A, b)
            if not ok:
                raise CouplingError(f"three-point system inconsistent at q2^{k} q1^{m}")
            if rank < r:
                raise CouplingError(f"three-point system singular at q2^{k} q1^{m}")
            for i, g in enumerate(gammas):
                F[g][m] = sol[i]
        new = {}
        for g in gammas:
            Fg = Series2.univariate(F[g], D1)
            potentials[g][k] = Fg
            for P in PAIRS:
                x = Fg
                for _ in range(P.count(1)):
                    x = x.theta(1)
                new[(P, g)] = x.scale(rat(k) ** P.count(2))
        rows.append(new)
        checked.extend((k, P + Q) for P, Q in eqs)
    return ThreePointSolution(tuple(gammas), potentials, rows, checked)


@dataclass
class GWTable:
    """Genus-zero invariants ``N[(d1, d2)]`` and BPS numbers ``n[(d1, d2)]`` for one ``gamma``.

    The classical and logarithmic part of the potential (``beta = 0``) is not
    part of the table.  ``source`` records whether an entry was solved for or
    came from seed data.
    """

    gamma: str
    N: dict
    n: dict
    source: dict
    notes: list = field(default_factory=list)

    CLASSICAL = "classical-omitted"

    def d_range(self):
        d1 = max(k[0] for k in self.n)
        d2 = max(k[1] for k in self.n)
        return d1, d2

    def multicover_ok(self) -> bool:
        return multicover(self.n) == {k: v for k, v in self.N.items()}

    def to_csv(self, d1_max: int | None = None, d2_max: int | None = None, which: str = "n") -> str:
        table = self.n if which == "n" else self.N
        m1, m2 = self.d_range()
        m1 = m1 if d1_max is None else d1_max
        m2 = m2 if d2_max is None else d2_max
        lines = ["d1\\d2," + ",".join(str(j) for j in range(m2 + 1))]
        for i in range(m1 + 1):
            cells = []
            for j in range(m2 + 1):
                if (i, j) == (0, 0):
                    cells.append(self.CLASSICAL)
                else:
                    cells.append(rat_str(table[(i, j)]) if (i, j) in table else "")
            lines.append(f"{i}," + ",".join(cells))
        return "\n".join(lines) + "\n"

    def to_json(self) -> dict:
        def enc(t):
            return {f"{i},{j}": rat_str(v) for (i, j), v in sorted(t.items())}
        return {"gamma": self.gamma, "classical_part": "omitted", "N": enc(self.N), "n": enc(self.n),
                "source": {f"{i},{j}": s for (i, j), s in sorted(self.source.items())},
                "notes": list(self.notes)}


def multicover(n: dict) -> dict:
    """``N_beta = sum_{k | beta} n_{beta/k} / k^2``."""
    out = {}
    for (d1, d2) in n:
        g = _gcd(d1, d2)
        out[(d1, d2)] = sum((rat(n.get((d1 // k, d2 // k), ZERO)) / (k * k)
                             for k in range(1, g + 1) if g % k == 0), ZERO)
    return out


def _gcd(a, b):
    from math import gcd
    return gcd(a, b)


def _mobius(k: int) -> int:
    res, p, m = 1, 2, k
    while p * p <= m:
        if m % p == 0:
            m //= p
            if m % p == 0:
                return 0
            res = -res
        p += 1
    return -res if m > 1 else res


def bps_from_gw(N: dict) -> dict:
    """Invert the multicover formula: ``n_beta = sum_{k | beta} mu(k) N_{beta/k} / k^2``."""
    out = {}
    for (d1, d2) in N:
        g = _gcd(d1, d2)
        out[(d1, d2)] = sum((_mobius(k) * rat(N.get((d1 // k, d2 // k), ZERO)) / (k * k)
                             for k in range(1, g + 1) if g % k == 0), ZERO)
    return out


def assemble_potential(sol: ThreePointSolution, gamma: str, seeds: dict | None = None) -> dict:
    """``{(d1, d2): N}`` read off ``F(gamma)``; ``d2 = 0`` comes from the seed ``C_{11 gamma}``."""
    out = {}
    for k, row in sol.potential_rows[gamma].items():
        for d1, v in enumerate(row.row(0)):
            out[(d1, k)] = v
    if seeds is not None:
        c11 = seeds[gamma][(1, 1)]
        for d1, v in enumerate(c11.row(0)):
            if d1 >= 1:
                out[(d1, 0)] = v / (d1 * d1)
    return out


def extract_gw(sol: ThreePointSolution, gamma: str, seeds: dict) -> GWTable:
    N = assemble_potential(sol, gamma, seeds)
    n = bps_from_gw(N)
    source = {k: ("seed" if k[1] == 0 else "solved") for k in N}
    return GWTable(gamma, N, n, source)
