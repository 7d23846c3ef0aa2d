"""Normal-ordered exponential operators, their Wick products, and formal
delta extraction from supercommutators.

A VertexOp is scalar * prod_v v^(E_v) * :exp(sum_v B_v(v)):, with all zero
modes carried inside the exponent FieldSums.  Products of two such operators
produce a Prefactor (closed two-point factors, zero-mode crossing monomials,
and the cocycle sign from reordering odd charges) times the plain normal-
ordered merge.  Commutators of single-variable operators reduce to simple
poles of the shared rational prefactor; each pole contributes one formal
delta supported at z1 = q^c z2.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

from qcurrents.fields import FieldSum, ModeCoef, contract
from qcurrents.heisenberg import AlgebraParams
from qcurrents.scalars import (
    KRat,
    NumericContext,
    QEXP0,
    QExp,
    ScalarQ,
    SeriesX,
    qexp,
)


class HigherOrderPoleError(ArithmeticError):
    """A prefactor pole of multiplicity >= 2; the construction forbids these."""


class SeriesOnlyError(ArithmeticError):
    """No closed product form is available for the requested manipulation."""


class NonDeltaCommutatorError(ArithmeticError):
    """The two orderings disagree as rational functions: the commutator is
    not a pure sum of formal deltas."""


# ---------------------------------------------------------------------------
# VertexOp
# ---------------------------------------------------------------------------


class VertexOp:
    """scalar * prod v^{E_v} * :exp(B):, zero modes inside the FieldSums."""

    __slots__ = ("scalar", "varpows", "exps", "parity_override")

    def __init__(self, scalar: ScalarQ | None = None,
                 varpows: dict[str, KRat] | None = None,
                 exps: dict[str, FieldSum] | None = None,
                 parity_override: int | None = None):
        self.scalar = scalar if scalar is not None else ScalarQ.from_fraction(1)
        self.varpows = {v: e for v, e in (varpows or {}).items() if not e.is_zero()}
        self.exps = {v: f for v, f in (exps or {}).items() if not f.is_zero()}
        self.parity_override = parity_override

    @staticmethod
    def exponential(var: str, exponent: FieldSum, scalar=None,
                    parity_override: int | None = None) -> "VertexOp":
        return VertexOp(scalar, {}, {var: exponent}, parity_override)

    @staticmethod
    def identity() -> "VertexOp":
        return VertexOp()

    @property
    def variables(self) -> list[str]:
        return sorted(set(self.varpows) | set(self.exps))

    def scaled(self, c) -> "VertexOp":
        c = c if isinstance(c, ScalarQ) else ScalarQ.from_fraction(c)
        return VertexOp(self.scalar * c, dict(self.varpows), dict(self.exps),
                        self.parity_override)

    def with_varpow(self, var: str, e) -> "VertexOp":
        e = e if isinstance(e, KRat) else KRat.const(e)
        vp = dict(self.varpows)
        tot = vp.get(var, KRat.const(0)) + e
        if tot.is_zero():
            vp.pop(var, None)
        else:
            vp[var] = tot
        return VertexOp(self.scalar, vp, dict(self.exps), self.parity_override)

    # -- zero-mode structure ---------------------------------------------------

    def charge_word(self) -> dict[tuple, KRat]:
        out: dict[tuple, KRat] = {}
        for f in self.exps.values():
            for key, mult in f.charge_mults().items():
                v = out.get(key, KRat.const(0)) + mult
                if v.is_zero():
                    out.pop(key, None)
                else:
                    out[key] = v
        return out

    def b_charges(self, p: AlgebraParams) -> list[tuple[tuple, int, int]]:
        """(key, integer multiplicity, parity sign) for b-type charges."""
        out = []
        for (fam, idx), mult in self.charge_word().items():
            if fam == "b":
                fr = mult.as_fraction()
                if fr is None or fr.denominator != 1:
                    raise ValueError(f"non-integer b charge {mult} on {idx}")
                if int(fr):
                    out.append(((idx[0], idx[1]), int(fr),
                                -1 if p.odd_pair(*idx) else 1))
        return out

    def parity(self, p: AlgebraParams) -> int:
        if self.parity_override is not None:
            return self.parity_override
        return sum(abs(m) for _, m, sgn in self.b_charges(p) if sgn < 0) % 2

    # -- canonical identification ----------------------------------------------

    def content_key(self):
        vp = tuple(sorted((v, e) for v, e in self.varpows.items()))
        ex = tuple(sorted((v, f.key()) for v, f in self.exps.items()))
        return (vp, ex)

    def __eq__(self, other):
        if not isinstance(other, VertexOp):
            return NotImplemented
        return self.content_key() == other.content_key() and self.scalar == other.scalar

    def is_zero(self) -> bool:
        return self.scalar.is_zero()

    # -- substitution ------------------------------------------------------------

    def substitute(self, var_from: str, var_to: str, shift: QExp) -> "VertexOp":
        """Set var_from := q^shift * var_to, merging exponent content."""
        scalar = self.scalar
        varpows = dict(self.varpows)
        e_from = varpows.pop(var_from, None)
        if e_from is not None:
            fr = e_from.as_fraction()
            if fr is None:
                raise SeriesOnlyError("variable power not rational under substitution")
            scalar = scalar * ScalarQ.monomial(shift.scale(fr))
            tot = varpows.get(var_to, KRat.const(0)) + e_from
            if tot.is_zero():
                varpows.pop(var_to, None)
            else:
                varpows[var_to] = tot
        exps = dict(self.exps)
        f_from = exps.pop(var_from, None)
        if f_from is not None:
            moved = f_from.substitute_scale(shift)
            if var_to in exps:
                exps[var_to] = exps[var_to] + moved
            else:
                exps[var_to] = moved
        return VertexOp(scalar, varpows, exps, self.parity_override)

    def render(self) -> str:
        """Canonical text form used by reports and golden files."""
        bits = [repr(self.scalar)]
        for v, e in sorted(self.varpows.items()):
            bits.append(f"{v}^({e!r})")
        for v, f in sorted(self.exps.items()):
            terms = sorted(f.terms.items(), key=lambda t: repr(t[0]))
            body = " + ".join(
                f"{c}*{sp.family}{'_' + sp.shape.kind if sp.shape.kind != 'full' else ''}"
                f"{list(sp.idx)}(q^{sp.scale.a}{'+' if sp.scale.b >= 0 else ''}{sp.scale.b}k {v})"
                for sp, c in terms)
            bits.append(f":exp[{body}]:")
        return " ".join(bits)

    def __repr__(self):
        return f"VertexOp({self.render()})"


# ---------------------------------------------------------------------------
# Prefactor
# ---------------------------------------------------------------------------


@dataclass
class Prefactor:
    """Closed product prefactor in several variables.

    factors[(va, vb, c)] = e encodes (1 - q^c zb/za)^e with the pairing
    direction va before vb; series holds atoms with no closed form.
    """

    coeff: ScalarQ = None
    q_extra: KRat = None
    zpows: dict = field(default_factory=dict)
    factors: dict = field(default_factory=dict)
    series: list = field(default_factory=list)

    def __post_init__(self):
        if self.coeff is None:
            self.coeff = ScalarQ.from_fraction(1)
        if self.q_extra is None:
            self.q_extra = KRat.const(0)

    @property
    def is_closed(self) -> bool:
        return not self.series

    def copy(self) -> "Prefactor":
        return Prefactor(self.coeff, self.q_extra, dict(self.zpows),
                         dict(self.factors), list(self.series))

    def mul_scalar(self, c: ScalarQ) -> "Prefactor":
        out = self.copy()
        out.coeff = out.coeff * c
        return out

    def add_factor(self, va: str, vb: str, c: QExp, e: int):
        key = (va, vb, c)
        tot = self.factors.get(key, 0) + e
        if tot:
            self.factors[key] = tot
        else:
            self.factors.pop(key, None)

    def add_zpow(self, v: str, e: KRat):
        tot = self.zpows.get(v, KRat.const(0)) + e
        if tot.is_zero():
            self.zpows.pop(v, None)
        else:
            self.zpows[v] = tot

    def absorb_q_extra(self):
        qe = self.q_extra.as_qexp()
        if qe is not None:
            self.coeff = self.coeff * ScalarQ.monomial(qe)
            self.q_extra = KRat.const(0)

    def merge(self, other: "Prefactor") -> "Prefactor":
        out = self.copy()
        out.coeff = out.coeff * other.coeff
        out.q_extra = out.q_extra + other.q_extra
        for v, e in other.zpows.items():
            out.add_zpow(v, e)
        for (va, vb, c), e in other.factors.items():
            out.add_factor(va, vb, c, e)
        out.series.extend(other.series)
        return out

    def reexpress(self, va: str, vb: str) -> "Prefactor":
        """Rewrite every (vb, va, c) factor in the (va, vb) direction.

        (1 - q^c za/zb)^e = (-q^c za/zb)^e (1 - q^{-c} zb/za)^e.
        """
        out = self.copy()
        for (a, b, c), e in list(out.factors.items()):
            if (a, b) == (vb, va):
                del out.factors[(a, b, c)]
                out.add_factor(va, vb, -c, e)
                sign = Fraction(-1) ** e
                out.coeff = out.coeff * ScalarQ.monomial(c.scale(e), sign)
                out.add_zpow(va, KRat.const(e))
                out.add_zpow(vb, KRat.const(-e))
        return out

    def equals(self, other: "Prefactor") -> bool:
        if self.factors != other.factors or self.series or other.series:
            return False
        if set(self.zpows) != set(other.zpows):
            return False
        for v, e in self.zpows.items():
            if other.zpows.get(v) != e:
                return False
        return self.q_extra == other.q_extra and self.coeff == other.coeff


# ---------------------------------------------------------------------------
# Products
# ---------------------------------------------------------------------------


def _cocycle_sign(p: AlgebraParams, left: VertexOp, right: VertexOp) -> int:
    """Sign from reordering the concatenated b-charge word canonically.

    Canonical order is descending in the index pair.  Exchanging two distinct
    b charges costs the parity sign of the lexicographically larger one, so a
    right charge crossing a smaller left charge contributes that sign raised
    to the product of multiplicities.  c charges are sign-free.
    """
    sign = 1
    for k1, m1, s1 in left.b_charges(p):
        for k2, m2, s2 in right.b_charges(p):
            if k2 > k1 and s1 < 0 and s2 < 0:
                sign *= (-1) ** (m1 * m2)
    return sign


def ope_product(V1: VertexOp, V2: VertexOp, p: AlgebraParams) -> tuple[Prefactor, VertexOp]:
    """V1 * V2 = Prefactor * :V1 V2: with disjoint variable sets."""
    if set(V1.variables) & set(V2.variables):
        raise ValueError("ope_product needs distinct variables")
    pre = Prefactor()
    pre.coeff = ScalarQ.from_fraction(_cocycle_sign(p, V1, V2))
    # oscillator pairings, left annihilation against right creation
    for v1, f1 in V1.exps.items():
        for v2, f2 in V2.exps.items():
            con = contract(f1, f2, p)
            for c, e in con.factors.items():
                pre.add_factor(v1, v2, c, e)
            for atom in con.series_atoms:
                pre.series.append((v1, v2, atom))
    # left diagonal zero modes against right charges
    right_charges: dict[tuple, KRat] = {}
    for f2 in V2.exps.values():
        for key, mult in f2.charge_mults().items():
            _kracc(right_charges, key, mult)
    if right_charges:
        left_logq: dict[tuple, KRat] = {}
        for f1 in V1.exps.values():
            for key, mult in f1.logq_mults().items():
                _kracc(left_logq, key, mult)
        for key, mult in left_logq.items():
            for key2, cmult in right_charges.items():
                val = _pair_value(p, key, key2)
                if val is not None:
                    pre.q_extra = pre.q_extra + mult * cmult * val
        for v1, f1 in V1.exps.items():
            for key, mult in f1.logz_mults().items():
                for key2, cmult in right_charges.items():
                    val = _pair_value(p, key, key2)
                    if val is not None:
                        pre.add_zpow(v1, mult * cmult * val)
    pre.absorb_q_extra()
    merged_exps = dict(V1.exps)
    for v, f in V2.exps.items():
        merged_exps[v] = merged_exps.get(v, FieldSum()) + f if v in merged_exps else f
    merged_pows = dict(V1.varpows)
    for v, e in V2.varpows.items():
        tot = merged_pows.get(v, KRat.const(0)) + e
        if tot.is_zero():
            merged_pows.pop(v, None)
        else:
            merged_pows[v] = tot
    N = VertexOp(V1.scalar * V2.scalar, merged_pows, merged_exps)
    return pre, N


def _kracc(d: dict, key, val: KRat):
    tot = d.get(key, KRat.const(0)) + val
    if tot.is_zero():
        d.pop(key, None)
    else:
        d[key] = tot


def _pair_value(p: AlgebraParams, key1: tuple, key2: tuple) -> KRat | None:
    fam, idx = key1
    fam2, idx2 = key2
    if fam != fam2:
        return None
    if fam == "a":
        return KRat.linear(p.g, 1) * p.a(idx[0], idx2[0])
    if idx != idx2:
        return None
    nu = p.nu(idx[0]) * p.nu(idx[1])
    return KRat.const(-nu if fam == "b" else nu)


def ordered_product(ops: list[tuple[str, VertexOp]], p: AlgebraParams) -> tuple[Prefactor, VertexOp]:
    """Product of single-variable ops in the given left-to-right order."""
    pre = Prefactor()
    acc: VertexOp | None = None
    for _, op in ops:
        if acc is None:
            acc = op
            continue
        step, acc = ope_product(acc, op, p)
        pre = pre.merge(step)
    return pre, (acc if acc is not None else VertexOp.identity())


# ---------------------------------------------------------------------------
# Delta terms and supercommutators
# ---------------------------------------------------------------------------


@dataclass
class DeltaTerm:
    """delta(q^shift z2/z1) times a single-variable operator in z2; the
    operator's scalar carries the overall coefficient."""

    shift: QExp
    op: VertexOp

    def key(self):
        return (self.shift, self.op.content_key())

    def __repr__(self):
        return f"delta(q^[{self.shift!r}] z2/z1) * {self.op!r}"


def _pole_residues(pre: Prefactor, v1: str, v2: str) -> list[tuple[QExp, ScalarQ, KRat]]:
    """Partial fractions of the prefactor over its simple poles.

    Returns (shift c, residue scalar, z2 power) triples: the delta at
    z1 = q^c z2 carries residue * z2^(E1+E2) with z1-powers folded in.
    """
    if pre.series:
        raise SeriesOnlyError("prefactor has no closed form")
    if not pre.q_extra.is_zero():
        raise SeriesOnlyError("q-exponent outside the monomial lattice")
    e1 = pre.zpows.get(v1, KRat.const(0))
    e2 = pre.zpows.get(v2, KRat.const(0))
    f1 = e1.as_fraction()
    if f1 is None or f1.denominator != 1:
        raise SeriesOnlyError(f"left variable power {e1} not an integer")
    poles = [(c, e) for (a, b, c), e in pre.factors.items() if e < 0]
    for c, e in poles:
        if e <= -2:
            raise HigherOrderPoleError(f"pole of order {-e} at x = q^[{-c!r}]")
    out = []
    etot = e1 + e2
    for c, _ in poles:
        # evaluate the remaining factors at z2/z1 = q^{-c}
        res = pre.coeff * ScalarQ.monomial(c.scale(int(f1)))
        for (a, b, c2), e in pre.factors.items():
            if c2 == c and e == -1:
                continue
            base = ScalarQ.from_fraction(1) - ScalarQ.monomial(c2 - c)
            if e == -1:
                res = res / base
            else:
                res = res * base**e
        out.append((c, res, etot))
    return out


def supercommutator(V1: VertexOp, V2: VertexOp, p: AlgebraParams,
                    v1: str = "z1", v2: str = "z2") -> list[DeltaTerm]:
    """[V1(z1), V2(z2)] as a finite list of delta terms.

    Empty list when the orderings agree with no poles; raises when the
    commutator is not a pure delta sum.
    """
    pre12, N12 = ope_product(V1, V2, p)
    pre21, _ = ope_product(V2, V1, p)
    sigma = (-1) ** (V1.parity(p) * V2.parity(p))
    pre21x = pre21.reexpress(v1, v2).mul_scalar(ScalarQ.from_fraction(sigma))
    if not pre12.equals(pre21x):
        raise NonDeltaCommutatorError(
            f"orderings disagree as rational functions:\n  {pre12}\n  {pre21x}")
    terms = []
    for c, res, etot in _pole_residues(pre12, v1, v2):
        op = N12.substitute(v1, v2, c).with_varpow(v2, etot)
        op = op.scaled(res)
        if not op.is_zero():
            terms.append(DeltaTerm(c, op))
    return merge_delta_terms(terms)


def merge_delta_terms(terms: list[DeltaTerm]) -> list[DeltaTerm]:
    grouped: dict = {}
    for t in terms:
        key = t.key()
        if key in grouped:
            grouped[key] = DeltaTerm(t.shift, _add_ops(grouped[key].op, t.op))
        else:
            grouped[key] = t
    out = [t for t in grouped.values() if not t.op.is_zero()]
    out.sort(key=lambda t: (t.shift.b, t.shift.a))
    return out


def _add_ops(a: VertexOp, b: VertexOp) -> VertexOp:
    return VertexOp(a.scalar + b.scalar, dict(a.varpows), dict(a.exps), a.parity_override)


def delta_terms_equal(got: list[DeltaTerm], expected: list[DeltaTerm]) -> bool:
    if len(got) != len(expected):
        return False
    gk = {t.key(): t for t in got}
    for t in expected:
        other = gk.get(t.key())
        if other is None or not (other.op.scalar == t.op.scalar):
            return False
    return True


def check_quadratic_exchange(V1: VertexOp, V2: VertexOp, a_val: int, p: AlgebraParams,
                             v1: str = "z1", v2: str = "z2", sign: int = +1) -> bool:
    """(z1 - q^(s*A) z2) V1 V2 == (q^(s*A) z1 - z2) (+-) V2 V1 with s = sign."""
    pre12, _ = ope_product(V1, V2, p)
    pre21, _ = ope_product(V2, V1, p)
    sigma = (-1) ** (V1.parity(p) * V2.parity(p))
    a_exp = qexp(sign * a_val)
    lhs = pre12.copy()
    lhs.add_factor(v1, v2, a_exp, 1)
    rhs = pre21.reexpress(v1, v2).mul_scalar(
        ScalarQ.from_fraction(sigma) * ScalarQ.monomial(a_exp))
    rhs.add_factor(v1, v2, -a_exp, 1)
    return lhs.equals(rhs)


# ---------------------------------------------------------------------------
# Sum-level commutators: rational prefactor sums over a common denominator
# ---------------------------------------------------------------------------


def _xp_mul(a: dict, b: dict) -> dict:
    out: dict = {}
    for m1, c1 in a.items():
        for m2, c2 in b.items():
            m = m1 + m2
            v = out.get(m)
            out[m] = c1 * c2 if v is None else v + c1 * c2
    return {m: c for m, c in out.items() if not c.is_zero()}


def _xp_factor(c: QExp) -> dict:
    """(1 - q^c x) as an x-polynomial with ScalarQ coefficients."""
    return {0: ScalarQ.from_fraction(1), 1: ScalarQ.monomial(c, -1)}


def _xp_eval_at_pole(num: dict, c: QExp) -> ScalarQ:
    """Evaluate an x-Laurent polynomial at x = q^{-c}."""
    out = ScalarQ.from_fraction(0)
    for m, coeff in num.items():
        out = out + coeff * ScalarQ.monomial(c.scale(-m))
    return out


def _xp_divexact(num: dict, c: QExp) -> dict | None:
    """Quotient num / (1 - q^c x) when exact, else None."""
    if not num:
        return {}
    lam = ScalarQ.monomial(c)
    shift = min(num)
    rem = {m - shift: v for m, v in num.items()}
    out: dict = {}
    while rem:
        top = max(rem)
        if top == 0:
            return None  # nonzero constant remainder
        a = rem.pop(top)
        q = (a / lam) * Fraction(-1)
        out[top - 1 + shift] = q
        prev = rem.get(top - 1, ScalarQ.from_fraction(0)) - q
        if prev.is_zero():
            rem.pop(top - 1, None)
        else:
            rem[top - 1] = prev
    return out


class XFrac:
    """Rational function of x = z2/z1: Laurent numerator over a product of
    (1 - q^c x) factors, plus the group's overall z2-power."""

    __slots__ = ("num", "den", "etot")

    def __init__(self, num: dict, den: dict, etot: KRat):
        self.num = num
        self.den = {c: m for c, m in den.items() if m}
        self.etot = etot

    @staticmethod
    def from_prefactor(pre: Prefactor, v1: str, v2: str) -> "XFrac":
        if pre.series:
            raise SeriesOnlyError("prefactor has no closed form")
        if not pre.q_extra.is_zero():
            raise SeriesOnlyError("q exponent outside the monomial lattice")
        e1 = pre.zpows.get(v1, KRat.const(0))
        f1 = e1.as_fraction()
        if f1 is None or f1.denominator != 1:
            raise SeriesOnlyError(f"left variable power {e1} not an integer")
        num = {-int(f1): pre.coeff}
        den: dict = {}
        for (a, b, c), e in pre.factors.items():
            if (a, b) != (v1, v2):
                raise ValueError("prefactor involves other variable pairs")
            if e > 0:
                for _ in range(e):
                    num = _xp_mul(num, _xp_factor(c))
            else:
                den[c] = den.get(c, 0) - e
        etot = e1 + pre.zpows.get(v2, KRat.const(0))
        return XFrac(num, den, etot)

    def add(self, other: "XFrac") -> "XFrac":
        if self.etot != other.etot:
            raise ValueError("mixing terms with different total z powers")
        den = dict(self.den)
        for c, m in other.den.items():
            den[c] = max(den.get(c, 0), m)
        num1 = dict(self.num)
        for c, m in den.items():
            for _ in range(m - self.den.get(c, 0)):
                num1 = _xp_mul(num1, _xp_factor(c))
        num2 = dict(other.num)
        for c, m in den.items():
            for _ in range(m - other.den.get(c, 0)):
                num2 = _xp_mul(num2, _xp_factor(c))
        out: dict = dict(num1)
        for mxp, coeff in num2.items():
            v = out.get(mxp)
            out[mxp] = coeff if v is None else v + coeff
        out = {m: c for m, c in out.items() if not c.is_zero()}
        return XFrac(out, den, self.etot)

    def reduced(self) -> "XFrac":
        num = dict(self.num)
        den = dict(self.den)
        for c in list(den):
            while den.get(c, 0) > 0:
                q = _xp_divexact(num, c)
                if q is None:
                    break
                num = q
                den[c] -= 1
            if not den.get(c, 0):
                den.pop(c, None)
        return XFrac(num, den, self.etot)

    def equals(self, other: "XFrac") -> bool:
        if self.etot != other.etot:
            return False
        lhs = dict(self.num)
        for c, m in other.den.items():
            for _ in range(m):
                lhs = _xp_mul(lhs, _xp_factor(c))
        rhs = dict(other.num)
        for c, m in self.den.items():
            for _ in range(m):
                rhs = _xp_mul(rhs, _xp_factor(c))
        keys = set(lhs) | set(rhs)
        zero = ScalarQ.from_fraction(0)
        return all((lhs.get(m, zero) - rhs.get(m, zero)).is_zero() for m in keys)

    def is_zero(self) -> bool:
        return not self.num

    def delta_content(self) -> list[tuple[QExp, ScalarQ]]:
        """Simple-pole residues (shift c, coefficient of delta(q^c z2/z1))."""
        red = self.reduced()
        out = []
        for c, m in red.den.items():
            if m >= 2:
                raise HigherOrderPoleError(f"pole of order {m} at x = q^[{-c!r}]")
            val = _xp_eval_at_pole(red.num, c)
            for c2, m2 in red.den.items():
                if c2 != c:
                    base = ScalarQ.from_fraction(1) - ScalarQ.monomial(c2 - c)
                    for _ in range(m2):
                        val = val / base
            if not val.is_zero():
                out.append((c, val))
        return out


def sum_supercommutator(terms1: list[VertexOp], terms2: list[VertexOp],
                        p: AlgebraParams, v1: str = "z1", v2: str = "z2",
                        sign_override: int | None = None) -> list[DeltaTerm]:
    """[sum terms1(z1), sum terms2(z2)] with cancellation across terms.

    Groups products by normal-ordered content; each group's two ordering
    prefactor sums must agree as rational functions, and the commutator is
    the delta content of the common function.
    """
    groups: dict = {}
    for t1 in terms1:
        for t2 in terms2:
            pre12, n12 = ope_product(t1, t2, p)
            sigma = sign_override
            if sigma is None:
                sigma = (-1) ** (t1.parity(p) * t2.parity(p))
            pre21, _ = ope_product(t2, t1, p)
            pre21x = pre21.reexpress(v1, v2).mul_scalar(ScalarQ.from_fraction(sigma))
            key = n12.content_key()
            f12 = XFrac.from_prefactor(pre12.mul_scalar(n12.scalar), v1, v2)
            f21 = XFrac.from_prefactor(pre21x.mul_scalar(n12.scalar), v1, v2)
            if key in groups:
                a, b, _ = groups[key]
                groups[key] = (a.add(f12), b.add(f21), n12)
            else:
                groups[key] = (f12, f21, n12)
    out: list[DeltaTerm] = []
    for key, (f12, f21, n12) in groups.items():
        if not f12.equals(f21):
            raise NonDeltaCommutatorError(
                f"group {key[:1]}...: orderings disagree as rational functions")
        base = VertexOp(ScalarQ.from_fraction(1), dict(n12.varpows), dict(n12.exps))
        for c, coeff in f12.delta_content():
            fr = f12.etot.as_fraction()
            if fr is None:
                raise SeriesOnlyError("non-rational total z power")
            op = base.substitute(v1, v2, c).with_varpow(v2, KRat.const(fr))
            op = op.scaled(coeff)
            if not op.is_zero():
                out.append(DeltaTerm(c, op))
    return merge_delta_terms(out)


def sum_quadratic_exchange(terms1: list[VertexOp], terms2: list[VertexOp],
                           a_val: int, p: AlgebraParams,
                           v1: str = "z1", v2: str = "z2", sign: int = +1) -> bool:
    """(z1 - q^{s A} z2) X(z1) Y(z2) == (q^{s A} z1 - z2) (+-) Y(z2) X(z1),
    compared group by group at the level of rational prefactor sums."""
    a_exp = qexp(sign * a_val)
    groups: dict = {}
    for t1 in terms1:
        for t2 in terms2:
            pre12, n12 = ope_product(t1, t2, p)
            sigma = (-1) ** (t1.parity(p) * t2.parity(p))
            pre21, _ = ope_product(t2, t1, p)
            lhs = pre12.mul_scalar(n12.scalar)
            lhs.add_factor(v1, v2, a_exp, 1)
            rhs = pre21.reexpress(v1, v2).mul_scalar(
                ScalarQ.from_fraction(sigma) * ScalarQ.monomial(a_exp) * n12.scalar)
            rhs.add_factor(v1, v2, -a_exp, 1)
            key = n12.content_key()
            fl = XFrac.from_prefactor(lhs, v1, v2)
            fr = XFrac.from_prefactor(rhs, v1, v2)
            if key in groups:
                a, b = groups[key]
                groups[key] = (a.add(fl), b.add(fr))
            else:
                groups[key] = (fl, fr)
    return all(fl.equals(fr) for fl, fr in groups.values())


# ---------------------------------------------------------------------------
# Series view of a prefactor (single variable pair)
# ---------------------------------------------------------------------------


def prefactor_series(pre: Prefactor, v1: str, v2: str, order: int) -> SeriesX:
    """Exact series of the prefactor in x = z2/z1, z-powers excluded."""
    coeffs: dict[int, ScalarQ] = {}
    for m in range(1, order + 1):
        tot = ScalarQ.from_fraction(0)
        for (a, b, c), e in pre.factors.items():
            if (a, b) != (v1, v2):
                raise ValueError("prefactor involves other variable pairs")
            tot = tot + ScalarQ.monomial(c.scale(m), Fraction(-e, m))
        for (_, _, atom) in pre.series:
            tot = tot + atom.eval_scalar(m)
        if not tot.is_zero():
            coeffs[m] = tot
    return SeriesX("x", order, coeffs).exp().scale(pre.coeff)
