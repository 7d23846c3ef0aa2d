"""Free-field generating functions and the two-point contraction engine.

A FieldSum describes one formal variable's worth of oscillator content: a
rational linear combination of mode-coefficient shapes (the +/- half fields,
the full fields with zero modes, and bracket-weighted fields).  Contraction
pairs the annihilation half of a left field against the creation half of a
right field and classifies the exponentiated pairing: whenever the per-mode
coefficient times m is an integer combination of pure exponentials q^(c m),
the result is a finite product of (1 - q^c x)^e factors; everything else is
kept symbolically and expanded on demand.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

from qcurrents.heisenberg import AlgebraParams
from qcurrents.scalars import (
    KR_ONE,
    KRat,
    NumericContext,
    QEXP0,
    QExp,
    ScalarQ,
    SeriesX,
    qd,
    qexp,
)

LinForm = tuple[Fraction, Fraction]  # bracket argument a + b*k inside [. m]_q


def linform(a, b=0) -> LinForm:
    return (Fraction(a), Fraction(b))


def _lin_neg(d: LinForm) -> LinForm:
    return (-d[0], -d[1])


def _lin_canonical(d: LinForm) -> tuple[LinForm, int]:
    """Flip [d m] to a sign-canonical bracket; returns (form, sign)."""
    if d[1] < 0 or (d[1] == 0 and d[0] < 0):
        return _lin_neg(d), -1
    return d, 1


# ---------------------------------------------------------------------------
# Per-mode pair coefficients
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ModeCoef:
    """c * q^(qlin*m) * prod [n m] / prod [d m] / m^mpow as a function of m>0."""

    const_num: tuple = ()
    const_den: tuple = ()
    qlin: QExp = QEXP0
    num_br: tuple = ()
    den_br: tuple = ()
    mpow: int = 0
    rational: Fraction = Fraction(1)

    # const_num/const_den hold powers of (q - q^-1) symbolically: we only ever
    # need integer powers of qd times a rational, so track the exponent.

    @staticmethod
    def make(rational=1, qd_pow: int = 0, qlin: QExp = QEXP0,
             num_br: tuple = (), den_br: tuple = (), mpow: int = 0) -> "ModeCoef":
        rat = Fraction(rational)
        num, den = [], []
        for d in num_br:
            d, s = _lin_canonical(d)
            rat *= s
            num.append(d)
        for d in den_br:
            d, s = _lin_canonical(d)
            rat /= s
            den.append(d)
        # cancel common brackets
        for d in list(num):
            if d in den:
                num.remove(d)
                den.remove(d)
        return ModeCoef((qd_pow,), (), qlin, tuple(sorted(num)), tuple(sorted(den)), mpow, rat)

    @property
    def qd_pow(self) -> int:
        return self.const_num[0] if self.const_num else 0

    def is_zero(self) -> bool:
        return self.rational == 0 or any(d == (0, 0) for d in self.num_br)

    def __mul__(self, other: "ModeCoef") -> "ModeCoef":
        return ModeCoef.make(
            self.rational * other.rational,
            self.qd_pow + other.qd_pow,
            self.qlin + other.qlin,
            self.num_br + other.num_br,
            self.den_br + other.den_br,
            self.mpow + other.mpow,
        )

    def scale_rational(self, c) -> "ModeCoef":
        return ModeCoef(self.const_num, self.const_den, self.qlin,
                        self.num_br, self.den_br, self.mpow, self.rational * Fraction(c))

    def closed_factors(self) -> dict[QExp, int] | None:
        """Factors (1 - q^c x)^e with exp(sum_m coef(m) x^m) = prod, or None."""
        if self.is_zero():
            return {}
        if self.den_br or self.mpow != 1:
            return None
        c_eff = self.rational * Fraction(1)
        # each numerator bracket carries 1/(q-q^-1); net qd power must vanish
        if self.qd_pow != len(self.num_br):
            return None
        if c_eff.denominator != 1:
            return None
        c_int = int(c_eff)
        factors: dict[QExp, int] = {}
        for signs in _sign_combos(len(self.num_br)):
            shift = self.qlin
            parity = 1
            for s, (a, b) in zip(signs, self.num_br):
                shift = shift + qexp(a, b).scale(s)
                parity *= s
            e = -c_int * parity
            factors[shift] = factors.get(shift, 0) + e
        return {c: e for c, e in factors.items() if e}

    def eval_scalar(self, m: int) -> ScalarQ:
        """Exact value at a concrete mode m > 0."""
        if self.is_zero():
            return ScalarQ.from_fraction(0)
        out = ScalarQ.monomial(self.qlin.scale(m), self.rational)
        out = out * qd() ** self.qd_pow
        for a, b in self.num_br:
            out = out * _br(a, b, m)
        for a, b in self.den_br:
            out = out / _br(a, b, m)
        if self.mpow:
            out = out * Fraction(1, m**self.mpow)
        return out

    def eval_numeric(self, m: int, ctx: NumericContext) -> complex:
        if self.is_zero():
            return 0j
        import cmath

        lq = cmath.log(ctx.q)
        qdv = ctx.q - 1 / ctx.q

        def br(a, b):
            e = (float(a) + float(b) * ctx.k) * m
            return (cmath.exp(e * lq) - cmath.exp(-e * lq)) / qdv

        out = float(self.rational) * cmath.exp(complex(self.qlin.a + self.qlin.b * ctx.k) * m * lq)
        out *= qdv**self.qd_pow
        for a, b in self.num_br:
            out *= br(a, b)
        for a, b in self.den_br:
            out /= br(a, b)
        return out / m**self.mpow


def _br(a: Fraction, b: Fraction, m: int) -> ScalarQ:
    e = qexp(a * m, b * m)
    return (ScalarQ.monomial(e) - ScalarQ.monomial(-e)) / qd()


def _sign_combos(r: int):
    if r == 0:
        yield ()
        return
    for rest in _sign_combos(r - 1):
        yield (1,) + rest
        yield (-1,) + rest


# ---------------------------------------------------------------------------
# Field specifications
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Shape:
    kind: str  # 'plus' | 'minus' | 'full' | 'weighted'
    L: tuple = ()
    M: tuple = ()
    alpha: QExp = QEXP0


SHAPE_PLUS = Shape("plus")
SHAPE_MINUS = Shape("minus")
SHAPE_FULL = Shape("full")


@dataclass(frozen=True)
class FieldSpec:
    family: str
    idx: tuple
    shape: Shape
    scale: QExp = QEXP0

    def rescaled(self, gamma: QExp) -> "FieldSpec":
        return FieldSpec(self.family, self.idx, self.shape, self.scale + gamma)

    def ann_atom(self) -> ModeCoef | None:
        """Coefficient of gen_{+m} z^{-m} for m > 0."""
        k = self.shape.kind
        if k == "plus":
            return ModeCoef.make(1, qd_pow=1, qlin=-self.scale)
        if k == "minus":
            return None
        if k == "full":
            return ModeCoef.make(-1, qlin=-self.scale, den_br=(linform(1),))
        if k == "weighted":
            return ModeCoef.make(
                -1, qlin=-self.shape.alpha - self.scale,
                num_br=self.shape.L, den_br=self.shape.M + (linform(1),))
        raise ValueError(k)

    def cre_atom(self) -> ModeCoef | None:
        """Coefficient of gen_{-m} z^{+m} for m > 0."""
        k = self.shape.kind
        if k == "plus":
            return None
        if k == "minus":
            return ModeCoef.make(-1, qd_pow=1, qlin=self.scale)
        if k == "full":
            return ModeCoef.make(1, qlin=self.scale, den_br=(linform(1),))
        if k == "weighted":
            sign = (-1) ** (len(self.shape.L) + len(self.shape.M))
            return ModeCoef.make(
                sign, qlin=-self.shape.alpha + self.scale,
                num_br=self.shape.L, den_br=self.shape.M + (linform(1),))
        raise ValueError(k)

    def zero_content(self) -> tuple[KRat, KRat, KRat]:
        """(log q multiplicity, Q multiplicity, log z multiplicity).

        A field with zero modes evaluated at q^scale z carries
        gen_0 (scale log q + log z), so the scale feeds the log q slot.
        """
        k = self.shape.kind
        if k == "plus":
            return KR_ONE, KRat.const(0), KRat.const(0)
        if k == "minus":
            return -KR_ONE, KRat.const(0), KRat.const(0)
        scale_kr = KRat.linear(self.scale.a, self.scale.b)
        if k == "full":
            return scale_kr, KR_ONE, KR_ONE
        if k == "weighted":
            w = KR_ONE
            for a, b in self.shape.L:
                w = w * KRat.linear(a, b)
            for a, b in self.shape.M:
                w = w / KRat.linear(a, b)
            return w * scale_kr, w, w
        raise ValueError(k)


# ---------------------------------------------------------------------------
# FieldSum
# ---------------------------------------------------------------------------


class FieldSum:
    """Rational linear combination of field specs, one formal variable.

    Stored in a normal form with no b-family minus-shape specs: the exact
    operator identity  minus(b) = plus(b) - full(b+1) + full(b-1)  (same
    indices, argument scale b) is applied on construction, so linearly
    dependent writings of the same field collapse to one key set.  The
    a-family half fields stay primitive (they carry no conjugate pair of
    zero modes, and their arguments always match across the chain
    identities, so no rewriting is needed there).
    """

    __slots__ = ("terms",)

    def __init__(self, terms: dict[FieldSpec, Fraction] | None = None):
        self.terms = {}
        for sp, c in (terms or {}).items():
            c = Fraction(c)
            if not c:
                continue
            if sp.shape.kind == "minus" and sp.family == "b":
                one = qexp(1)
                for piece, cc in (
                    (FieldSpec(sp.family, sp.idx, SHAPE_PLUS, sp.scale), c),
                    (FieldSpec(sp.family, sp.idx, SHAPE_FULL, sp.scale + one), -c),
                    (FieldSpec(sp.family, sp.idx, SHAPE_FULL, sp.scale - one), c),
                ):
                    v = self.terms.get(piece, 0) + cc
                    if v:
                        self.terms[piece] = v
                    else:
                        self.terms.pop(piece, None)
            else:
                v = self.terms.get(sp, 0) + c
                if v:
                    self.terms[sp] = v
                else:
                    self.terms.pop(sp, None)

    @staticmethod
    def single(spec: FieldSpec, coeff=1) -> "FieldSum":
        return FieldSum({spec: Fraction(coeff)})

    def __add__(self, other: "FieldSum") -> "FieldSum":
        out = dict(self.terms)
        for sp, c in other.terms.items():
            v = out.get(sp, 0) + c
            if v:
                out[sp] = v
            else:
                out.pop(sp, None)
        return FieldSum(out)

    def __sub__(self, other: "FieldSum") -> "FieldSum":
        return self + other.scale(-1)

    def scale(self, c) -> "FieldSum":
        c = Fraction(c)
        if not c:
            return FieldSum()
        return FieldSum({sp: cc * c for sp, cc in self.terms.items()})

    def substitute_scale(self, gamma: QExp) -> "FieldSum":
        """Replace z by q^gamma z; argument scales compose additively."""
        return FieldSum({sp.rescaled(gamma): c for sp, c in self.terms.items()})

    def is_zero(self) -> bool:
        return not self.terms

    def __eq__(self, other):
        return isinstance(other, FieldSum) and self.terms == other.terms

    def key(self):
        return tuple(sorted(((sp, c) for sp, c in self.terms.items()),
                            key=lambda t: repr(t[0])))

    # -- zero-mode content ----------------------------------------------------

    def logq_mults(self) -> dict[tuple, KRat]:
        out: dict[tuple, KRat] = {}
        for sp, c in self.terms.items():
            lq, _, _ = sp.zero_content()
            if not lq.is_zero():
                _kadd(out, (sp.family, sp.idx), lq * c)
        return out

    def charge_mults(self) -> dict[tuple, KRat]:
        out: dict[tuple, KRat] = {}
        for sp, c in self.terms.items():
            _, qm, _ = sp.zero_content()
            if not qm.is_zero():
                _kadd(out, (sp.family, sp.idx), qm * c)
        return out

    def logz_mults(self) -> dict[tuple, KRat]:
        out: dict[tuple, KRat] = {}
        for sp, c in self.terms.items():
            _, _, lz = sp.zero_content()
            if not lz.is_zero():
                _kadd(out, (sp.family, sp.idx), lz * c)
        return out

    # -- concrete mode extraction ----------------------------------------------

    def modes_at(self, m: int) -> dict[tuple, ScalarQ]:
        """Coefficient of gen_m z^{-m}: map (family, idx) -> ScalarQ, m != 0."""
        if m == 0:
            raise ValueError("use the zero-mode accessors for m = 0")
        out: dict[tuple, ScalarQ] = {}
        for sp, c in self.terms.items():
            atom = sp.ann_atom() if m > 0 else sp.cre_atom()
            if atom is None:
                continue
            val = atom.eval_scalar(abs(m)) * c
            if not val.is_zero():
                key = (sp.family, sp.idx)
                out[key] = out.get(key, ScalarQ.from_fraction(0)) + val
        return {k: v for k, v in out.items() if not v.is_zero()}


def _kadd(d: dict, key, val: KRat):
    v = d.get(key, KRat.const(0)) + val
    if v.is_zero():
        d.pop(key, None)
    else:
        d[key] = v


# ---------------------------------------------------------------------------
# Field constructors
# ---------------------------------------------------------------------------


def make_field(p: AlgebraParams, family: str, idx: tuple, variant: str,
               scale: QExp = QEXP0, L=(), M=(), alpha: QExp = QEXP0) -> FieldSum:
    """One of the displayed free fields at argument q^scale z.

    variant: 'plus'/'minus' for the half fields, 'full' for the fields with
    zero modes, 'weighted' for the bracket-weighted a-type field.

    """
    if not p.valid_indices(family, idx):
        raise ValueError(f"invalid field indices {family}{idx}")
    if variant == "plus":
        shape = SHAPE_PLUS
    elif variant == "minus":
        shape = SHAPE_MINUS
    elif variant == "full":
        shape = SHAPE_FULL
    elif variant == "weighted":
        if family != "a":
            raise ValueError("weighted shape is a-type only")
        shape = Shape("weighted", tuple(L), tuple(M), alpha)
    else:
        raise ValueError(variant)
    return FieldSum.single(FieldSpec(family, idx, shape, scale))


def try_field(p: AlgebraParams, family: str, idx: tuple, variant: str,
              scale: QExp = QEXP0) -> FieldSum:
    """Like make_field but degenerate indices give the zero field."""
    if not p.valid_indices(family, idx):
        return FieldSum()
    return make_field(p, family, idx, variant, scale)


def bc_field(p: AlgebraParams, i: int, j: int, scale: QExp = QEXP0) -> FieldSum:
    """(b+c)^{i,j} at q^scale z."""
    return make_field(p, "b", (i, j), "full", scale) + make_field(p, "c", (i, j), "full", scale)


def delta_field(p: AlgebraParams, side: str, eps: str, pm: str,
                i: int, j: int, scale: QExp = QEXP0) -> FieldSum:
    """(Delta^eps_{L/R} b_pm^{i,j}) evaluated at q^scale z.

    side 'L' steps the first index, 'R' the second; eps '+'/'-' shifts the
    stepped field's argument by q^{+-1}, eps '0' uses the plus-combination.
    Index pairs that collapse (b^{i,i}) drop out, implementing the empty-sum
    degenerations at small rank.
    """
    variant = "plus" if pm == "+" else "minus"
    if side == "L":
        stepped = (i + 1, j)
    elif side == "R":
        stepped = (i, j + 1)
    else:
        raise ValueError(side)
    if eps in ("+", "-"):
        shift = qexp(1 if eps == "+" else -1)
        out = try_field(p, "b", stepped, variant, scale + shift)
        out = out - try_field(p, "b", (i, j), variant, scale)
    elif eps == "0":
        out = try_field(p, "b", stepped, variant, scale)
        out = out + try_field(p, "b", (i, j), variant, scale)
    else:
        raise ValueError(eps)
    return out


# ---------------------------------------------------------------------------
# Contraction
# ---------------------------------------------------------------------------


@dataclass
class Contraction:
    """Oscillator pairing of a left annihilation half against a right creation
    half, exponentiated: closed factors (1 - q^c x)^e plus leftover series
    atoms, together with the zero-mode cross monomial.
    """

    factors: dict[QExp, int] = field(default_factory=dict)
    series_atoms: list[ModeCoef] = field(default_factory=list)
    q_cross: KRat = None  # exponent of q from [diag, Q] crossings
    z_cross: KRat = None  # exponent of the left variable from [log z, Q]

    def __post_init__(self):
        if self.q_cross is None:
            self.q_cross = KRat.const(0)
        if self.z_cross is None:
            self.z_cross = KRat.const(0)

    @property
    def is_closed(self) -> bool:
        return not self.series_atoms

    def exponent_series(self, order: int) -> SeriesX:
        """The pairing sum_m coef(m) x^m as an exact series (oscillators only)."""
        coeffs: dict[int, ScalarQ] = {}
        for m in range(1, order + 1):
            tot = ScalarQ.from_fraction(0)
            for c, e in self.factors.items():
                # (1-q^c x)^e contributes exponent sum -e q^{cm}/m
                tot = tot + ScalarQ.monomial(c.scale(m), Fraction(-e, m))
            for atom in self.series_atoms:
                tot = tot + atom.eval_scalar(m)
            if not tot.is_zero():
                coeffs[m] = tot
        return SeriesX("x", order, coeffs)

    def prefactor_series(self, order: int) -> SeriesX:
        return self.exponent_series(order).exp()


def contract(left: FieldSum, right: FieldSum, p: AlgebraParams) -> Contraction:
    """Pair left's annihilation half against right's creation half."""
    out = Contraction()
    for sp1, c1 in left.terms.items():
        a1 = sp1.ann_atom()
        if a1 is None:
            continue
        for sp2, c2 in right.terms.items():
            a2 = sp2.cre_atom()
            if a2 is None:
                continue
            katom = _pair_atom(p, sp1, sp2)
            if katom is None:
                continue
            total = (a1 * a2 * katom).scale_rational(c1 * c2)
            if total.is_zero():
                continue
            fac = total.closed_factors()
            if fac is None:
                out.series_atoms.append(total)
            else:
                for c, e in fac.items():
                    v = out.factors.get(c, 0) + e
                    if v:
                        out.factors[c] = v
                    else:
                        out.factors.pop(c, None)
    out.q_cross, out.z_cross = zero_cross(left, right, p)
    return out


def _pair_atom(p: AlgebraParams, sp1: FieldSpec, sp2: FieldSpec) -> ModeCoef | None:
    if sp1.family != sp2.family:
        return None
    if sp1.family == "a":
        aij = p.a(sp1.idx[0], sp2.idx[0])
        if aij == 0:
            return None
        return ModeCoef.make(1, num_br=(linform(p.g, 1), linform(aij)), mpow=1)
    if sp1.idx != sp2.idx:
        return None
    nu = p.nu(sp1.idx[0]) * p.nu(sp1.idx[1])
    sign = -nu if sp1.family == "b" else nu
    return ModeCoef.make(sign, num_br=(linform(1), linform(1)), mpow=1)


def zero_cross(left: FieldSum, right: FieldSum, p: AlgebraParams) -> tuple[KRat, KRat]:
    """Crossing exponents from the left diagonal zero modes against the right
    charges: returns (q exponent, left-variable exponent), both KRat."""
    qx = KRat.const(0)
    zx = KRat.const(0)
    charges = right.charge_mults()
    if not charges:
        return qx, zx
    for (fam, idx), mult in left.logq_mults().items():
        for (fam2, idx2), cmult in charges.items():
            pairing = _zero_pair_value(p, fam, idx, fam2, idx2)
            if pairing is not None:
                qx = qx + mult * cmult * pairing
    for (fam, idx), mult in left.logz_mults().items():
        for (fam2, idx2), cmult in charges.items():
            pairing = _zero_pair_value(p, fam, idx, fam2, idx2)
            if pairing is not None:
                zx = zx + mult * cmult * pairing
    return qx, zx


def _zero_pair_value(p: AlgebraParams, fam, idx, fam2, idx2) -> KRat | None:
    if fam != fam2:
        return None
    if fam == "a":
        return KRat.linear(p.g, 1) * p.a(idx[0], idx2[0])
    if idx != idx2:
        return None
    nu = p.nu(idx[0]) * p.nu(idx[1])
    return KRat.const(-nu if fam == "b" else nu)


def brute_force_prefactor(left: FieldSum, right: FieldSum, p: AlgebraParams,
                          order: int) -> SeriesX:
    """Independent oracle: exp of the directly summed pairing series, built
    from modes_at and the commutator table, bypassing ModeCoef algebra."""
    from qcurrents.heisenberg import ModeGen, commutator

    coeffs: dict[int, ScalarQ] = {}
    for m in range(1, order + 1):
        tot = ScalarQ.from_fraction(0)
        lm = left.modes_at(m)
        rm = right.modes_at(-m)
        for (f1, i1), cl in lm.items():
            for (f2, i2), cr in rm.items():
                comm = commutator(p, ModeGen(f1, i1, m), ModeGen(f2, i2, -m))
                if not comm.is_zero():
                    tot = tot + cl * cr * comm
        if not tot.is_zero():
            coeffs[m] = tot
    return SeriesX("x", order, coeffs).exp()
