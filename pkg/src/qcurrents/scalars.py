"""Exact coefficient arithmetic: Laurent fractions in u = q^(1/2), s = q^(k/2).

Every exponent used by the current algebra lies in (1/2)Z + (1/2)Z*k, so a
monomial q^(a+b*k) embeds as u^(2a) s^(2b) with integer powers.  Values are
fractions of Laurent polynomials with exact rational coefficients.  Equality
is decided by cross multiplication, so intermediate results never need a
multivariate gcd; fractions still collapse whenever the denominator divides
the numerator exactly, which covers the bracket-ratio cancellations such as
[(k+g)m]/[(k+g)m].
"""

from __future__ import annotations

import cmath
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterator

HALF = Fraction(1, 2)

# ---------------------------------------------------------------------------
# Laurent polynomial plumbing: dict {exponent tuple: Fraction}, zero == {}.
# ---------------------------------------------------------------------------


def _lp_add(a: dict, b: dict) -> dict:
    out = dict(a)
    for e, c in b.items():
        v = out.get(e, 0) + c
        if v:
            out[e] = v
        else:
            out.pop(e, None)
    return out


def _lp_neg(a: dict) -> dict:
    return {e: -c for e, c in a.items()}


def _lp_scale(a: dict, c: Fraction) -> dict:
    if not c:
        return {}
    return {e: cc * c for e, cc in a.items()}


def _lp_mul(a: dict, b: dict) -> dict:
    if len(a) > len(b):
        a, b = b, a
    out: dict = {}
    for ea, ca in a.items():
        for eb, cb in b.items():
            e = tuple(x + y for x, y in zip(ea, eb))
            v = out.get(e, 0) + ca * cb
            if v:
                out[e] = v
            else:
                out.pop(e, None)
    return out


def _lp_mono_shift(a: dict, shift: tuple) -> dict:
    return {tuple(x + y for x, y in zip(e, shift)): c for e, c in a.items()}


def _lp_min_exp(a: dict) -> tuple:
    n = len(next(iter(a)))
    return tuple(min(e[i] for e in a) for i in range(n))


def _lp_content(a: dict) -> Fraction:
    """Positive rational content; sign chosen so the lex-largest term is positive."""
    num = 0
    den = 1
    for c in a.values():
        num = _gcd_int(num, c.numerator)
        den = _lcm_int(den, c.denominator)
    cont = Fraction(num, den)
    if a[max(a)] < 0:
        cont = -cont
    return cont


def _gcd_int(a: int, b: int) -> int:
    a, b = abs(a), abs(b)
    while b:
        a, b = b, a % b
    return a


def _lcm_int(a: int, b: int) -> int:
    return a * b // _gcd_int(a, b) if a and b else max(a, b)


def _lp_divexact(a: dict, b: dict) -> dict | None:
    """Quotient a/b when exact, else None.  Handles Laurent input via shifts."""
    if not a:
        return {}
    sa, sb = _lp_min_exp(a), _lp_min_exp(b)
    a = _lp_mono_shift(a, tuple(-x for x in sa))
    b = _lp_mono_shift(b, tuple(-x for x in sb))
    lead_b = max(b)
    cb = b[lead_b]
    quot: dict = {}
    rem = dict(a)
    # lex-ordered exact division in the shifted polynomial ring
    steps = 0
    limit = 4 * (len(a) + 1) * (len(b) + 1) + 64
    while rem:
        steps += 1
        if steps > limit:
            return None
        lead_r = max(rem)
        e = tuple(x - y for x, y in zip(lead_r, lead_b))
        if any(x < 0 for x in e):
            return None
        c = rem[lead_r] / cb
        quot[e] = c
        for eb, cbb in b.items():
            ee = tuple(x + y for x, y in zip(e, eb))
            v = rem.get(ee, 0) - c * cbb
            if v:
                rem[ee] = v
            else:
                rem.pop(ee, None)
    shift = tuple(x - y for x, y in zip(sa, sb))
    return _lp_mono_shift(quot, shift)


def _lp_eval(a: dict, logs: tuple[complex, ...]) -> complex:
    """Evaluate with logs[i] = log of variable i."""
    tot = 0j
    for e, c in a.items():
        tot += float(c) * cmath.exp(sum(x * l for x, l in zip(e, logs)))
    return tot


# ---------------------------------------------------------------------------
# q-exponents
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class QExp:
    """A monomial exponent q^(a + b*k) with half-integral a, b."""

    a: Fraction
    b: Fraction

    def __post_init__(self):
        object.__setattr__(self, "a", Fraction(self.a))
        object.__setattr__(self, "b", Fraction(self.b))
        if (2 * self.a).denominator != 1 or (2 * self.b).denominator != 1:
            raise ValueError(f"exponent {self.a}+{self.b}k is not half-integral")

    def __add__(self, other: "QExp") -> "QExp":
        return QExp(self.a + other.a, self.b + other.b)

    def __sub__(self, other: "QExp") -> "QExp":
        return QExp(self.a - other.a, self.b - other.b)

    def __neg__(self) -> "QExp":
        return QExp(-self.a, -self.b)

    def scale(self, c) -> "QExp":
        return QExp(self.a * Fraction(c), self.b * Fraction(c))

    def is_zero(self) -> bool:
        return self.a == 0 and self.b == 0

    def eval(self, ctx: "NumericContext") -> complex:
        return cmath.exp(complex(self.a + self.b * ctx.k) * cmath.log(ctx.q))

    def __repr__(self):
        if self.b == 0:
            return f"q^{self.a}"
        return f"q^({self.a}{'+' if self.b > 0 else '-'}{abs(self.b)}k)"


QEXP0 = QExp(Fraction(0), Fraction(0))


def qexp(a=0, b=0) -> QExp:
    return QExp(Fraction(a), Fraction(b))


# ---------------------------------------------------------------------------
# ScalarQ: fractions num/den of Laurent polynomials in (u, s)
# ---------------------------------------------------------------------------


class ScalarQ:
    """Element of Q(u, s).  Immutable; all arithmetic returns new values."""

    __slots__ = ("num", "den")

    def __init__(self, num: dict, den: dict | None = None, _normalized: bool = False):
        if den is None:
            den = {(0, 0): Fraction(1)}
        if not den:
            raise ZeroDivisionError("ScalarQ with zero denominator")
        if not _normalized:
            num, den = self._normalize(num, den)
        self.num = num
        self.den = den

    # -- construction helpers ------------------------------------------------

    @staticmethod
    def from_fraction(c) -> "ScalarQ":
        c = Fraction(c)
        return ScalarQ({(0, 0): c} if c else {}, None, _normalized=True)

    @staticmethod
    def monomial(e: QExp, coeff=1) -> "ScalarQ":
        c = Fraction(coeff)
        if not c:
            return SQ_ZERO
        return ScalarQ({(int(2 * e.a), int(2 * e.b)): c}, None, _normalized=True)

    @staticmethod
    def _normalize(num: dict, den: dict) -> tuple[dict, dict]:
        if not num:
            return {}, {(0, 0): Fraction(1)}
        if len(den) == 1:
            (e, c), = den.items()
            num = _lp_mono_shift(num, tuple(-x for x in e))
            num = _lp_scale(num, 1 / c)
            return num, {(0, 0): Fraction(1)}
        q = _lp_divexact(num, den)
        if q is not None:
            return q, {(0, 0): Fraction(1)}
        cont = _lp_content(den)
        shift = _lp_min_exp(den)
        den = _lp_scale(_lp_mono_shift(den, tuple(-x for x in shift)), 1 / cont)
        num = _lp_scale(_lp_mono_shift(num, tuple(-x for x in shift)), 1 / cont)
        return num, den

    # -- arithmetic ----------------------------------------------------------

    def __add__(self, other) -> "ScalarQ":
        other = _coerce(other)
        if self.den == other.den:
            return ScalarQ(_lp_add(self.num, other.num), dict(self.den))
        num = _lp_add(_lp_mul(self.num, other.den), _lp_mul(other.num, self.den))
        return ScalarQ(num, _lp_mul(self.den, other.den))

    def __radd__(self, other):
        return self.__add__(other)

    def __neg__(self) -> "ScalarQ":
        return ScalarQ(_lp_neg(self.num), dict(self.den), _normalized=True)

    def __sub__(self, other) -> "ScalarQ":
        return self + (-_coerce(other))

    def __rsub__(self, other):
        return _coerce(other) + (-self)

    def __mul__(self, other) -> "ScalarQ":
        other = _coerce(other)
        n1, d1, n2, d2 = self.num, self.den, other.num, other.den
        # cheap cross cancellation before multiplying out
        q = _lp_divexact(n1, d2)
        if q is not None:
            n1, d2 = q, {(0, 0): Fraction(1)}
        q = _lp_divexact(n2, d1)
        if q is not None:
            n2, d1 = q, {(0, 0): Fraction(1)}
        return ScalarQ(_lp_mul(n1, n2), _lp_mul(d1, d2))

    def __rmul__(self, other):
        return self.__mul__(other)

    def __truediv__(self, other) -> "ScalarQ":
        other = _coerce(other)
        if not other.num:
            raise ZeroDivisionError("division by zero ScalarQ")
        return self * ScalarQ(dict(other.den), dict(other.num))

    def __rtruediv__(self, other):
        return _coerce(other) / self

    def __pow__(self, n: int) -> "ScalarQ":
        if n < 0:
            return (SQ_ONE / self) ** (-n)
        out = SQ_ONE
        base = self
        while n:
            if n & 1:
                out = out * base
            base = base * base
            n >>= 1
        return out

    def __eq__(self, other) -> bool:
        if isinstance(other, (int, Fraction)):
            other = ScalarQ.from_fraction(other)
        if not isinstance(other, ScalarQ):
            return NotImplemented
        return _lp_mul(self.num, other.den) == _lp_mul(other.num, self.den)

    def __hash__(self):
        raise TypeError("ScalarQ is not hashable; compare canonically instead")

    # -- queries -------------------------------------------------------------

    def is_zero(self) -> bool:
        return not self.num

    def as_fraction(self) -> Fraction | None:
        """The value as a rational constant, or None if it depends on u, s."""
        if not self.num:
            return Fraction(0)
        if self.den == {(0, 0): Fraction(1)} and len(self.num) == 1 and (0, 0) in self.num:
            return self.num[(0, 0)]
        q = _lp_divexact(self.num, self.den)
        if q is not None and len(q) == 1 and (0, 0) in q:
            return q[(0, 0)]
        return None

    def as_monomial(self) -> tuple[Fraction, QExp] | None:
        """Decompose as coeff * q^e when the value is a single monomial."""
        q = self.num if self.den == {(0, 0): Fraction(1)} else _lp_divexact(self.num, self.den)
        if q is None or len(q) != 1:
            return None
        (e, c), = q.items()
        return c, QExp(Fraction(e[0], 2), Fraction(e[1], 2))

    def eval(self, ctx: "NumericContext") -> complex:
        lu = 0.5 * cmath.log(ctx.q)
        logs = (lu, complex(ctx.k) * lu)
        d = _lp_eval(self.den, logs)
        if abs(d) < 1e-300:
            raise PoleAtSampleError(f"denominator vanishes at q={ctx.q}, k={ctx.k}")
        return _lp_eval(self.num, logs) / d

    def __repr__(self):
        return f"(({_lp_str(self.num)})/({_lp_str(self.den)}))" if self.den != {(0, 0): Fraction(1)} else f"({_lp_str(self.num)})"


def _coerce(x) -> ScalarQ:
    if isinstance(x, ScalarQ):
        return x
    if isinstance(x, (int, Fraction)):
        return ScalarQ.from_fraction(x)
    raise TypeError(f"cannot coerce {type(x)} to ScalarQ")


def _lp_str(a: dict) -> str:
    if not a:
        return "0"
    parts = []
    for e in sorted(a, key=lambda t: (t[1], t[0]), reverse=True):
        c = a[e]
        mon = []
        if e[0]:
            mon.append(f"u^{e[0]}" if e[0] != 1 else "u")
        if e[1]:
            mon.append(f"s^{e[1]}" if e[1] != 1 else "s")
        body = "*".join(mon)
        if not body:
            parts.append(str(c))
        elif c == 1:
            parts.append(body)
        elif c == -1:
            parts.append("-" + body)
        else:
            parts.append(f"{c}*{body}")
    out = parts[0]
    for p in parts[1:]:
        out += ("+" + p) if not p.startswith("-") else p
    return out


SQ_ZERO = ScalarQ.from_fraction(0)
SQ_ONE = ScalarQ.from_fraction(1)


def q_monomial(a, b=0, coeff=1) -> ScalarQ:
    """q^(a+b*k) times a rational coefficient."""
    return ScalarQ.monomial(qexp(a, b), coeff)


def qd() -> ScalarQ:
    """q - q^(-1), the ubiquitous bracket denominator."""
    return q_monomial(1) - q_monomial(-1)


def qint(n: int) -> ScalarQ:
    """[n]_q = (q^n - q^(-n)) / (q - q^(-1)) as a Laurent polynomial."""
    return (q_monomial(n) - q_monomial(-n)) / qd()


def qbracket_affine(c_int: int, c_k: int, m: int) -> ScalarQ:
    """[(c_int + c_k*k) m]_q expressed in u, s."""
    e = qexp(c_int * m, c_k * m)
    return (ScalarQ.monomial(e) - ScalarQ.monomial(-e)) / qd()


def qbracket(e: QExp) -> ScalarQ:
    """[x]_q for the exponent x = a + b*k carried by e."""
    return (ScalarQ.monomial(e) - ScalarQ.monomial(-e)) / qd()


# ---------------------------------------------------------------------------
# KRat: rational functions of the level symbol k, used for zero-mode weights
# ---------------------------------------------------------------------------


def _up_trim(p: dict) -> dict:
    return {d: c for d, c in p.items() if c}


def _up_mul(a: dict, b: dict) -> dict:
    out: dict = {}
    for da, ca in a.items():
        for db, cb in b.items():
            d = da + db
            v = out.get(d, 0) + ca * cb
            if v:
                out[d] = v
            else:
                out.pop(d, None)
    return out


def _up_add(a: dict, b: dict) -> dict:
    out = dict(a)
    for d, c in b.items():
        v = out.get(d, 0) + c
        if v:
            out[d] = v
        else:
            out.pop(d, None)
    return out


def _up_gcd(a: dict, b: dict) -> dict:
    while b:
        # remainder of a by b
        a = dict(a)
        db = max(b)
        cb = b[db]
        while a and max(a) >= db:
            da = max(a)
            f = a[da] / cb
            for d, c in b.items():
                dd = d + da - db
                v = a.get(dd, 0) - f * c
                if v:
                    a[dd] = v
                else:
                    a.pop(dd, None)
        a, b = b, a
    if not a:
        return {0: Fraction(1)}
    lead = a[max(a)]
    return {d: c / lead for d, c in a.items()}


class KRat:
    """Rational function of k with exact coefficients, always reduced."""

    __slots__ = ("num", "den")

    def __init__(self, num: dict, den: dict | None = None):
        den = den or {0: Fraction(1)}
        num = _up_trim(num)
        den = _up_trim(den)
        if not den:
            raise ZeroDivisionError("KRat with zero denominator")
        if num:
            g = _up_gcd(num, den)
            if g != {0: Fraction(1)}:
                num = _up_divexact(num, g)
                den = _up_divexact(den, g)
            lead = den[max(den)]
            if lead != 1:
                num = {d: c / lead for d, c in num.items()}
                den = {d: c / lead for d, c in den.items()}
        else:
            den = {0: Fraction(1)}
        self.num = num
        self.den = den

    @staticmethod
    def const(c) -> "KRat":
        c = Fraction(c)
        return KRat({0: c} if c else {})

    @staticmethod
    def linear(a, b) -> "KRat":
        """a + b*k."""
        out = {}
        if Fraction(a):
            out[0] = Fraction(a)
        if Fraction(b):
            out[1] = Fraction(b)
        return KRat(out)

    def __add__(self, other):
        other = _kcoerce(other)
        return KRat(_up_add(_up_mul(self.num, other.den), _up_mul(other.num, self.den)),
                    _up_mul(self.den, other.den))

    __radd__ = __add__

    def __neg__(self):
        return KRat({d: -c for d, c in self.num.items()}, dict(self.den))

    def __sub__(self, other):
        return self + (-_kcoerce(other))

    def __rsub__(self, other):
        return _kcoerce(other) + (-self)

    def __mul__(self, other):
        other = _kcoerce(other)
        return KRat(_up_mul(self.num, other.num), _up_mul(self.den, other.den))

    __rmul__ = __mul__

    def __truediv__(self, other):
        other = _kcoerce(other)
        if not other.num:
            raise ZeroDivisionError
        return KRat(_up_mul(self.num, other.den), _up_mul(self.den, other.num))

    def __eq__(self, other):
        other = _kcoerce(other)
        return self.num == other.num and self.den == other.den

    def __hash__(self):
        return hash((tuple(sorted(self.num.items())), tuple(sorted(self.den.items()))))

    def is_zero(self) -> bool:
        return not self.num

    def as_fraction(self) -> Fraction | None:
        if not self.num:
            return Fraction(0)
        if self.den == {0: Fraction(1)} and set(self.num) == {0}:
            return self.num[0]
        return None

    def as_qexp(self) -> QExp | None:
        """Reinterpret a + b*k as the exponent of q^(a+b*k), if that shape fits."""
        if self.den != {0: Fraction(1)}:
            return None
        if any(d > 1 for d in self.num):
            return None
        a = self.num.get(0, Fraction(0))
        b = self.num.get(1, Fraction(0))
        if (2 * a).denominator != 1 or (2 * b).denominator != 1:
            return None
        return QExp(a, b)

    def eval(self, k: complex) -> complex:
        n = sum(float(c) * k**d for d, c in self.num.items())
        d = sum(float(c) * k**e for e, c in self.den.items())
        return n / d

    def __repr__(self):
        def side(p):
            return "+".join(f"{c}k^{d}" if d else str(c) for d, c in sorted(p.items())) or "0"
        if self.den == {0: Fraction(1)}:
            return side(self.num)
        return f"({side(self.num)})/({side(self.den)})"


def _up_divexact(a: dict, b: dict) -> dict:
    out: dict = {}
    a = dict(a)
    db = max(b)
    cb = b[db]
    while a:
        da = max(a)
        if da < db:
            raise ArithmeticError("inexact univariate division")
        f = a[da] / cb
        out[da - db] = f
        for d, c in b.items():
            dd = d + da - db
            v = a.get(dd, 0) - f * c
            if v:
                a[dd] = v
            else:
                a.pop(dd, None)
    return out


def _kcoerce(x) -> KRat:
    if isinstance(x, KRat):
        return x
    if isinstance(x, (int, Fraction)):
        return KRat.const(x)
    raise TypeError(f"cannot coerce {type(x)} to KRat")


KR_ZERO = KRat.const(0)
KR_ONE = KRat.const(1)


# ---------------------------------------------------------------------------
# Numeric evaluation context and truncated series
# ---------------------------------------------------------------------------


class PoleAtSampleError(ArithmeticError):
    pass


@dataclass(frozen=True)
class NumericContext:
    q: complex
    k: complex
    truncation: int = 40

    def __post_init__(self):
        if not 0 < abs(self.q) < 1:
            raise ValueError("need 0 < |q| < 1")


def eval_numeric(x: ScalarQ, ctx: NumericContext) -> complex:
    return x.eval(ctx)


class SeriesX:
    """Truncated power series in one formal variable with ScalarQ coefficients.

    Only integer powers of x are stored; everything beyond `order` is dropped.
    """

    __slots__ = ("var", "order", "coeffs")

    def __init__(self, var: str, order: int, coeffs: dict[int, ScalarQ] | None = None):
        self.var = var
        self.order = order
        self.coeffs = {}
        for m, c in (coeffs or {}).items():
            if m <= order and not c.is_zero():
                self.coeffs[m] = c

    @staticmethod
    def one(var: str, order: int) -> "SeriesX":
        return SeriesX(var, order, {0: SQ_ONE})

    def __add__(self, other: "SeriesX") -> "SeriesX":
        order = min(self.order, other.order)
        out = dict(self.coeffs)
        for m, c in other.coeffs.items():
            out[m] = out.get(m, SQ_ZERO) + c
        return SeriesX(self.var, order, out)

    def __mul__(self, other: "SeriesX") -> "SeriesX":
        order = min(self.order, other.order)
        out: dict[int, ScalarQ] = {}
        for m1, c1 in self.coeffs.items():
            for m2, c2 in other.coeffs.items():
                m = m1 + m2
                if m <= order:
                    out[m] = out.get(m, SQ_ZERO) + c1 * c2
        return SeriesX(self.var, order, out)

    def scale(self, c: ScalarQ) -> "SeriesX":
        return SeriesX(self.var, self.order, {m: cc * c for m, cc in self.coeffs.items()})

    def exp(self) -> "SeriesX":
        """exp of a series with no constant term."""
        if 0 in self.coeffs:
            raise ValueError("exp needs vanishing constant term")
        out = SeriesX.one(self.var, self.order)
        term = SeriesX.one(self.var, self.order)
        for j in range(1, self.order + 1):
            term = term * self
            if not term.coeffs:
                break
            out = out + term.scale(ScalarQ.from_fraction(Fraction(1, _factorial(j))))
        return out

    def coeff(self, m: int) -> ScalarQ:
        return self.coeffs.get(m, SQ_ZERO)

    def __eq__(self, other):
        order = min(self.order, other.order)
        keys = set(self.coeffs) | set(other.coeffs)
        return all(self.coeff(m) == other.coeff(m) for m in keys if m <= order)

    def __repr__(self):
        return f"SeriesX({self.var}, N={self.order}, {len(self.coeffs)} terms)"


def _factorial(n: int) -> int:
    out = 1
    for i in range(2, n + 1):
        out *= i
    return out
