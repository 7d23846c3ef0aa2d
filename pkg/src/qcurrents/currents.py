"""Constructors for the bosonized currents: the Cartan currents, the raising
and lowering current families with their coefficient tables, the screening
currents, and the conjugate odd pair whose zero modes project onto the
Wakimoto submodule.  This module is a transcription layer: each builder
assembles the displayed normal-ordered exponential term for term.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from qcurrents.fields import FieldSum, bc_field, delta_field, make_field, try_field
from qcurrents.heisenberg import AlgebraParams
from qcurrents.scalars import (
    KRat,
    QEXP0,
    QExp,
    ScalarQ,
    q_monomial,
    qd,
    qexp,
)
from qcurrents.vertex import VertexOp

HALF = Fraction(1, 2)

# Normalization signs reconciling the engine's +-1 charge-exchange cocycle
# with the conventions the printed coefficient tables presume.  Established
# by closing the current relations over the (M, N) test matrix: no lattice
# cocycle closes them with every block at +1, while these flips close the
# whole matrix (see the relation tests and the acceptance suite).
ZETA_F1_HIGH = -1   # F^1_{i,j}       with M+1 <= i, 1 <= j <= M
ZETA_F3_LOW = -1    # F^3_{i,j}       with i <= M-1, M+1 <= j
ZETA_F3_M = -1      # F^{3,+-}_{M,j}  with M+2 <= j


def _e(a, b=0) -> QExp:
    return qexp(Fraction(a), Fraction(b))


# ---------------------------------------------------------------------------
# Coefficient table
# ---------------------------------------------------------------------------


class CoefficientTable:
    """Free coefficients c_{i,j} != 0 and the derived d- and e-tables."""

    def __init__(self, p: AlgebraParams, c_overrides: dict | None = None):
        self.p = p
        self._c: dict[tuple, ScalarQ] = {}
        for i in range(1, p.rank + 1):
            for j in range(1, i + 1):
                self._c[(i, j)] = ScalarQ.from_fraction(1)
        for key, val in (c_overrides or {}).items():
            if key not in self._c:
                raise ValueError(f"coefficient index {key} out of range")
            val = val if isinstance(val, ScalarQ) else ScalarQ.from_fraction(val)
            if val.is_zero():
                raise ValueError("coefficients must be nonzero")
            self._c[key] = val

    def c(self, i: int, j: int) -> ScalarQ:
        return self._c[(i, j)]

    def d1(self, i: int, j: int) -> ScalarQ:
        p = self.p
        M = p.M
        if 1 <= i <= M - 1 and 1 <= j <= i - 1:
            extra = ScalarQ.from_fraction(1)
        elif i == M and 1 <= j <= M - 1:
            extra = q_monomial(j - 1)
        elif M + 1 <= i <= p.rank and 1 <= j <= M:
            extra = q_monomial(-1, -1)  # q^{-k-1}
        elif M + 1 <= i <= p.rank and M + 1 <= j <= i - 1:
            extra = ScalarQ.from_fraction(1)
        else:
            raise ValueError(f"d1 index ({i},{j}) out of range")
        return extra * Fraction(p.nu(i + 1)) / self.c(i, j)

    def d2(self, i: int) -> ScalarQ:
        p = self.p
        extra = q_monomial(p.M - 1) if i == p.M else ScalarQ.from_fraction(1)
        return extra * Fraction(p.nu(i + 1)) / self.c(i, i)

    def d3(self, i: int, j: int) -> ScalarQ:
        p = self.p
        M, N = p.M, p.N
        chain = ScalarQ.from_fraction(1)
        for l in range(1, j - i):
            chain = chain * self.c(i + l, i + 1) / self.c(i + l, i)
        if 1 <= i <= M - 1 and i + 2 <= j <= M:
            extra = ScalarQ.from_fraction(1)
        elif 1 <= i <= M - 1 and M + 1 <= j <= M + N:
            extra = q_monomial(3 * M + 1 - 2 * j, 1)  # q^{k+3M+1-2j}
        elif i == M and M + 2 <= j <= M + N:
            extra = q_monomial((M - 1) * (j - M))
        elif M + 1 <= i <= p.rank and i + 2 <= j <= M + N:
            extra = ScalarQ.from_fraction(1)
        else:
            raise ValueError(f"d3 index ({i},{j}) out of range")
        return extra * Fraction(p.nu(i + 1)) * chain / self.c(i, i)

    def e(self, i: int, j: int) -> ScalarQ:
        p = self.p
        M, N = p.M, p.N
        if j == i + 1:
            if 1 <= i <= M - 1:
                return 1 / self.d2(i)
            if i == M:
                return -q_monomial(-N + 1) / self.d2(M)
            return -1 / self.d2(i)
        if 1 <= i <= M - 1 and i + 2 <= j <= M:
            return 1 / self.d3(i, j)
        if 1 <= i <= M - 1 and M + 1 <= j <= M + N:
            return q_monomial(1 + M - N, 1) / self.d3(i, j)  # q^{k+1+M-N}
        if i == M and M + 2 <= j <= M + N:
            return -q_monomial(j - M - N) / self.d3(M, j)
        if M + 1 <= i <= p.rank and i + 2 <= j <= M + N:
            return -1 / self.d3(i, j)
        raise ValueError(f"e index ({i},{j}) out of range")


# ---------------------------------------------------------------------------
# Cartan currents
# ---------------------------------------------------------------------------


@dataclass
class HCurrent:
    """The linear current (plus-branch - minus-branch) / ((q-q^-1) z)."""

    i: int
    plus: FieldSum
    minus: FieldSum
    p: AlgebraParams

    def diff(self) -> FieldSum:
        return self.plus - self.minus

    def charge(self) -> dict[tuple, KRat]:
        """The Cartan charge vector h_i: log q multiplicities of the plus branch."""
        return self.plus.logq_mults()

    def modes_at(self, m: int) -> dict[tuple, ScalarQ]:
        """Oscillator content of the Fourier mode H_m, m != 0."""
        raw = self.diff().modes_at(m)
        inv = 1 / qd()
        return {key: val * inv for key, val in raw.items()}

    def eigenvalue(self, weight: "FockWeight") -> Fraction:
        total = Fraction(0)
        for (fam, idx), mult in self.charge().items():
            fr = mult.as_fraction()
            if fr is None:
                raise ValueError("non-rational charge multiplicity")
            total += fr * weight.value(fam, idx)
        return total


# ---------------------------------------------------------------------------
# Fock weights
# ---------------------------------------------------------------------------


@dataclass
class FockWeight:
    """Highest-weight labels (p_a, p_b, p_c) with the b = -c restriction."""

    p: AlgebraParams
    pa: tuple
    pb: dict | None = None
    pc: dict | None = None

    def __post_init__(self):
        self.pa = tuple(Fraction(x) for x in self.pa)
        if len(self.pa) != self.p.rank:
            raise ValueError("weight vector has wrong length")
        self.pb = {k: Fraction(v) for k, v in (self.pb or {}).items()}
        self.pc = {k: Fraction(v) for k, v in (self.pc or {}).items()}
        for (i, j), v in self.pc.items():
            if not self.p.odd_pair(i, j) and self.pb.get((i, j), Fraction(0)) != -v:
                raise ValueError("restriction p_b = -p_c violated on an even pair")

    def value(self, fam: str, idx: tuple) -> Fraction:
        if fam == "a":
            return self.pa[idx[0] - 1]
        if fam == "b":
            return self.pb.get(idx, Fraction(0))
        return self.pc.get(idx, Fraction(0))


# ---------------------------------------------------------------------------
# Current set
# ---------------------------------------------------------------------------


class CurrentSet:
    """All constructed operators for one (M, N) and coefficient table."""

    def __init__(self, p: AlgebraParams, coeffs: CoefficientTable | None = None,
                 var: str = "z"):
        self.p = p
        self.coeffs = coeffs or CoefficientTable(p)
        self.var = var

    # -- raising building blocks ------------------------------------------------

    def E(self, i: int, j: int, variant: str) -> VertexOp:
        """E^variant_{i,j}; variant '+'/'-' where displayed, '' for the odd ones."""
        p, M, N = self.p, self.p.M, self.p.N
        v = self.var
        s = 1 if variant == "+" else -1
        if 1 <= i <= M - 1 and variant in "+-":
            if 1 <= j <= i - 1:
                f = bc_field(p, j, i, _e(j - 1))
                f = f + make_field(p, "b", (j, i + 1), "plus" if s > 0 else "minus", _e(j - 1))
                f = f - bc_field(p, j, i + 1, _e(j - 1 + s))
            elif j == i:
                f = make_field(p, "b", (i, i + 1), "plus" if s > 0 else "minus", _e(i - 1))
                f = f - bc_field(p, i, i + 1, _e(i - 1 + s))
            else:
                raise ValueError(f"E index ({i},{j},{variant}) out of range")
            for l in range(1, j):
                f = f + delta_field(p, "R", "-", "+", l, i, _e(l))
            return VertexOp.exponential(v, f)
        if i == M and variant == "":
            if 1 <= j <= M - 1:
                f = bc_field(p, j, M, _e(j - 1))
                f = f + make_field(p, "b", (j, M + 1), "full", _e(j - 1))
            elif j == M:
                f = make_field(p, "b", (M, M + 1), "full", _e(M - 1))
            else:
                raise ValueError(f"E index ({M},{j}) out of range")
            for l in range(1, j):
                f = f - delta_field(p, "R", "0", "+", l, M, _e(l))
            return VertexOp.exponential(v, f)
        if M + 1 <= i <= p.rank:
            if variant == "" and 1 <= j <= M:
                f = make_field(p, "b", (j, i), "plus", _e(j - 1))
                f = f - make_field(p, "b", (j, i), "full", _e(j))
                f = f + make_field(p, "b", (j, i + 1), "full", _e(j - 1))
                for l in range(1, j):
                    f = f - delta_field(p, "R", "+", "+", l, i, _e(l - 1))
                return VertexOp.exponential(v, f)
            if variant in "+-":
                if j == i:
                    f = make_field(p, "b", (i, i + 1), "plus" if s > 0 else "minus",
                                   _e(2 * M + 1 - i)).scale(-1)
                    f = f - bc_field(p, i, i + 1, _e(2 * M + 1 - s - i))
                    upper = i
                elif M + 1 <= j <= i - 1:
                    f = bc_field(p, j, i, _e(2 * M + 1 - j))
                    f = f - make_field(p, "b", (j, i + 1), "plus" if s > 0 else "minus",
                                       _e(2 * M + 1 - j))
                    f = f - bc_field(p, j, i + 1, _e(2 * M + 1 - s - j))
                    upper = j
                else:
                    raise ValueError(f"E index ({i},{j},{variant}) out of range")
                for l in range(1, M + 1):
                    f = f - delta_field(p, "R", "+", "+", l, i, _e(l - 1))
                for l in range(M + 1, upper):
                    f = f - delta_field(p, "R", "+", "+", l, i, _e(2 * M - l))
                return VertexOp.exponential(v, f)
        raise ValueError(f"E index ({i},{j},{variant}) out of range")

    # -- lowering building blocks -------------------------------------------------

    def F1(self, i: int, j: int, variant: str) -> VertexOp:
        p, M, N = self.p, self.p.M, self.p.N
        v = self.var
        s = 1 if variant == "+" else -1
        kg2 = qexp(-Fraction(p.g, 2), -HALF)  # -(k+g)/2
        if 1 <= i <= M - 1 and 1 <= j <= i - 1 and variant in "+-":
            f = make_field(p, "a", (i,), "minus", kg2)
            f = f + bc_field(p, j, i + 1, _e(-j, -1))
            f = f - make_field(p, "b", (j, i), "plus" if s > 0 else "minus", _e(-j, -1))
            f = f - bc_field(p, j, i, _e(-j - s, -1))
            for l in range(j + 1, i + 1):
                f = f + delta_field(p, "R", "+", "-", l, i, _e(-l, -1))
            for l in range(i + 1, M + 1):
                f = f - delta_field(p, "L", "+", "-", i, l, _e(-l, -1))
            for l in range(M + 1, M + N + 1):
                f = f - delta_field(p, "L", "+", "-", i, l, _e(-2 * M - 1 + l, -1))
            return VertexOp.exponential(v, f)
        if i == M and 1 <= j <= M - 1 and variant in "+-":
            f = make_field(p, "a", (M,), "minus", kg2)
            f = f - make_field(p, "b", (j, M), "plus" if s > 0 else "minus", _e(-j, -1))
            f = f - bc_field(p, j, M, _e(-j - s, -1))
            f = f - make_field(p, "b", (j, M + 1), "minus", _e(-j, -1))
            f = f - make_field(p, "b", (j, M + 1), "full", _e(-j + 1, -1))
            for l in range(j + 1, M):
                f = f - delta_field(p, "R", "0", "-", l, M, _e(-l, -1))
            for l in range(M + 2, M + N + 1):
                f = f + delta_field(p, "L", "0", "-", M, l, _e(-2 * M - 1 + l, -1))
            return VertexOp.exponential(v, f)
        if M + 1 <= i <= p.rank and 1 <= j <= M and variant == "":
            f = make_field(p, "a", (i,), "minus", kg2)
            f = f - make_field(p, "b", (j, i + 1), "minus", _e(-j, -1))
            f = f - make_field(p, "b", (j, i + 1), "full", _e(-j + 1, -1))
            f = f + make_field(p, "b", (j, i), "full", _e(-j, -1))
            for l in range(j + 1, M + 1):
                f = f - delta_field(p, "R", "-", "-", l, i, _e(-l + 1, -1))
            for l in range(M + 1, i + 1):
                f = f - delta_field(p, "R", "-", "-", l, i, _e(-2 * M + l, -1))
            for l in range(i + 1, M + N + 1):
                f = f + delta_field(p, "L", "-", "-", i, l, _e(-2 * M + l, -1))
            return VertexOp.exponential(v, f).scaled(ZETA_F1_HIGH)
        if M + 1 <= i <= p.rank and M + 1 <= j <= i - 1 and variant in "+-":
            f = make_field(p, "a", (i,), "minus", kg2)
            f = f + bc_field(p, j, i + 1, _e(-2 * M + j, -1))
            f = f + make_field(p, "b", (j, i), "plus" if s > 0 else "minus", _e(-2 * M + j, -1))
            f = f - bc_field(p, j, i, _e(-2 * M + s + j, -1))
            for l in range(j + 1, i + 1):
                f = f - delta_field(p, "R", "-", "-", l, i, _e(-2 * M + l, -1))
            for l in range(i + 1, M + N + 1):
                f = f + delta_field(p, "L", "-", "-", i, l, _e(-2 * M + l, -1))
            return VertexOp.exponential(v, f)
        raise ValueError(f"F1 index ({i},{j},{variant}) out of range")

    def F2(self, i: int, variant: str) -> VertexOp:
        p, M, N = self.p, self.p.M, self.p.N
        v = self.var
        s = 1 if variant == "+" else -1
        kg2 = qexp(Fraction(s * p.g, 2), Fraction(s, 2))  # +-(k+g)/2
        pm = "plus" if s > 0 else "minus"
        if 1 <= i <= M - 1:
            f = make_field(p, "a", (i,), pm, kg2)
            f = f + make_field(p, "b", (i, i + 1), pm, _e(s * (i + 1), s))
            f = f + bc_field(p, i, i + 1, _e(s * i, s))
            for l in range(i + 2, M + 1):
                f = f - delta_field(p, "L", "-" if s > 0 else "+", variant, i, l, _e(s * l, s))
            for l in range(M + 1, M + N + 1):
                f = f - delta_field(p, "L", "-" if s > 0 else "+", variant, i, l,
                                    _e(s * (2 * M + 1 - l), s))
            return VertexOp.exponential(v, f)
        if i == M:
            f = make_field(p, "a", (M,), pm, kg2)
            f = f - make_field(p, "b", (M, M + 1), "full", _e(s * (M - 1), s))
            for l in range(M + 2, M + N + 1):
                f = f + delta_field(p, "L", "0", variant, M, l, _e(s * (2 * M + 1 - l), s))
            return VertexOp.exponential(v, f)
        if M + 1 <= i <= p.rank:
            f = make_field(p, "a", (i,), pm, kg2)
            f = f - make_field(p, "b", (i, i + 1), pm, _e(s * (2 * M - 1 - i), s))
            f = f + bc_field(p, i, i + 1, _e(s * (2 * M - i), s))
            for l in range(i + 2, M + N + 1):
                f = f + delta_field(p, "L", variant, variant, i, l, _e(s * (2 * M - l), s))
            return VertexOp.exponential(v, f)
        raise ValueError(f"F2 index {i} out of range")

    def F3(self, i: int, j: int, variant: str) -> VertexOp:
        p, M, N = self.p, self.p.M, self.p.N
        v = self.var
        s = 1 if variant == "+" else -1
        kg2 = qexp(Fraction(p.g, 2), HALF)  # +(k+g)/2
        if 1 <= i <= M - 2 and i + 2 <= j <= M and variant in "+-":
            f = make_field(p, "a", (i,), "plus", kg2)
            f = f + bc_field(p, i, j, _e(j - 1, 1))
            f = f + make_field(p, "b", (i + 1, j), "plus" if s > 0 else "minus", _e(j - 1, 1))
            f = f - bc_field(p, i + 1, j, _e(j - 1 + s, 1))
            for l in range(j, M + 1):
                f = f - delta_field(p, "L", "-", "+", i, l, _e(l, 1))
            for l in range(M + 1, M + N + 1):
                f = f - delta_field(p, "L", "-", "+", i, l, _e(2 * M + 1 - l, 1))
            return VertexOp.exponential(v, f)
        if 1 <= i <= M - 1 and M + 1 <= j <= M + N and variant == "":
            f = make_field(p, "a", (i,), "plus", kg2)
            f = f - make_field(p, "b", (i, j), "full", _e(2 * M - j, 1))
            f = f - make_field(p, "b", (i + 1, j), "plus", _e(2 * M - j, 1))
            f = f + make_field(p, "b", (i + 1, j), "full", _e(2 * M + 1 - j, 1))
            for l in range(j + 1, M + N + 1):
                f = f - delta_field(p, "L", "-", "+", i, l, _e(2 * M + 1 - l, 1))
            return VertexOp.exponential(v, f).scaled(ZETA_F3_LOW)
        if i == M and M + 2 <= j <= M + N and variant in "+-":
            f = make_field(p, "a", (M,), "plus", kg2)
            f = f - make_field(p, "b", (M, j), "full", _e(2 * M - j, 1))
            f = f - make_field(p, "b", (M + 1, j), "plus" if s > 0 else "minus",
                               _e(2 * M + 1 - j, 1))
            f = f - bc_field(p, M + 1, j, _e(2 * M + 1 - s - j, 1))
            f = f + make_field(p, "b", (M + 1, j), "plus", _e(2 * M + 1 - j, 1))
            for l in range(j + 1, M + N + 1):
                f = f + delta_field(p, "L", "0", "+", M, l, _e(2 * M + 1 - l, 1))
            return VertexOp.exponential(v, f).scaled(ZETA_F3_M)
        if M + 1 <= i <= p.rank and i + 2 <= j <= M + N and variant in "+-":
            f = make_field(p, "a", (i,), "plus", kg2)
            f = f + bc_field(p, i, j, _e(2 * M + 1 - j, 1))
            f = f - make_field(p, "b", (i + 1, j), "plus" if s > 0 else "minus",
                               _e(2 * M + 1 - j, 1))
            f = f - bc_field(p, i + 1, j, _e(2 * M + 1 - s - j, 1))
            for l in range(j + 1, M + N + 1):
                f = f + delta_field(p, "L", "+", "+", i, l, _e(2 * M - l, 1))
            return VertexOp.exponential(v, f)
        raise ValueError(f"F3 index ({i},{j},{variant}) out of range")

    # -- screening building blocks ---------------------------------------------

    def weighted_a(self, i: int, alpha_num: Fraction, alpha_den: Fraction) -> FieldSum:
        """-(1/(k+g) a^i)(z; alpha) with alpha = alpha_num + alpha_den*k."""
        g = self.p.g
        return make_field(
            self.p, "a", (i,), "weighted",
            L=((Fraction(1), Fraction(0)),),
            M=((Fraction(g), Fraction(1)),),
            alpha=QExp(alpha_num, alpha_den),
        ).scale(-1)

    def screening_core(self, i: int) -> FieldSum:
        return self.weighted_a(i, Fraction(self.p.g, 2), HALF)

    def Stilde(self, i: int, j: int, variant: str) -> FieldSum:
        p, M, N = self.p, self.p.M, self.p.N
        s = 1 if variant == "+" else -1
        if 1 <= i <= M - 1 and i + 1 <= j <= M and variant in "+-":
            f = bc_field(p, i + 1, j, _e(M - N - j)) if i + 1 < j else FieldSum()
            f = f - make_field(p, "b", (i, j), "plus" if s > 0 else "minus", _e(M - N - j))
            f = f - bc_field(p, i, j, _e(M - N - j - s))
            for l in range(j + 1, M + 1):
                f = f + delta_field(p, "L", "+", "-", i, l, _e(M - N - l))
            for l in range(M + 1, M + N + 1):
                f = f + delta_field(p, "L", "+", "-", i, l, _e(-M - N + l - 1))
            return f
        if 1 <= i <= M - 1 and M + 1 <= j <= M + N and variant == "":
            f = make_field(p, "b", (i, j), "full", _e(-M - N + j))
            f = f + make_field(p, "b", (i + 1, j), "plus", _e(-M - N + j))
            f = f - make_field(p, "b", (i + 1, j), "full", _e(-M - N + j + 1))
            for l in range(j + 1, M + N + 1):
                f = f + delta_field(p, "L", "+", "-", i, l, _e(-M - N - 1 + l))
            return f
        if i == M and M + 1 <= j <= M + N and variant == "":
            f = bc_field(p, M + 1, j, _e(-M - N + j)) if M + 1 < j else FieldSum()
            f = f + make_field(p, "b", (M, j), "full", _e(-M - N + j))
            for l in range(j + 1, M + N + 1):
                f = f - delta_field(p, "L", "0", "-", M, l, _e(-M - N - 1 + l))
            return f
        if M + 1 <= i <= p.rank and i + 1 <= j <= M + N and variant in "+-":
            f = bc_field(p, i + 1, j, _e(-M - N + j)) if i + 1 < j else FieldSum()
            f = f + make_field(p, "b", (i, j), "plus" if s > 0 else "minus", _e(-M - N + j))
            f = f - bc_field(p, i, j, _e(-M - N + j + s))
            for l in range(j + 1, M + N + 1):
                f = f - delta_field(p, "L", "-", "-", i, l, _e(-M - N + l))
            return f
        raise ValueError(f"Stilde index ({i},{j},{variant}) out of range")

    def S_op(self, i: int, j: int, variant: str) -> VertexOp:
        """S^variant_{i,j} = :e^{screening core} Stilde:."""
        f = self.screening_core(i) + self.Stilde(i, j, variant)
        return VertexOp.exponential(self.var, f)

    # -- Cartan current and its exponential ---------------------------------------

    def _h_branch(self, i: int, s: int) -> FieldSum:
        """The s = +1 / -1 branch of the Cartan current exponent."""
        p, M, N = self.p, self.p.M, self.p.N
        pm = "plus" if s > 0 else "minus"
        sgn = "+" if s > 0 else "-"       # the branch's own half-field sign
        opp = "-" if s > 0 else "+"       # the opposite shift used below M
        half_g = qexp(Fraction(s * p.g, 2))
        f = make_field(p, "a", (i,), pm, half_g)
        if 1 <= i <= M - 1:
            for l in range(1, i + 1):
                f = f + delta_field(p, "R", opp, sgn, l, i, _e(s * l, Fraction(s, 2)))
            for l in range(i + 1, M + 1):
                f = f - delta_field(p, "L", opp, sgn, i, l, _e(s * l, Fraction(s, 2)))
            for l in range(M + 1, M + N + 1):
                f = f - delta_field(p, "L", opp, sgn, i, l,
                                    _e(s * (2 * M + 1 - l), Fraction(s, 2)))
        elif i == M:
            for l in range(1, M):
                f = f - delta_field(p, "R", "0", sgn, l, M, _e(s * l, Fraction(s, 2)))
            for l in range(M + 2, M + N + 1):
                f = f + delta_field(p, "L", "0", sgn, M, l,
                                    _e(s * (2 * M + 1 - l), Fraction(s, 2)))
        else:
            for l in range(1, M + 1):
                f = f - delta_field(p, "R", sgn, sgn, l, i, _e(s * (l - 1), Fraction(s, 2)))
            for l in range(M + 1, i + 1):
                f = f - delta_field(p, "R", sgn, sgn, l, i, _e(s * (2 * M - l), Fraction(s, 2)))
            for l in range(i + 1, M + N + 1):
                f = f + delta_field(p, "L", sgn, sgn, i, l, _e(s * (2 * M - l), Fraction(s, 2)))
        return f

    def H(self, i: int) -> HCurrent:
        if not 1 <= i <= self.p.rank:
            raise ValueError(f"H index {i} out of range")
        return HCurrent(i, self._h_branch(i, +1), self._h_branch(i, -1), self.p)

    def psi(self, i: int, sign: int) -> VertexOp:
        """Psi_sign^i at its displayed argument q^{sign*k/2} z.

        The content is the Cartan branch with every scale shifted by the
        argument q^{sign*k/2}; this is the reading of the definition that the
        mode-level relations force (the generating variable of the tower is
        the full displayed argument).
        """
        if not 1 <= i <= self.p.rank:
            raise ValueError(f"psi index {i} out of range")
        shifted = self._h_branch(i, sign).substitute_scale(qexp(0, Fraction(sign, 2)))
        return VertexOp.exponential(self.var, shifted)

    # -- current sums -----------------------------------------------------------

    def xplus(self, i: int) -> "VertexSum":
        p, M = self.p, self.p.M
        marker = 1 / qd()
        terms = []
        if 1 <= i <= M - 1:
            for j in range(1, i + 1):
                cc = self.coeffs.c(i, j) * marker
                terms.append(self.E(i, j, "+").scaled(cc).with_varpow(self.var, -1))
                terms.append(self.E(i, j, "-").scaled(-cc).with_varpow(self.var, -1))
        elif i == M:
            for j in range(1, M + 1):
                terms.append(self.E(M, j, "").scaled(self.coeffs.c(M, j)))
        elif M + 1 <= i <= p.rank:
            for j in range(1, M + 1):
                terms.append(self.E(i, j, "").scaled(self.coeffs.c(i, j)))
            for j in range(M + 1, i + 1):
                cc = self.coeffs.c(i, j) * marker
                terms.append(self.E(i, j, "+").scaled(cc).with_varpow(self.var, -1))
                terms.append(self.E(i, j, "-").scaled(-cc).with_varpow(self.var, -1))
        else:
            raise ValueError(f"current index {i} out of range")
        return VertexSum("X+", i, self.var, terms, p.current_parity("X+", i), 1)

    def xminus(self, i: int) -> "VertexSum":
        p, M, N = self.p, self.p.M, self.p.N
        marker = 1 / qd()
        terms = []

        def pair(op_minus, op_plus, coeff):
            cc = coeff * marker
            terms.append(op_minus.scaled(cc).with_varpow(self.var, -1))
            terms.append(op_plus.scaled(-cc).with_varpow(self.var, -1))

        if 1 <= i <= M - 1:
            for j in range(1, i):
                pair(self.F1(i, j, "-"), self.F1(i, j, "+"), self.coeffs.d1(i, j))
            pair(self.F2(i, "-"), self.F2(i, "+"), self.coeffs.d2(i))
            for j in range(i + 2, M + 1):
                pair(self.F3(i, j, "-"), self.F3(i, j, "+"), self.coeffs.d3(i, j))
            for j in range(M + 1, M + N + 1):
                terms.append(self.F3(i, j, "").scaled(self.coeffs.d3(i, j)))
        elif i == M:
            for j in range(1, M):
                pair(self.F1(M, j, "-"), self.F1(M, j, "+"), self.coeffs.d1(M, j))
            pair(self.F2(M, "-"), self.F2(M, "+"), self.coeffs.d2(M))
            for j in range(M + 2, M + N + 1):
                pair(self.F3(M, j, "-"), self.F3(M, j, "+"), self.coeffs.d3(M, j))
        elif M + 1 <= i <= p.rank:
            for j in range(1, M + 1):
                terms.append(self.F1(i, j, "").scaled(self.coeffs.d1(i, j)))
            for j in range(M + 1, i):
                pair(self.F1(i, j, "-"), self.F1(i, j, "+"), self.coeffs.d1(i, j))
            pair(self.F2(i, "-"), self.F2(i, "+"), self.coeffs.d2(i))
            for j in range(i + 2, M + N + 1):
                pair(self.F3(i, j, "-"), self.F3(i, j, "+"), self.coeffs.d3(i, j))
        else:
            raise ValueError(f"current index {i} out of range")
        return VertexSum("X-", i, self.var, terms, p.current_parity("X-", i), 1)

    def screening(self, i: int) -> "VertexSum":
        p, M, N = self.p, self.p.M, self.p.N
        marker = 1 / qd()
        terms = []
        if 1 <= i <= M - 1:
            for j in range(i + 1, M + 1):
                cc = self.coeffs.e(i, j) * marker
                terms.append(self.S_op(i, j, "-").scaled(cc).with_varpow(self.var, -1))
                terms.append(self.S_op(i, j, "+").scaled(-cc).with_varpow(self.var, -1))
            for j in range(M + 1, M + N + 1):
                terms.append(self.S_op(i, j, "").scaled(self.coeffs.e(i, j)))
        elif i == M:
            for j in range(M + 1, M + N + 1):
                terms.append(self.S_op(M, j, "").scaled(self.coeffs.e(M, j)))
        elif M + 1 <= i <= p.rank:
            for j in range(i + 1, M + N + 1):
                cc = self.coeffs.e(i, j) * marker
                terms.append(self.S_op(i, j, "-").scaled(cc).with_varpow(self.var, -1))
                terms.append(self.S_op(i, j, "+").scaled(-cc).with_varpow(self.var, -1))
        else:
            raise ValueError(f"current index {i} out of range")
        return VertexSum("S", i, self.var, terms, p.current_parity("S", i), 1)

    # -- conjugate odd pair -------------------------------------------------------

    def eta(self, i: int, j: int) -> VertexOp:
        self._check_xieta(i, j)
        return VertexOp.exponential(self.var, make_field(self.p, "c", (i, j), "full"),
                                    parity_override=1)

    def xi(self, i: int, j: int) -> VertexOp:
        self._check_xieta(i, j)
        return VertexOp.exponential(self.var,
                                    make_field(self.p, "c", (i, j), "full").scale(-1),
                                    parity_override=1)

    def _check_xieta(self, i: int, j: int):
        if not (1 <= i < j <= self.p.size - 1) or self.p.odd_pair(i, j):
            raise ValueError(f"xi/eta index ({i},{j}) out of range")

    def xieta_pairs(self) -> list[tuple[int, int]]:
        return [(i, j) for i in range(1, self.p.size) for j in range(i + 1, self.p.size)
                if not self.p.odd_pair(i, j)]


# ---------------------------------------------------------------------------
# VertexSum
# ---------------------------------------------------------------------------


@dataclass
class VertexSum:
    """A current as a finite sum of vertex operators in one variable."""

    kind: str
    index: int
    var: str
    terms: list[VertexOp]
    declared_parity: int
    mode_shift: int  # X(z) = sum_m X_m z^{-m-mode_shift}

    def relabeled(self, var: str) -> "VertexSum":
        out = []
        for t in self.terms:
            vp = {var if v == self.var else v: e for v, e in t.varpows.items()}
            ex = {var if v == self.var else v: f for v, f in t.exps.items()}
            out.append(VertexOp(t.scalar, vp, ex, t.parity_override))
        return VertexSum(self.kind, self.index, var, out, self.declared_parity,
                         self.mode_shift)

    def check_parity(self, p: AlgebraParams) -> bool:
        return all(t.parity(p) == self.declared_parity for t in self.terms)


# ---------------------------------------------------------------------------
# Highest-weight bookkeeping
# ---------------------------------------------------------------------------


def hwv_levels(op: VertexOp, w: FockWeight, var: str, max_level: int):
    """Expansion of op(var)|w>: map z-exponent -> {state key: ScalarQ}.

    State keys are (charge word, creation multiset); only levels up to
    max_level oscillator quanta are produced.
    """
    base = KRat.const(0)
    for v, e in op.varpows.items():
        if v != var:
            raise ValueError("operator depends on another variable")
        base = base + e
    f = op.exps.get(var, FieldSum())
    qeig = QEXP0
    for (fam, idx), mult in f.logq_mults().items():
        contrib = mult * w.value(fam, idx)
        qe = contrib.as_qexp()
        if qe is None:
            raise ValueError("non-representable q-eigenvalue")
        qeig = qeig + qe
    for (fam, idx), mult in f.logz_mults().items():
        base = base + mult * w.value(fam, idx)
    e0 = base.as_fraction()
    if e0 is None:
        raise ValueError("non-rational leading z-power")
    word = tuple(sorted(f.charge_mults().items()))
    scalar0 = op.scalar * ScalarQ.monomial(qeig)
    # creation content per (family, idx) and mode
    cre: dict[tuple[tuple, int], ScalarQ] = {}
    for m in range(1, max_level + 1):
        for key, val in f.modes_at(-m).items():
            cre[(key, m)] = val
    levels: dict[Fraction, dict] = {}

    def emit(level: int, multiset: tuple, coeff: ScalarQ):
        ze = e0 + level
        state = (word, multiset)
        bucket = levels.setdefault(ze, {})
        bucket[state] = bucket.get(state, ScalarQ.from_fraction(0)) + coeff

    keys = sorted(cre, key=repr)

    def rec(pos: int, level: int, chosen: list, coeff: ScalarQ):
        emit(level, tuple(chosen), coeff)
        for idx in range(pos, len(keys)):
            key = keys[idx]
            mode = key[1]
            power = 1
            c = coeff
            while level + mode * power <= max_level:
                c = c * cre[key] * Fraction(1, power)
                rec(idx + 1, level + mode * power,
                    chosen + [(key, power)], c)
                power += 1

    rec(0, 0, [], scalar0)
    return levels


def lowest_mode_on_hwv(current: VertexSum, w: FockWeight, p: AlgebraParams,
                       max_level: int = 2) -> Fraction | None:
    """Largest mode m with X_m |w> != 0, or None when every level up to the
    cap annihilates the vector (reported as 'kills through the window')."""
    total: dict[Fraction, dict] = {}
    for t in current.terms:
        for ze, states in hwv_levels(t, w, current.var, max_level).items():
            bucket = total.setdefault(ze, {})
            for state, coeff in states.items():
                bucket[state] = bucket.get(state, ScalarQ.from_fraction(0)) + coeff
    live = []
    for ze, states in total.items():
        if any(not c.is_zero() for c in states.values()):
            live.append(ze)
    if not live:
        return None
    e_min = min(live)
    # X(z) = sum X_m z^{-m-shift}: z-exponent e corresponds to mode m = -e-shift
    return -e_min - current.mode_shift
