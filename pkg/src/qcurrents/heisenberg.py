"""Algebra data for sl(M|N)^: Cartan matrix, gradings, and the free-boson
commutator tables that every contraction ultimately reads from.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

from qcurrents.scalars import KRat, ScalarQ, qbracket_affine


def cartan_matrix(M: int, N: int) -> list[list[int]]:
    """Classical (M+N-1)x(M+N-1) block; entry [i-1][j-1] is A_{i,j}."""
    if M < 1 or N < 1:
        raise ValueError("need M, N >= 1")
    n = M + N - 1
    A = [[0] * n for _ in range(n)]
    for i in range(1, n + 1):
        A[i - 1][i - 1] = 2 if i < M else (0 if i == M else -2)
        if i < n:
            off = -1 if i < M else 1
            A[i - 1][i] = off
            A[i][i - 1] = off
    return A


@dataclass(frozen=True)
class AlgebraParams:
    """Rank data shared by every module: sizes, signs, Cartan pairings."""

    M: int
    N: int
    A: tuple = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "A", tuple(tuple(r) for r in cartan_matrix(self.M, self.N)))

    @property
    def g(self) -> int:
        return self.M - self.N

    @property
    def rank(self) -> int:
        return self.M + self.N - 1

    @property
    def size(self) -> int:
        return self.M + self.N

    def nu(self, i: int) -> int:
        if not 1 <= i <= self.size:
            raise ValueError(f"nu index {i} out of range")
        return 1 if i <= self.M else -1

    def a(self, i: int, j: int) -> int:
        """Cartan entry A_{i,j} on the classical block."""
        if not (1 <= i <= self.rank and 1 <= j <= self.rank):
            raise ValueError(f"Cartan index ({i},{j}) out of range")
        return self.A[i - 1][j - 1]

    def odd_pair(self, i: int, j: int) -> bool:
        return self.nu(i) * self.nu(j) == -1

    def valid_indices(self, family: str, idx: tuple) -> bool:
        if family == "a":
            return len(idx) == 1 and 1 <= idx[0] <= self.rank
        if family in ("b", "c"):
            if len(idx) != 2 or not (1 <= idx[0] < idx[1] <= self.size):
                return False
            if family == "c" and self.odd_pair(*idx):
                return False
            return True
        return False

    def current_parity(self, kind: str, i: int) -> int:
        """Z2 grading of the current families: X^{+-,M} and S_M are odd."""
        if kind in ("X+", "X-", "S"):
            return 1 if i == self.M else 0
        if kind in ("H", "Psi+", "Psi-"):
            return 0
        raise ValueError(f"unknown current kind {kind}")


@dataclass(frozen=True)
class WeightData:
    """Classical weight vector plus the bilinear-form conventions."""

    params: AlgebraParams
    l: tuple[Fraction, ...]

    def __post_init__(self):
        if len(self.l) != self.params.rank:
            raise ValueError("weight vector has wrong length")
        object.__setattr__(self, "l", tuple(Fraction(x) for x in self.l))

    def root_pairing(self, i: int, j: int) -> int:
        """(alpha_i | alpha_j) on the classical block."""
        return self.params.a(i, j)

    def weight_pairing(self, i: int, j: int) -> int:
        """(Lambda_i | alpha_j)."""
        return 1 if i == j else 0


@dataclass(frozen=True)
class ModeGen:
    """Oscillator generator: family 'a'|'b'|'c', index tuple, integer mode."""

    family: str
    idx: tuple
    m: int

    def validate(self, p: AlgebraParams) -> "ModeGen":
        if not p.valid_indices(self.family, self.idx):
            raise ValueError(f"invalid generator {self}")
        return self


@dataclass(frozen=True)
class ZeroModeGen:
    """Charge generator Q paired with the matching zero-mode boson."""

    family: str  # 'a', 'b', 'c' meaning Q_a, Q_b, Q_c
    idx: tuple

    def validate(self, p: AlgebraParams) -> "ZeroModeGen":
        if not p.valid_indices(self.family, self.idx):
            raise ValueError(f"invalid zero mode {self}")
        return self


def commutator(p: AlgebraParams, g1: ModeGen, g2: ModeGen) -> ScalarQ:
    """[g1, g2] as a central ScalarQ value (zero unless modes cancel)."""
    zero = ScalarQ.from_fraction(0)
    if g1.family != g2.family or g1.m + g2.m != 0 or g1.m == 0:
        return zero
    m = g1.m
    if g1.family == "a":
        i, j = g1.idx[0], g2.idx[0]
        aij = p.a(i, j)
        if aij == 0:
            return zero
        val = qbracket_affine(p.g, 1, m) * qbracket_affine(aij, 0, m)
        return val * Fraction(1, m)
    if g1.idx != g2.idx:
        return zero
    nu = p.nu(g1.idx[0]) * p.nu(g1.idx[1])
    sign = -nu if g1.family == "b" else nu
    return qbracket_affine(1, 0, m) ** 2 * Fraction(sign, m)


def zero_pairing(p: AlgebraParams, g: ModeGen, Q: ZeroModeGen) -> KRat:
    """[gen_0, Q] value; k-dependent for the a family, a sign for b and c."""
    if g.m != 0 or g.family != Q.family:
        return KRat.const(0)
    if g.family == "a":
        aij = p.a(g.idx[0], Q.idx[0])
        return KRat.linear(p.g, 1) * aij
    if g.idx != Q.idx:
        return KRat.const(0)
    nu = p.nu(g.idx[0]) * p.nu(g.idx[1])
    return KRat.const(-nu if g.family == "b" else nu)


def odd_exchange_sign(p: AlgebraParams, Q1: ZeroModeGen, Q2: ZeroModeGen) -> int:
    """Sign picked up exchanging e^{Q1} and e^{Q2}: -1 for distinct odd b-charges."""
    if Q1.family == Q2.family == "b" and Q1.idx != Q2.idx:
        if p.odd_pair(*Q1.idx) and p.odd_pair(*Q2.idx):
            return -1
    return 1
