"""Cartan data and boson commutator tables."""

from fractions import Fraction

import pytest

from qcurrents.heisenberg import (
    AlgebraParams,
    ModeGen,
    ZeroModeGen,
    cartan_matrix,
    commutator,
    odd_exchange_sign,
    zero_pairing,
)
from qcurrents.scalars import KRat, qbracket_affine, qint


def test_cartan_2_1():
    assert cartan_matrix(2, 1) == [[2, -1], [-1, 0]]


def test_cartan_1_1():
    assert cartan_matrix(1, 1) == [[0]]


def test_cartan_2_2():
    assert cartan_matrix(2, 2) == [[2, -1, 0], [-1, 0, 1], [0, 1, -2]]


@pytest.mark.parametrize("M,N", [(1, 1), (2, 1), (1, 2), (2, 2), (3, 1), (3, 2)])
def test_cartan_patterns(M, N):
    A = cartan_matrix(M, N)
    n = M + N - 1
    for i in range(1, n + 1):
        assert A[i - 1][i - 1] == (2 if i < M else 0 if i == M else -2)
    if M < M + N - 1:
        assert A[M - 1][M] == 1
    for i in range(n):
        for j in range(n):
            assert A[i][j] == A[j][i]
            if abs(i - j) > 1:
                assert A[i][j] == 0


def test_aa_commutator_matches_table():
    p = AlgebraParams(2, 1)
    got = commutator(p, ModeGen("a", (1,), 1), ModeGen("a", (1,), -1))
    assert got == qbracket_affine(1, 1, 1) * qbracket_affine(2, 0, 1)


def test_bb_commutator():
    p = AlgebraParams(2, 1)
    got = commutator(p, ModeGen("b", (1, 2), 3), ModeGen("b", (1, 2), -3))
    # -nu_1 nu_2 (1/3) [3]^2 with nu_1 nu_2 = +1
    assert got == qint(3) * qint(3) * Fraction(-1, 3)


def test_cc_commutator_sign():
    p = AlgebraParams(2, 2)
    got = commutator(p, ModeGen("c", (1, 2), 2), ModeGen("c", (1, 2), -2))
    assert got == qint(2) * qint(2) * Fraction(1, 2)


def test_cross_family_vanishes():
    p = AlgebraParams(2, 1)
    assert commutator(p, ModeGen("a", (1,), 1), ModeGen("b", (1, 2), -1)).is_zero()


def test_mode_conservation_exhaustive():
    p = AlgebraParams(2, 2)
    gens = []
    for i in range(1, p.rank + 1):
        gens.append(("a", (i,)))
    for i in range(1, p.size + 1):
        for j in range(i + 1, p.size + 1):
            gens.append(("b", (i, j)))
            if not p.odd_pair(i, j):
                gens.append(("c", (i, j)))
    for fam1, idx1 in gens:
        for fam2, idx2 in gens:
            for m in range(-5, 6):
                for n in range(-5, 6):
                    val = commutator(p, ModeGen(fam1, idx1, m), ModeGen(fam2, idx2, n))
                    if m + n != 0 or m == 0 or fam1 != fam2:
                        assert val.is_zero()
                    elif fam1 != "a" and idx1 != idx2:
                        assert val.is_zero()


def test_antisymmetry():
    p = AlgebraParams(2, 2)
    pairs = [
        (ModeGen("a", (1,), 2), ModeGen("a", (2,), -2)),
        (ModeGen("b", (1, 3), 1), ModeGen("b", (1, 3), -1)),
        (ModeGen("c", (1, 2), 4), ModeGen("c", (1, 2), -4)),
    ]
    for g1, g2 in pairs:
        assert commutator(p, g1, g2) == -commutator(p, g2, g1)


def test_screening_weight_cancellation():
    # [(k+g)m] produced by the a-a table cancels the 1/[(k+g)m] screening weight
    p = AlgebraParams(3, 1)
    b = qbracket_affine(p.g, 1, 4)
    assert (commutator(p, ModeGen("a", (1,), 4), ModeGen("a", (1,), -4)) / b) == (
        qbracket_affine(2, 0, 4) * Fraction(1, 4)
    )


def test_zero_pairing_a():
    p = AlgebraParams(2, 1)
    got = zero_pairing(p, ModeGen("a", (1,), 0), ZeroModeGen("a", (1,)))
    assert got == KRat.linear(1, 1) * 2  # (k+g) A_{1,1} with g=1


def test_zero_pairing_b_odd():
    p = AlgebraParams(2, 1)
    got = zero_pairing(p, ModeGen("b", (1, 3), 0), ZeroModeGen("b", (1, 3)))
    assert got == KRat.const(1)  # -nu_1 nu_3 = +1


def test_zero_pairing_cross_family():
    p = AlgebraParams(2, 1)
    assert zero_pairing(p, ModeGen("c", (1, 2), 0), ZeroModeGen("a", (1,))).is_zero()


def test_odd_exchange_signs():
    p = AlgebraParams(2, 1)
    q13 = ZeroModeGen("b", (1, 3))
    q23 = ZeroModeGen("b", (2, 3))
    q12 = ZeroModeGen("b", (1, 2))
    qa = ZeroModeGen("a", (1,))
    assert odd_exchange_sign(p, q13, q23) == -1
    assert odd_exchange_sign(p, q12, q13) == 1
    assert odd_exchange_sign(p, qa, q13) == 1


def test_parity_table():
    p = AlgebraParams(2, 2)
    assert p.current_parity("X+", 2) == 1
    assert p.current_parity("X+", 1) == 0
    assert p.current_parity("S", 2) == 1
    assert p.current_parity("H", 3) == 0
