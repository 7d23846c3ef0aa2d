"""Contraction engine against the brute-force series oracle."""

from fractions import Fraction

import pytest

from qcurrents.fields import (
    FieldSum,
    brute_force_prefactor,
    contract,
    delta_field,
    make_field,
)
from qcurrents.heisenberg import AlgebraParams
from qcurrents.scalars import KRat, QEXP0, qexp

P21 = AlgebraParams(2, 1)
P22 = AlgebraParams(2, 2)
P31 = AlgebraParams(3, 1)


def assert_matches_oracle(left, right, p, order=15):
    con = contract(left, right, p)
    assert con.prefactor_series(order) == brute_force_prefactor(left, right, p, order)
    return con


def test_bplus_against_full_b():
    left = make_field(P21, "b", (1, 2), "plus")
    right = make_field(P21, "b", (1, 2), "full")
    con = assert_matches_oracle(left, right, P21, order=20)
    # nu_1 nu_2 = +1: ((1-qx)/(1-q^-1 x))^{+1}
    assert con.factors == {qexp(1): 1, qexp(-1): -1}
    assert con.q_cross == KRat.const(-1)
    assert con.is_closed


def test_bplus_against_full_b_odd_pair():
    left = make_field(P21, "b", (1, 3), "plus")
    right = make_field(P21, "b", (1, 3), "full")
    con = assert_matches_oracle(left, right, P21, order=20)
    assert con.factors == {qexp(1): -1, qexp(-1): 1}
    assert con.q_cross == KRat.const(1)


def test_aplus_against_aminus():
    left = make_field(P21, "a", (1,), "plus")
    right = make_field(P21, "a", (1,), "minus")
    con = assert_matches_oracle(left, right, P21)
    g = P21.g
    expected = {
        qexp(g + 2, 1): 1,
        qexp(g - 2, 1): -1,
        qexp(-g + 2, -1): -1,
        qexp(-g - 2, -1): 1,
    }
    assert con.factors == expected


def test_cc_pairing_is_xi_eta_shape():
    left = make_field(P22, "c", (1, 2), "full")
    right = make_field(P22, "c", (1, 2), "full")
    con = assert_matches_oracle(left, right, P22, order=20)
    assert con.factors == {QEXP0: 1}
    assert con.z_cross == KRat.const(1)


def test_weighted_self_pairing_is_series_only():
    g = P21.g
    spec = dict(variant="weighted", L=((Fraction(1), Fraction(0)),),
                M=((Fraction(g), Fraction(1)),), alpha=qexp(Fraction(g, 2), Fraction(1, 2)))
    left = make_field(P21, "a", (1,), **spec)
    right = make_field(P21, "a", (1,), **spec)
    con = assert_matches_oracle(left, right, P21, order=6)
    assert not con.is_closed
    assert not con.factors


def test_weighted_against_half_field_closes():
    # the [( k+g)m] table factor cancels the screening weight exactly
    g = P21.g
    left = make_field(P21, "a", (1,), "weighted",
                      L=((Fraction(1), Fraction(0)),),
                      M=((Fraction(g), Fraction(1)),),
                      alpha=qexp(Fraction(g, 2), Fraction(1, 2)))
    right = make_field(P21, "a", (1,), "minus")
    con = assert_matches_oracle(left, right, P21, order=10)
    assert con.is_closed


def test_cross_family_and_cross_index_vanish():
    a = make_field(P22, "a", (1,), "plus")
    b = make_field(P22, "b", (1, 2), "full")
    con = contract(a, b, P22)
    assert not con.factors and not con.series_atoms
    b13 = make_field(P22, "b", (1, 3), "plus")
    b14 = make_field(P22, "b", (1, 4), "full")
    con = contract(b13, b14, P22)
    assert not con.factors and not con.series_atoms


def test_contract_is_bilinear():
    f1 = make_field(P21, "b", (1, 2), "plus")
    f2 = make_field(P21, "b", (1, 2), "plus", scale=qexp(1))
    g1 = make_field(P21, "b", (1, 2), "full")
    lhs = contract(f1.scale(2) + f2.scale(-3), g1, P21).exponent_series(10)
    rhs_a = contract(f1, g1, P21).exponent_series(10)
    rhs_b = contract(f2, g1, P21).exponent_series(10)
    two = rhs_a.scale(__import__("qcurrents").ScalarQ.from_fraction(2))
    neg3 = rhs_b.scale(__import__("qcurrents").ScalarQ.from_fraction(-3))
    assert lhs == two + neg3


def test_delta_field_expansion():
    # stepping the second index with eps='-' at overall scale k/2+l
    l, i = 1, 1
    got = delta_field(P21, "R", "-", "+", l, i, scale=qexp(Fraction(l), Fraction(1, 2)))
    expected = make_field(P21, "b", (1, 2), "plus", scale=qexp(Fraction(l - 1), Fraction(1, 2)))
    # the b^{1,1} summand collapses, leaving only the stepped field
    assert got == expected


def test_delta_field_both_terms():
    got = delta_field(P31, "R", "-", "+", 1, 2, scale=QEXP0)
    expected = make_field(P31, "b", (1, 3), "plus", scale=qexp(-1)) - make_field(
        P31, "b", (1, 2), "plus")
    assert got == expected


def test_delta_zero_variant_adds():
    got = delta_field(P22, "L", "0", "-", 1, 3, scale=qexp(2))
    expected = make_field(P22, "b", (2, 3), "minus", scale=qexp(2)) + make_field(
        P22, "b", (1, 3), "minus", scale=qexp(2))
    assert got == expected


def test_substitute_scale_composes():
    f = make_field(P21, "b", (1, 2), "full", scale=qexp(1))
    assert f.substitute_scale(qexp(2)) == make_field(P21, "b", (1, 2), "full", scale=qexp(3))
    assert f.substitute_scale(QEXP0) == f


def test_substitute_scale_weighted_series():
    g = P21.g
    w = make_field(P21, "a", (1,), "weighted",
                   L=((Fraction(1), Fraction(0)),),
                   M=((Fraction(g), Fraction(1)),),
                   alpha=qexp(Fraction(g, 2), Fraction(1, 2)))
    shifted = w.substitute_scale(qexp(2))
    right = make_field(P21, "a", (1,), "minus")
    base = contract(w, right, P21).exponent_series(5)
    moved = contract(shifted, right, P21).exponent_series(5)
    for m in range(1, 6):
        # coefficient gains q^{2m} under z -> q^2 z on the left
        assert moved.coeff(m) == base.coeff(m) * __import__("qcurrents").q_monomial(-2 * m)


def test_modes_at_zero_rejected():
    f = make_field(P21, "a", (1,), "plus")
    with pytest.raises(ValueError):
        f.modes_at(0)
