"""Ring-level checks for the exact coefficient arithmetic."""

from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qcurrents.scalars import (
    KRat,
    NumericContext,
    PoleAtSampleError,
    QExp,
    ScalarQ,
    eval_numeric,
    q_monomial,
    qbracket_affine,
    qd,
    qexp,
    qint,
)


def laurent_divide(num: dict, den: dict) -> dict:
    """Independent long-division oracle in Z[q, q^-1], one variable.

    num/den given as {power: coeff}; raises if the division is inexact.
    """
    num = dict(num)
    out: dict = {}
    dmax = max(den)
    while num:
        nmax = max(num)
        c = Fraction(num[nmax], den[dmax])
        out[nmax - dmax] = c
        for d, cd in den.items():
            v = num.get(d + nmax - dmax, 0) - c * cd
            if v:
                num[d + nmax - dmax] = v
            else:
                num.pop(d + nmax - dmax, None)
    return out


def as_qpoly(x: ScalarQ) -> dict:
    """Collapse a k-free ScalarQ into {power of q: coeff} (half-powers disallowed)."""
    assert x.den == {(0, 0): Fraction(1)}, "expected polynomial"
    out = {}
    for (eu, es), c in x.num.items():
        assert es == 0 and eu % 2 == 0
        out[eu // 2] = c
    return out


def test_qint_zero():
    assert qint(0).is_zero()


def test_qint_two():
    assert qint(2) == q_monomial(1) + q_monomial(-1)


def test_qint_minus_three_against_division_oracle():
    num = {-3: Fraction(1), 3: Fraction(-1)}
    den = {1: Fraction(1), -1: Fraction(-1)}
    expected = laurent_divide(num, den)
    assert as_qpoly(qint(-3)) == expected
    assert qint(-3) == -(q_monomial(2) + 1 + q_monomial(-2))


@pytest.mark.parametrize("n", range(-20, 21))
def test_qint_defining_identity(n):
    assert qint(n) * qd() + q_monomial(-n) == q_monomial(n)


def test_qbracket_affine_g_shift():
    # [(k+g)m]_q at g=1, m=1: (s^2 q - s^-2 q^-1)/(q - q^-1)
    got = qbracket_affine(1, 1, 1)
    expected = (q_monomial(1, 1) - q_monomial(-1, -1)) / qd()
    assert got == expected


def test_qbracket_affine_reduces_to_qint():
    assert qbracket_affine(2, 0, 1) == qint(2)
    assert qbracket_affine(1, 1, 2) == (q_monomial(2, 2) - q_monomial(-2, -2)) / qd()


def test_eval_qint():
    ctx = NumericContext(q=0.5, k=2.0)
    assert abs(eval_numeric(qint(2), ctx) - 2.5) < 1e-12


def test_eval_monomial():
    ctx = NumericContext(q=0.5, k=2.0)
    val = eval_numeric(ScalarQ.monomial(qexp(1, 1)), ctx)
    assert abs(val - 0.125) < 1e-12


def test_eval_affine_bracket():
    # [(k+g)]_q at q=0.5, k=1, g=1: (q^2 - q^-2)/(q - q^-1)
    ctx = NumericContext(q=0.5, k=1.0)
    val = eval_numeric(qbracket_affine(1, 1, 1), ctx)
    assert abs(val - (0.25 - 4.0) / (0.5 - 2.0)) < 1e-12


def test_pole_detection():
    ctx = NumericContext(q=0.5, k=0.0)
    bad = 1 / (q_monomial(0, 1) - 1)  # 1/(s^2-1) vanishes at k=0
    with pytest.raises(PoleAtSampleError):
        eval_numeric(bad, ctx)


def small_scalars():
    mono = st.tuples(st.integers(-3, 3), st.integers(-2, 2), st.integers(-4, 4))
    return st.lists(mono, min_size=0, max_size=3).map(
        lambda ms: sum(
            (ScalarQ.monomial(qexp(a, b), c) for a, b, c in ms),
            ScalarQ.from_fraction(0),
        )
    )


@settings(max_examples=60, deadline=None)
@given(small_scalars(), small_scalars(), small_scalars())
def test_ring_axioms(x, y, z):
    assert (x + y) * z == x * z + y * z
    assert (x * y) * z == x * (y * z)
    assert x + y == y + x
    assert x * y == y * x


@settings(max_examples=40, deadline=None)
@given(small_scalars(), small_scalars())
def test_eval_is_ring_homomorphism(x, y):
    ctx = NumericContext(q=0.4 + 0.1j, k=1.3 - 0.2j)
    fx, fy = eval_numeric(x, ctx), eval_numeric(y, ctx)
    scale = max(1.0, abs(fx), abs(fy))
    assert abs(eval_numeric(x + y, ctx) - (fx + fy)) < 1e-12 * scale
    assert abs(eval_numeric(x * y, ctx) - fx * fy) < 1e-12 * scale * scale


def test_fraction_cancellation_is_exact():
    b = qbracket_affine(1, 1, 3)
    assert (b / b) == 1
    assert ((b * qint(2)) / b) == qint(2)


def test_krat_arithmetic():
    kg = KRat.linear(1, 1)  # k + 1
    w = KRat.const(1) / kg
    assert (w * kg) == KRat.const(1)
    assert (kg * 2 - kg) == kg
    assert w.as_qexp() is None
    assert KRat.linear(Fraction(1, 2), Fraction(-3, 2)).as_qexp() == qexp(Fraction(1, 2), Fraction(-3, 2))


def test_krat_eval():
    w = KRat.const(1) / KRat.linear(2, 1)
    assert abs(w.eval(3.0) - 0.2) < 1e-14


def test_qexp_arithmetic():
    e = qexp(Fraction(1, 2), 1) + qexp(1, Fraction(-1, 2))
    assert e == qexp(Fraction(3, 2), Fraction(1, 2))
    assert e.scale(2) == qexp(3, 1)
    with pytest.raises(ValueError):
        QExp(Fraction(1, 3), Fraction(0))
