"""Symbolic engine for q-deformed free-boson current algebras."""

from qcurrents.scalars import (
    KRat,
    NumericContext,
    QExp,
    ScalarQ,
    SeriesX,
    eval_numeric,
    q_monomial,
    qbracket_affine,
    qd,
    qexp,
    qint,
)

__all__ = [
    "KRat",
    "NumericContext",
    "QExp",
    "ScalarQ",
    "SeriesX",
    "eval_numeric",
    "q_monomial",
    "qbracket_affine",
    "qd",
    "qexp",
    "qint",
]

__version__ = "0.1.0"
