"""Scalar backends and small dense linear algebra.

Two backends are supported everywhere in the package:

``"rational"``
    exact :class:`fractions.Fraction` arithmetic, determinants by
    fraction-free Bareiss elimination on an integer matrix.
``"float"``
    IEEE doubles, determinants by LU with partial pivoting (LAPACK).
"""
from __future__ import annotations

import math
from fractions import Fraction
from numbers import Rational
from typing import Iterable, Sequence

import numpy as np

RATIONAL = "rational"
FLOAT = "float"
BACKENDS = (RATIONAL, FLOAT)


def check_backend(backend: str) -> str:
    if backend not in BACKENDS:
        raise ValueError(f"unknown backend {backend!r}; expected one of {BACKENDS}")
    return backend


def parse_rational(value) -> Fraction:
    """Read an exact rational from an int, Fraction, ``"a/b"``, decimal string or ``{"num","den"}``."""
    if isinstance(value, Fraction):
        return value
    if isinstance(value, bool):
        raise TypeError("booleans are not rates")
    if isinstance(value, (int, Rational)):
        return Fraction(value)
    if isinstance(value, dict):
        return Fraction(int(value["num"]), int(value["den"]))
    if isinstance(value, (tuple, list)) and len(value) == 2:
        return Fraction(int(value[0]), int(value[1]))
    if isinstance(value, str):
        return Fraction(value.strip())
    if isinstance(value, float):
        # floats are taken at face value of their shortest repr, 0.1 -> 1/10
        return Fraction(repr(value))
    raise TypeError(f"cannot read a rational from {value!r}")


def to_scalar(value, backend: str):
    check_backend(backend)
    if backend == RATIONAL:
        return parse_rational(value)
    if isinstance(value, (str, dict, tuple, list)):
        return float(parse_rational(value))
    return float(value)


def zero(backend: str):
    return Fraction(0) if backend == RATIONAL else 0.0


def one(backend: str):
    return Fraction(1) if backend == RATIONAL else 1.0


def backend_of(x) -> str:
    return FLOAT if isinstance(x, float) else RATIONAL


def is_zero(x) -> bool:
    return x == 0


def compare(a, b, tol: float = 1e-12) -> bool:
    """Exact equality for rationals, absolute tolerance as soon as a float is involved."""
    if isinstance(a, float) or isinstance(b, float):
        return abs(float(a) - float(b)) <= tol
    return a == b


def absdiff(a, b) -> float:
    if isinstance(a, float) or isinstance(b, float):
        return abs(float(a) - float(b))
    return float(abs(Fraction(a) - Fraction(b)))


# -- determinants -----------------------------------------------------------

def _bareiss_int(rows: list[list[int]]) -> int:
    n = len(rows)
    a = [list(r) for r in rows]
    sign = 1
    prev = 1
    for k in range(n - 1):
        if a[k][k] == 0:
            for i in range(k + 1, n):
                if a[i][k] != 0:
                    a[k], a[i] = a[i], a[k]
                    sign = -sign
                    break
            else:
                return 0
        akk = a[k][k]
        rk = a[k]
        for i in range(k + 1, n):
            ri = a[i]
            aik = ri[k]
            for j in range(k + 1, n):
                ri[j] = (ri[j] * akk - aik * rk[j]) // prev
            ri[k] = 0
        prev = akk
    return sign * a[n - 1][n - 1]


def bareiss_det(matrix: Sequence[Sequence]) -> Fraction:
    """Exact determinant of a square matrix of rationals.

    Each row is scaled to integers by the lcm of its denominators, the
    integer determinant is found by Bareiss elimination and the scales are
    divided back out.
    """
    n = len(matrix)
    if n == 0:
        return Fraction(1)
    scale = 1
    rows = []
    for r in matrix:
        if len(r) != n:
            raise ValueError("matrix is not square")
        fr = [Fraction(v) for v in r]
        m = 1
        for v in fr:
            m = math.lcm(m, v.denominator)
        rows.append([v.numerator * (m // v.denominator) for v in fr])
        scale *= m
    return Fraction(_bareiss_int(rows), scale)


def lu_det(matrix) -> float:
    a = np.asarray(matrix, dtype=float)
    if a.size == 0:
        return 1.0
    return float(np.linalg.det(a))


def det(matrix, backend: str | None = None):
    if backend is None:
        backend = FLOAT if any(isinstance(v, float) for r in matrix for v in r) else RATIONAL
    if check_backend(backend) == RATIONAL:
        return bareiss_det(matrix)
    return lu_det(matrix)


def matmul(a: Sequence[Sequence], b: Sequence[Sequence]) -> list[list]:
    bt = list(zip(*b))
    return [[sum(x * y for x, y in zip(row, col)) for col in bt] for row in a]


def upper_triangular_inverse(m: Sequence[Sequence], rtol: float = 0.0) -> list[list]:
    """Inverse of an upper triangular matrix by back substitution (any field).

    With ``rtol > 0`` (floats) entries below the diagonal up to ``rtol`` times
    the largest entry are treated as rounding noise.
    """
    n = len(m)
    scale = max((abs(v) for r in m for v in r), default=0)
    for i in range(n):
        for j in range(i):
            if m[i][j] != 0 and abs(m[i][j]) > rtol * scale:
                raise ValueError("matrix is not upper triangular")
        if m[i][i] == 0:
            raise ZeroDivisionError("singular upper triangular matrix")
    zero_ = m[0][0] * 0 if n else 0
    inv = [[zero_] * n for _ in range(n)]
    for i in range(n - 1, -1, -1):
        inv[i][i] = 1 / m[i][i]
        for j in range(i + 1, n):
            s = sum(m[i][k] * inv[k][j] for k in range(i + 1, j + 1))
            inv[i][j] = -s / m[i][i]
    return inv


def identity(n: int, backend: str) -> list[list]:
    z, o = zero(backend), one(backend)
    return [[o if i == j else z for j in range(n)] for i in range(n)]


def prod(values: Iterable, start=1):
    out = start
    for v in values:
        out = out * v
    return out
