"""Exact rational scalars and row normalization helpers."""

from __future__ import annotations

import math
from fractions import Fraction
from numbers import Rational
from typing import Iterable, Sequence

import gmpy2

Q = gmpy2.mpq
ZERO = Q(0)
ONE = Q(1)


def to_q(value) -> gmpy2.mpq:
    """Convert ints, floats, ``Fraction``s and ``"p/q"`` strings to an exact rational.

    Floats go through their shortest decimal repr, so ``0.1`` becomes ``1/10``
    rather than the binary expansion.
    """
    if isinstance(value, type(ONE)):
        return value
    if isinstance(value, bool):
        raise TypeError("booleans are not rationals")
    if isinstance(value, int):
        return Q(value)
    if isinstance(value, (Fraction, Rational)):
        return Q(value.numerator, value.denominator)
    if isinstance(value, float):
        if not math.isfinite(value):
            raise ValueError(f"non-finite value {value!r} has no rational form")
        return Q(repr(value))
    if isinstance(value, str):
        text = value.strip()
        if not text:
            raise ValueError("empty rational literal")
        try:
            return Q(text)
        except ValueError:
            return Q(repr(float(text)))
    if hasattr(value, "numerator") and hasattr(value, "denominator"):
        return Q(int(value.numerator), int(value.denominator))
    raise TypeError(f"cannot interpret {value!r} as a rational")


def to_fraction(q) -> Fraction:
    return Fraction(int(q.numerator), int(q.denominator))


def normalize_row(coeffs: Sequence, rhs) -> tuple[tuple, gmpy2.mpq]:
    """Scale ``coeffs . x <= rhs`` to integer coprime coefficients (positive factor)."""
    vals = [to_q(c) for c in coeffs] + [to_q(rhs)]
    den = 1
    for v in vals:
        den = math.lcm(den, int(v.denominator))
    ints = [int(v.numerator) * (den // int(v.denominator)) for v in vals]
    g = 0
    for i in ints:
        g = math.gcd(g, i)
    if g > 1:
        ints = [i // g for i in ints]
    return tuple(Q(i) for i in ints[:-1]), Q(ints[-1])


def primitive_int_vector(vec: Iterable[int]) -> tuple[int, ...]:
    vec = tuple(vec)
    g = 0
    for v in vec:
        g = math.gcd(g, v)
    if g > 1:
        return tuple(v // g for v in vec)
    return vec


def integer_row(vals: Sequence) -> list[int]:
    """Clear denominators of a rational vector (no gcd reduction)."""
    den = 1
    for v in vals:
        den = math.lcm(den, int(v.denominator))
    return [int(v.numerator) * (den // int(v.denominator)) for v in vals]


def dot(a: Sequence, b: Sequence):
    return sum((x * y for x, y in zip(a, b)), ZERO)


def rank(rows: Sequence[Sequence]) -> int:
    """Exact rank of a rational (or integer) matrix by fraction-free elimination."""
    mat = [integer_row([to_q(v) for v in r]) for r in rows]
    if not mat:
        return 0
    ncols = len(mat[0])
    r = 0
    for c in range(ncols):
        piv = next((i for i in range(r, len(mat)) if mat[i][c] != 0), None)
        if piv is None:
            continue
        mat[r], mat[piv] = mat[piv], mat[r]
        p = mat[r][c]
        for i in range(r + 1, len(mat)):
            f = mat[i][c]
            if f:
                mat[i] = [p * x - f * y for x, y in zip(mat[i], mat[r])]
        r += 1
        if r == len(mat):
            break
    return r


def rref(rows: Sequence[Sequence]) -> tuple[list[list], list[int]]:
    """Reduced row echelon form over the rationals; returns (rows, pivot columns)."""
    mat = [[to_q(v) for v in r] for r in rows]
    pivots: list[int] = []
    if not mat:
        return mat, pivots
    ncols = len(mat[0])
    r = 0
    for c in range(ncols):
        piv = next((i for i in range(r, len(mat)) if mat[i][c] != 0), None)
        if piv is None:
            continue
        mat[r], mat[piv] = mat[piv], mat[r]
        p = mat[r][c]
        mat[r] = [v / p for v in mat[r]]
        for i in range(len(mat)):
            if i != r and mat[i][c] != 0:
                f = mat[i][c]
                mat[i] = [x - f * y for x, y in zip(mat[i], mat[r])]
        pivots.append(c)
        r += 1
        if r == len(mat):
            break
    return mat[:r], pivots
