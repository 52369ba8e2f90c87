"""Exact two-phase simplex over the rationals.

Solves ``max c.x  s.t.  A x <= b`` with ``x`` free. Bland's rule keeps the
method finite on degenerate problems, which are the norm here (polytopes
with equality pairs, redundant constraints through shared vertices).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

from .rational import ONE, ZERO, Q, to_q

OPTIMAL = "optimal"
UNBOUNDED = "unbounded"
INFEASIBLE = "infeasible"


@dataclass(frozen=True)
class LPResult:
    status: str
    value: Optional[object] = None
    x: Optional[tuple] = None


def _pivot(rows, obj_rows, r, col):
    prow = rows[r]
    p = prow[col]
    if p != ONE:
        prow = [v / p for v in prow]
        rows[r] = prow
    nz = [j for j, v in enumerate(prow) if v != 0]
    for i, row in enumerate(rows):
        if i == r:
            continue
        f = row[col]
        if f != 0:
            for j in nz:
                row[j] -= f * prow[j]
    for row in obj_rows:
        f = row[col]
        if f != 0:
            for j in nz:
                row[j] -= f * prow[j]


def _run(rows, basis, obj, allowed):
    """Maximize the objective row ``obj`` (reduced costs stored negated)."""
    while True:
        col = next((j for j in allowed if obj[j] < 0), None)
        if col is None:
            return OPTIMAL
        best = None
        best_ratio = None
        for i, row in enumerate(rows):
            a = row[col]
            if a > 0:
                ratio = row[-1] / a
                if (
                    best is None
                    or ratio < best_ratio
                    or (ratio == best_ratio and basis[i] < basis[best])
                ):
                    best, best_ratio = i, ratio
        if best is None:
            return UNBOUNDED
        _pivot(rows, [obj], best, col)
        basis[best] = col


def maximize(c: Sequence, A: Sequence[Sequence], b: Sequence) -> LPResult:
    n = len(c)
    m = len(A)
    c = [to_q(v) for v in c]
    if m == 0:
        if any(v != 0 for v in c):
            return LPResult(UNBOUNDED)
        return LPResult(OPTIMAL, ZERO, tuple(ZERO for _ in range(n)))

    art_rows = [i for i in range(m) if to_q(b[i]) < 0]
    n_art = len(art_rows)
    width = 2 * n + m + n_art
    rows = []
    basis = []
    art_col = {}
    for k, i in enumerate(art_rows):
        art_col[i] = 2 * n + m + k
    for i in range(m):
        a = [to_q(v) for v in A[i]]
        rhs = to_q(b[i])
        row = [ZERO] * (width + 1)
        sign = -1 if rhs < 0 else 1
        for j in range(n):
            if a[j] != 0:
                row[j] = sign * a[j]
                row[n + j] = -sign * a[j]
        row[2 * n + i] = Q(sign)
        row[-1] = sign * rhs
        if rhs < 0:
            row[art_col[i]] = ONE
            basis.append(art_col[i])
        else:
            basis.append(2 * n + i)
        rows.append(row)

    if n_art:
        # phase 1: maximize -sum(artificials)
        obj = [ZERO] * (width + 1)
        for i in art_rows:
            obj[art_col[i]] = ONE
        for i in art_rows:
            for j in range(width + 1):
                obj[j] -= rows[i][j]
        _run(rows, basis, obj, range(width))
        if obj[-1] != 0:
            return LPResult(INFEASIBLE)
        # drive remaining (zero-valued) artificials out of the basis
        for i, bcol in enumerate(basis):
            if bcol >= 2 * n + m:
                col = next(
                    (j for j in range(2 * n + m) if rows[i][j] != 0), None
                )
                if col is not None:
                    _pivot(rows, [], i, col)
                    basis[i] = col
        keep = [i for i, bcol in enumerate(basis) if bcol < 2 * n + m]
        rows = [rows[i] for i in keep]
        basis = [basis[i] for i in keep]

    limit = 2 * n + m
    obj = [ZERO] * (width + 1)
    for j in range(n):
        obj[j] = -c[j]
        obj[n + j] = c[j]
    for i, bcol in enumerate(basis):
        f = obj[bcol]
        if f != 0:
            row = rows[i]
            for j in range(width + 1):
                if row[j] != 0:
                    obj[j] -= f * row[j]
    status = _run(rows, basis, obj, range(limit))
    if status == UNBOUNDED:
        return LPResult(UNBOUNDED)
    vals = [ZERO] * width
    for i, bcol in enumerate(basis):
        vals[bcol] = rows[i][-1]
    x = tuple(vals[j] - vals[n + j] for j in range(n))
    return LPResult(OPTIMAL, obj[-1], x)


def feasible_point(A: Sequence[Sequence], b: Sequence, n: int):
    """Some point of ``{x | A x <= b}`` or ``None`` when empty."""
    res = maximize([ZERO] * n, A, b)
    if res.status == INFEASIBLE:
        return None
    return res.x
