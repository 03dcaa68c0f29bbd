"""Exact integer linear algebra on small matrices (lists of Python ints).

Everything here works on plain nested lists so that coefficients never
overflow; the matrices involved are at most degree x degree.
"""
from __future__ import annotations

from fractions import Fraction
from math import gcd
from typing import Sequence

Matrix = list[list[int]]


def _copy(rows: Sequence[Sequence[int]]) -> Matrix:
    return [[int(v) for v in row] for row in rows]


def det_bareiss(rows: Sequence[Sequence[int]]) -> int:
    """Determinant by fraction-free Bareiss elimination."""
    a = _copy(rows)
    n = len(a)
    if n == 0:
        return 1
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
        for i in range(k + 1, n):
            for j in range(k + 1, n):
                a[i][j] = (a[i][j] * a[k][k] - a[i][k] * a[k][j]) // prev
        prev = a[k][k]
    return sign * a[n - 1][n - 1]


def hnf_rows(rows: Sequence[Sequence[int]]) -> tuple[tuple[int, ...], ...]:
    """Row Hermite normal form of the lattice spanned by ``rows``.

    Upper triangular, positive pivots, entries above each pivot reduced
    into ``[0, pivot)``. Zero rows are dropped, so the result is a
    canonical basis of the row lattice.
    """
    a = _copy(rows)
    if not a:
        return ()
    ncols = len(a[0])
    r = 0
    for col in range(ncols):
        while True:
            nz = [i for i in range(r, len(a)) if a[i][col] != 0]
            if not nz:
                break
            piv = min(nz, key=lambda i: abs(a[i][col]))
            a[r], a[piv] = a[piv], a[r]
            clean = True
            for i in range(r + 1, len(a)):
                if a[i][col]:
                    f = a[i][col] // a[r][col]
                    a[i] = [x - f * y for x, y in zip(a[i], a[r])]
                    if a[i][col]:
                        clean = False
            if clean:
                break
        if r >= len(a) or a[r][col] == 0:
            continue
        if a[r][col] < 0:
            a[r] = [-x for x in a[r]]
        for i in range(r):
            f = a[i][col] // a[r][col]
            if f:
                a[i] = [x - f * y for x, y in zip(a[i], a[r])]
        r += 1
        if r == len(a):
            break
    return tuple(tuple(row) for row in a[:r] if any(row))


def smith_diagonal(rows: Sequence[Sequence[int]]) -> list[int]:
    """Invariant factors d_1 | d_2 | ... of an integer matrix."""
    a = _copy(rows)
    m = len(a)
    n = len(a[0]) if m else 0
    diag: list[int] = []
    t = 0
    while t < min(m, n):
        entries = [(abs(a[i][j]), i, j) for i in range(t, m) for j in range(t, n) if a[i][j]]
        if not entries:
            break
        _, pi, pj = min(entries)
        a[t], a[pi] = a[pi], a[t]
        for row in a:
            row[t], row[pj] = row[pj], row[t]
        p = a[t][t]
        dirty = False
        for i in range(t + 1, m):
            f = a[i][t] // p
            if f:
                a[i] = [x - f * y for x, y in zip(a[i], a[t])]
            dirty |= a[i][t] != 0
        for j in range(t + 1, n):
            f = a[t][j] // p
            if f:
                for row in a:
                    row[j] -= f * row[t]
            dirty |= a[t][j] != 0
        if dirty:
            continue
        bad = next(((i, j) for i in range(t + 1, m) for j in range(t + 1, n) if a[i][j] % p), None)
        if bad is not None:
            a[t] = [x + y for x, y in zip(a[t], a[bad[0]])]
            continue
        diag.append(abs(p))
        t += 1
    return diag


def solve_rational(rows: Sequence[Sequence[int]], rhs: Sequence[int]) -> list[Fraction] | None:
    """Solve ``A x = b`` over Q; None when A is singular."""
    n = len(rows)
    aug = [[Fraction(v) for v in row] + [Fraction(b)] for row, b in zip(rows, rhs)]
    for col in range(n):
        piv = next((i for i in range(col, n) if aug[i][col] != 0), None)
        if piv is None:
            return None
        aug[col], aug[piv] = aug[piv], aug[col]
        inv = 1 / aug[col][col]
        aug[col] = [v * inv for v in aug[col]]
        for i in range(n):
            if i != col and aug[i][col] != 0:
                f = aug[i][col]
                aug[i] = [x - f * y for x, y in zip(aug[i], aug[col])]
    return [row[n] for row in aug]


def content(values: Sequence[int]) -> int:
    g = 0
    for v in values:
        g = gcd(g, int(v))
    return g
