"""Independent reference computations used by the tests.

Nothing here calls into the package's enumeration or embedding code; the
place embeddings are written out by hand per preset.
"""
import math
from fractions import Fraction
from itertools import product

import numpy as np

SQ2, SQ5 = math.sqrt(2.0), math.sqrt(5.0)


def _cubic_roots():
    r = np.roots([1, 0, -1, -1])
    real = float(r[np.argmin(np.abs(r.imag))].real)
    cplx = [z for z in r if z.imag > 1e-9][0]
    return real, complex(cplx)


_RHO, _SIGMA = _cubic_roots()

# rows: basis elements, columns: places (reals descending, then complex with Im > 0)
BASIS_EMB = {
    "Q": np.array([[1.0]], dtype=complex),
    "Qi": np.array([[1.0], [1j]]),
    "Qsqrt2": np.array([[1.0, 1.0], [SQ2, -SQ2]], dtype=complex),
    "Qsqrt5": np.array([[1.0, 1.0], [(1 + SQ5) / 2, (1 - SQ5) / 2]], dtype=complex),
    "Qcubic": np.array([[1.0, 1.0], [_RHO, _SIGMA], [_RHO ** 2, _SIGMA ** 2]]),
}
D_NU = {"Q": [1], "Qi": [2], "Qsqrt2": [1, 1], "Qsqrt5": [1, 1], "Qcubic": [1, 2]}


def embed(name, coords):
    return np.asarray(coords, dtype=float) @ BASIS_EMB[name]


def norm_form(name, coords):
    """Exact integer norm from the textbook norm forms."""
    if name == "Q":
        return coords[0]
    a, b = coords[0], coords[1]
    if name == "Qi":
        return a * a + b * b
    if name == "Qsqrt2":
        return a * a - 2 * b * b
    if name == "Qsqrt5":  # a + b (1 + sqrt5)/2
        return a * a + a * b - b * b
    raise KeyError(name)


def kronecker_char(name):
    if name == "Qi":
        return lambda d: 0 if d % 2 == 0 else (1 if d % 4 == 1 else -1)
    if name == "Qsqrt2":
        return lambda d: 0 if d % 2 == 0 else (1 if d % 8 in (1, 7) else -1)
    if name == "Qsqrt5":
        return lambda d: {0: 0, 1: 1, 4: 1, 2: -1, 3: -1}[d % 5]
    raise KeyError(name)


def ideal_count_divisor_sum(name, s):
    """Ideals of norm <= s in a quadratic class-number-one field: sum_{k<=s} sum_{d|k} chi(d)."""
    s = int(math.floor(s))
    if name == "Q":
        return s
    chi = kronecker_char(name)
    # sum_{k<=s} sum_{d|k} chi(d) = sum_{d<=s} chi(d) floor(s/d)
    return sum(chi(d) * (s // d) for d in range(1, s + 1))


def gaussian_ideal_norms(cap):
    """Norms of the nonzero ideals of Z[i] (one generator a + bi with a > 0, b >= 0)."""
    out = []
    r = int(math.isqrt(cap)) + 1
    for a in range(1, r + 1):
        for b in range(0, r + 1):
            n = a * a + b * b
            if n <= cap:
                out.append(n)
    return sorted(out)


def quasi(vals, w):
    return max(abs(v) ** (1.0 / wi) for v, wi in zip(vals, w)) if len(vals) else 0.0


def brute_count(name, theta, a, b, c, T, m=1, n=1, q_box=None, p_slack=2):
    """#{(p, q) : 1 <= ||q||_b < e^T, ||theta q + p||_a ||q||_b < c} by double loop.

    theta: (m, n, S) per-place values; a (m, S), b (n, S) weights. The
    q-box is a coordinate box checked to be large enough; p runs over a box
    around the rounded real centre of -theta q.
    """
    E = BASIS_EMB[name]
    deg, S = E.shape
    d_nu = D_NU[name]
    Mr = _real_matrix(E, d_nu)
    Minv = np.linalg.inv(Mr)
    upper = math.exp(T)
    hb = max(upper ** float(np.max(b)), 1.0)
    if q_box is None:
        q_box = int(math.ceil(hb * np.abs(Minv).sum(axis=0).max())) + 1
    total = 0
    qs = list(product(range(-q_box, q_box + 1), repeat=deg))
    q_emb = {cq: embed(name, cq) for cq in qs}
    for qcoords in product(qs, repeat=n):
        qv = np.array([q_emb[cq] for cq in qcoords])  # (n, S)
        if not np.any(np.abs(qv) > 0):
            continue
        qs_b = max(quasi(qv[j], b[j]) for j in range(n))
        if not (1 <= qs_b < upper):
            continue
        r = c / qs_b
        tq = np.einsum("ijs,js->is", theta, qv)  # (m, S)
        # p_i ranges near -theta q row i; |p_nu + tq_nu| < r^{a_nu}
        rows = []
        for i in range(m):
            centre = Minv @ _realify(-tq[i], d_nu)
            rad = max(r ** a[i][s] for s in range(S))
            span = int(math.ceil(rad * np.abs(Minv).sum(axis=1).max())) + p_slack
            rng_i = [range(int(round(ci)) - span, int(round(ci)) + span + 1) for ci in centre]
            cand = []
            for pc in product(*rng_i):
                pv = embed(name, pc) + tq[i]
                cand.append(quasi(pv, a[i]))
            rows.append(np.array(cand))
        # max over rows of the quasi-norm -> product of per-row conditions
        ok_rows = [(vals * qs_b < c) for vals in rows]
        total += int(np.prod([int(o.sum()) for o in ok_rows]))
    return total


def _realify(vals, d_nu):
    out = []
    for v, dn in zip(vals, d_nu):
        out.append(v.real)
        if dn == 2:
            out.append(v.imag)
    return np.array(out)


def _real_matrix(E, d_nu):
    cols = []
    for s, dn in enumerate(d_nu):
        cols.append(E[:, s].real)
        if dn == 2:
            cols.append(E[:, s].imag)
    return np.array(cols)  # (deg, deg): row = real coordinate, column = basis element


def partitions_exact_k(M, k):
    """Partitions of M into exactly k parts via nonincreasing tuples."""
    def rec(rem, parts, cap):
        if parts == 0:
            return 1 if rem == 0 else 0
        return sum(rec(rem - v, parts - 1, v) for v in range(1, min(cap, rem) + 1))

    return rec(M, k, M) if M >= 0 else 0


def phi_index_by_lattice(q_mult_matrix):
    """|det| of the multiplication-by-q matrix, with exact fractions."""
    A = [[Fraction(v) for v in row] for row in q_mult_matrix]
    n = len(A)
    det = Fraction(1)
    for col in range(n):
        piv = next((r for r in range(col, n) if A[r][col] != 0), None)
        if piv is None:
            return 0
        if piv != col:
            A[col], A[piv] = A[piv], A[col]
            det = -det
        det *= A[col][col]
        for r in range(col + 1, n):
            f = A[r][col] / A[col][col]
            A[r] = [x - f * y for x, y in zip(A[r], A[col])]
    return abs(int(det))
