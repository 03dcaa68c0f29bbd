"""numba-compiled inner loops. Signatures mirror ``_numpy``."""
import math

import numpy as np
from numba import njit


@njit(cache=True, nogil=True)
def _advance(cur, lo, hi):
    k = cur.shape[0] - 1
    while k >= 0:
        if cur[k] < hi[k]:
            cur[k] += 1
            return True
        cur[k] = lo[k]
        k -= 1
    return False


@njit(cache=True, nogil=True)
def _inside(cur, mr, dim_place, sq, limit_sq):
    deg = cur.shape[0]
    sq[:] = 0.0
    for r in range(deg):
        v = 0.0
        for k in range(deg):
            v += mr[r, k] * cur[k]
        sq[dim_place[r]] += v * v
    for nu in range(sq.shape[0]):
        if sq[nu] > limit_sq:
            return False
    return True


@njit(cache=True, nogil=True)
def box_filter(lo, hi, mr, dim_place, n_places, limit_sq):
    deg = lo.shape[0]
    for k in range(deg):
        if hi[k] < lo[k]:
            return np.empty((0, deg), np.int64)
    sq = np.zeros(n_places)
    cur = lo.copy()
    count = 0
    while True:
        if _inside(cur, mr, dim_place, sq, limit_sq):
            count += 1
        if not _advance(cur, lo, hi):
            break
    out = np.empty((count, deg), np.int64)
    cur = lo.copy()
    i = 0
    while True:
        if _inside(cur, mr, dim_place, sq, limit_sq):
            out[i, :] = cur
            i += 1
        if not _advance(cur, lo, hi):
            break
    return out


@njit(cache=True, nogil=True)
def lattice_scan(q_real, log_qsize, theta_real, mr, minv, dim_place, a, log_c, cap):
    nq = q_real.shape[0]
    deg = mr.shape[0]
    m = a.shape[0]
    md = m * deg
    nd = q_real.shape[1]
    q_idx = np.empty(cap, np.int64)
    p_out = np.empty((cap, md), np.int64)
    val_out = np.empty(cap, np.float64)
    shift = np.empty(md)
    rad = np.empty(md)
    lo = np.empty(md, np.int64)
    hi = np.empty(md, np.int64)
    cur = np.empty(md, np.int64)
    modsq = np.empty(a.shape[1])
    found = 0
    for qi in range(nq):
        lq = log_qsize[qi]
        budget = log_c - lq
        for r in range(md):
            s = 0.0
            for t in range(nd):
                s += theta_real[r, t] * q_real[qi, t]
            shift[r] = s
        empty = False
        for i in range(m):
            for r in range(deg):
                rad[i * deg + r] = math.exp(a[i, dim_place[r]] * budget)
            for k in range(deg):
                cen = 0.0
                hw = 0.0
                for r in range(deg):
                    cen -= minv[k, r] * shift[i * deg + r]
                    hw += abs(minv[k, r]) * rad[i * deg + r]
                lo[i * deg + k] = math.floor(cen - hw - 1e-9)
                hi[i * deg + k] = math.ceil(cen + hw + 1e-9)
                if hi[i * deg + k] < lo[i * deg + k]:
                    empty = True
        if empty:
            continue
        cur[:] = lo
        while True:
            lx = -np.inf
            for i in range(m):
                modsq[:] = 0.0
                for r in range(deg):
                    v = shift[i * deg + r]
                    for k in range(deg):
                        v += mr[r, k] * cur[i * deg + k]
                    modsq[dim_place[r]] += v * v
                for nu in range(modsq.shape[0]):
                    if modsq[nu] > 0.0:
                        term = 0.5 * math.log(modsq[nu]) / a[i, nu]
                        if term > lx:
                            lx = term
            if lx + lq < log_c:
                if found < cap:
                    q_idx[found] = qi
                    p_out[found, :] = cur
                    val_out[found] = lx + lq
                found += 1
            if not _advance(cur, lo, hi):
                break
    return found, q_idx, p_out, val_out


@njit(cache=True, nogil=True)
def _gcd(a, b):
    while b:
        a, b = b, a % b
    return a


@njit(cache=True, nogil=True)
def coprime_pair_sum(norms, s):
    n = norms.shape[0]
    powers = np.empty(n)
    for i in range(n):
        powers[i] = float(norms[i]) ** (-s)
    total = 0.0
    for j in range(n):
        inner = 0.0
        for i in range(j):
            if norms[i] < norms[j] and _gcd(norms[j], norms[i]) == 1:
                inner += powers[i]
        total += inner * powers[j]
    return total
