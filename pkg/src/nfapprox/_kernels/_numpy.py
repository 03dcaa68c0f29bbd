"""Vectorised numpy fallbacks for the numba kernels.

Same inputs, same outputs (up to float rounding in the last ulp). Large
boxes are processed in chunks to keep peak memory bounded.
"""
import numpy as np

CHUNK = 1 << 20


def box_filter(lo, hi, mr, dim_place, n_places, limit_sq):
    deg = lo.shape[0]
    widths = hi - lo + 1
    if np.any(widths <= 0):
        return np.empty((0, deg), np.int64)
    total = int(np.prod(widths))
    keep = []
    for start in range(0, total, CHUNK):
        flat = np.arange(start, min(total, start + CHUNK), dtype=np.int64)
        coords = np.stack(np.unravel_index(flat, tuple(widths)), axis=1) + lo
        real = coords @ mr.T
        sq = np.zeros((coords.shape[0], n_places))
        np.add.at(sq.T, dim_place, (real * real).T)
        keep.append(coords[np.all(sq <= limit_sq, axis=1)])
    return np.concatenate(keep).astype(np.int64)


def _scan_chunk(q_real, log_qsize, theta_real, mr, minv, dim_place, a, log_c):
    nq = q_real.shape[0]
    deg = mr.shape[0]
    m, n_places = a.shape
    shift = (q_real @ theta_real.T).reshape(nq, m, deg)
    budget = log_c - log_qsize
    rad = np.exp(a[:, dim_place][None, :, :] * budget[:, None, None])
    cen = -(shift @ minv.T)
    hw = rad @ np.abs(minv).T
    lo = np.floor(cen - hw - 1e-9).astype(np.int64).reshape(nq, m * deg)
    hi = np.ceil(cen + hw + 1e-9).astype(np.int64).reshape(nq, m * deg)
    widths = np.clip(hi - lo + 1, 0, None)
    cells = np.prod(widths, axis=1)
    total = int(cells.sum())
    if total == 0:
        return np.empty(0, np.int64), np.empty((0, m * deg), np.int64), np.empty(0)
    owner = np.repeat(np.arange(nq), cells)
    starts = np.cumsum(cells) - cells
    local = np.arange(total, dtype=np.int64) - starts[owner]
    digits = np.empty((total, m * deg), np.int64)
    w = widths[owner]
    for k in range(m * deg - 1, -1, -1):
        digits[:, k] = local % w[:, k]
        local //= w[:, k]
    p = lo[owner] + digits
    x = p.reshape(total, m, deg) @ mr.T + shift[owner]
    modsq = np.zeros((total, m, n_places))
    np.add.at(np.moveaxis(modsq, 2, 0), dim_place, np.moveaxis(x * x, 2, 0))
    with np.errstate(divide="ignore"):
        terms = 0.5 * np.log(modsq) / a[None, :, :]
    lx = terms.reshape(total, -1).max(axis=1)
    val = lx + log_qsize[owner]
    hit = val < log_c
    return owner[hit], p[hit], val[hit]


def lattice_scan(q_real, log_qsize, theta_real, mr, minv, dim_place, a, log_c, cap):
    md = a.shape[0] * mr.shape[0]
    parts = []
    # chunk by q; boxes are tiny for large |q| and larger near |q| = 1
    step = max(1, CHUNK // 8)
    for start in range(0, q_real.shape[0], step):
        sl = slice(start, start + step)
        qi, p, val = _scan_chunk(q_real[sl], log_qsize[sl], theta_real, mr, minv, dim_place, a, log_c)
        parts.append((qi + start, p, val))
    if parts:
        q_idx = np.concatenate([t[0] for t in parts])
        p_out = np.concatenate([t[1] for t in parts])
        val_out = np.concatenate([t[2] for t in parts])
    else:
        q_idx, p_out, val_out = np.empty(0, np.int64), np.empty((0, md), np.int64), np.empty(0)
    found = q_idx.shape[0]
    return found, q_idx[:cap], p_out[:cap], val_out[:cap]


def coprime_pair_sum(norms, s):
    norms = np.asarray(norms, dtype=np.int64)
    powers = norms.astype(np.float64) ** (-s)
    total = 0.0
    for j in range(1, norms.shape[0]):
        below = norms[:j]
        mask = (below < norms[j]) & (np.gcd(below, norms[j]) == 1)
        total += powers[:j][mask].sum() * powers[j]
    return float(total)
