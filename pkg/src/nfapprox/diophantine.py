"""Volumes of E_{T,c}, approximate counts and error-scaling fits."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Iterable, Optional, Sequence

import numpy as np

from .errors import ValidationError
from .field import FieldHandle
from .lattice import LatticeSpec, enumerate_lattice_points, scan
from .regions import (ApproximateRecord, KSVec, RegionSpec, WeightScheme, log_quasi_norm, quasi_norm,
                      region_membership)

__all__ = [
    "ApproximateRecord", "KSVec", "RegionSpec", "WeightScheme", "quasi_norm", "log_quasi_norm",
    "region_membership", "analytic_volume_E", "mc_volume", "count_approximates", "find_approximates",
    "error_series", "ErrorPoint", "fit_scaling_exponent", "ScalingFit",
]

MC_BATCH = 1 << 18
# x-box padding: keeps the hit indicator non-degenerate on totally real fields
MC_PAD = 1.25


def ball_constant(field: FieldHandle, k: int) -> float:
    """Lebesgue volume of {x in K_S^k : ||x||_w < 1} for any normalized w."""
    return 2.0 ** (field.r1 * k) * math.pi ** (field.r2 * k)


def analytic_volume_E(field: FieldHandle, weights: WeightScheme, c: float, T: float) -> float:
    """lambda(E_{T,c}) = C_a C_b c T / V_0^d."""
    if c < 0 or T < 0:
        raise ValidationError("c and T must be nonnegative")
    d = weights.m + weights.n
    return ball_constant(field, weights.m) * ball_constant(field, weights.n) * c * T / field.covolume ** d


def _sample_y(field: FieldHandle, b: np.ndarray, T: float, N: int, rng: np.random.Generator):
    """y with log||y||_b = U uniform on [0, T); density 1/(T C_b ||y||_b)."""
    n, S = b.shape
    d_nu = field.d_nu
    U = rng.random(N) * T
    s_pow = np.exp(U[:, None, None] * b[None, :, :])  # radius s^{b_{j nu}} per entry
    probs = (b * d_nu).ravel()
    active = rng.choice(n * S, size=N, p=probs / probs.sum())
    is_complex = (d_nu == 2)[None, None, :]
    # interior entries: uniform in interval / disc of radius s^b
    u = rng.random((N, n, S))
    ang = rng.random((N, n, S)) * 2 * math.pi
    sign = np.where(rng.random((N, n, S)) < 0.5, -1.0, 1.0)
    rad_int = np.where(is_complex, np.sqrt(u), u) * s_pow
    y = np.where(is_complex, rad_int * np.exp(1j * ang), sign * rad_int)
    # the active entry sits on its boundary |y| = s^b
    j, nu = np.divmod(active, S)
    rows = np.arange(N)
    edge = s_pow[rows, j, nu]
    y[rows, j, nu] = np.where(d_nu[nu] == 2, edge * np.exp(1j * ang[rows, j, nu]), sign[rows, j, nu] * edge)
    return y, U


def _sample_x(field: FieldHandle, a: np.ndarray, log_r: np.ndarray, rng: np.random.Generator, pad: float):
    """x uniform in the padded real box around {||x||_a < r}; complex entries use squares."""
    N = log_r.shape[0]
    m, S = a.shape
    half = pad * np.exp(log_r[:, None, None] * a[None, :, :])
    re = (2 * rng.random((N, m, S)) - 1) * half
    im = (2 * rng.random((N, m, S)) - 1) * half
    return np.where((field.d_nu == 2)[None, None, :], re + 1j * im, re + 0j)


def mc_volume(field: FieldHandle, weights: WeightScheme, region: RegionSpec, samples: int, seed: int,
              indicator: Optional[Callable[[np.ndarray, np.ndarray], np.ndarray]] = None) -> tuple[float, float]:
    """Monte Carlo lambda-volume of the region (optionally cut by ``indicator``).

    y is drawn by shell importance sampling: log||y||_b uniform on [0, T),
    then a point on that quasi-norm shell, so its density is 1/(T C_b ||y||_b).
    Given y, x is uniform in a box around {||x||_a < c/||y||_b}, widened by
    ``MC_PAD`` per real coordinate. The product of weights is constant, so
    the estimator is that constant times the hit indicator. Returns
    (estimate, standard error of the mean).
    """
    if not region.bounded:
        raise ValidationError("mc_volume needs a bounded region (E or E_AB); F contains the q = 0 slab")
    if samples < 1000:
        raise ValidationError("mc_volume needs at least 1000 samples")
    if region.c <= 0:
        return 0.0, 0.0
    d = weights.m + weights.n
    deg = field.degree
    scale = (region.T * ball_constant(field, weights.n) * (2.0 * MC_PAD) ** (weights.m * deg) * region.c
             / field.covolume ** d)
    rng = np.random.default_rng(seed)
    hits = 0
    done = 0
    log_c = region.log_c
    while done < samples:
        N = min(MC_BATCH, samples - done)
        y, U = _sample_y(field, weights.b, region.T, N, rng)
        x = _sample_x(field, weights.a, log_c - U, rng, MC_PAD)
        lx = log_quasi_norm(x, weights.a)
        ok = lx + U < log_c
        if region.kind == "E_AB" and ok.any():
            from .spiralling import cap_contains, project_weighted_batch, sphere_real

            A, B = region.caps
            idx = np.nonzero(ok)[0]
            ok[idx] = (cap_contains(A, sphere_real(project_weighted_batch(x[idx], weights.a), weights.d_nu))
                       & cap_contains(B, sphere_real(project_weighted_batch(y[idx], weights.b), weights.d_nu)))
        if indicator is not None and ok.any():
            idx = np.nonzero(ok)[0]
            ok[idx] = indicator(x[idx], y[idx])
        hits += int(ok.sum())
        done += N
    p = hits / samples
    var = p * (1 - p) * samples / (samples - 1)
    return scale * p, scale * math.sqrt(var / samples)


def count_approximates(spec: LatticeSpec, weights: WeightScheme, c: float, T: float, workers: int = 1) -> int:
    """#(E_{T,c} cut with Lambda_theta)."""
    return scan(spec, weights, c, T, workers=workers, count_only=True)


def find_approximates(spec: LatticeSpec, weights: WeightScheme, c: float, T: float,
                      workers: int = 1) -> list[ApproximateRecord]:
    return enumerate_lattice_points(spec, RegionSpec("E", c, T), weights, workers=workers)


@dataclass(frozen=True)
class ErrorPoint:
    T: float
    count: int
    volume: float

    @property
    def error(self) -> float:
        return self.count - self.volume


def error_series(spec: LatticeSpec, weights: WeightScheme, c: float, T_grid: Sequence[float],
                 workers: int = 1) -> list[ErrorPoint]:
    """(T, count, volume) along an increasing grid from one enumeration at max T."""
    grid = np.asarray(list(T_grid), dtype=np.float64)
    if grid.size == 0:
        raise ValidationError("T grid is empty")
    if np.any(np.diff(grid) <= 0) or grid[0] <= 0:
        raise ValidationError("T grid must be positive and strictly increasing")
    res = scan(spec, weights, c, float(grid[-1]), workers=workers)
    lq = np.sort(res.q.log_size[res.q_idx])
    counts = np.searchsorted(lq, grid, side="left")  # lq < T
    return [ErrorPoint(float(T), int(k), analytic_volume_E(spec.field, weights, c, float(T)))
            for T, k in zip(grid, counts)]


@dataclass(frozen=True)
class ScalingFit:
    slope: float
    intercept: float
    r2: float
    max_rate_ratio: float
    n_points: int


def _pairs(series) -> list[tuple[float, float]]:
    out = []
    for item in series:
        if isinstance(item, ErrorPoint):
            out.append((item.T, item.error))
        else:
            T, err = item
            out.append((float(T), float(err)))
    return out


def fit_scaling_exponent(series: Iterable, T_min_cut: float = 0.0, epsilon: float = 0.01,
                         rate_T_min: float = math.e ** math.e) -> ScalingFit:
    """Least-squares slope of log|error| against log T.

    ``max_rate_ratio`` is the largest |error| / target_rate(T, epsilon) over
    grid points with T > rate_T_min (nan when there are none). Lowering
    rate_T_min below e^e evaluates the rate where log log T < 1.
    """
    from .moments import target_rate

    pts = _pairs(series)
    if pts and all(err == 0 for _, err in pts):
        raise ValidationError("all errors are zero; nothing to fit")
    use = [(T, abs(err)) for T, err in pts if T >= T_min_cut and err != 0 and T > 0]
    if len(use) < 5:
        raise ValidationError(f"need at least 5 nonzero errors beyond T_min_cut, have {len(use)}")
    lt = np.log([T for T, _ in use])
    le = np.log([e for _, e in use])
    slope, intercept = np.polyfit(lt, le, 1)
    pred = slope * lt + intercept
    ss_res = float(((le - pred) ** 2).sum())
    ss_tot = float(((le - le.mean()) ** 2).sum())
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0
    strict = rate_T_min >= math.e ** math.e
    ratios = [abs(err) / target_rate(T, epsilon, strict=strict) for T, err in pts if T > rate_T_min]
    return ScalingFit(float(slope), float(intercept), r2, max(ratios) if ratios else math.nan, len(use))
