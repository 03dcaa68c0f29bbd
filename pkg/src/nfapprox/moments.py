"""Mean-value and bound checks: translate averages, second moments, overlap
volumes, ideal sums, the unit-cube sum, partition counts, Thunder's bound and
the time-average sandwich.

Haar sampling of the space of lattices is not available, so averages are
taken over unipotent translates Lambda_theta with theta uniform on the torus.
For each fixed q != 0 the theta-average of #{p : p + theta q in B} is exactly
the volume of B. Summing over q therefore gives the exact translate
expectation

    sum over q in O_K^n with 1 <= ||q||_b < e^T of C_a c / (||q||_b V_0^m),

a lattice sum over y rather than the integral lambda(E_{T,c}); the two differ
by a bounded amount (for K = Q it is 4 H(e^T) against 4T). Reports carry
both numbers.
"""
from __future__ import annotations

import functools
import itertools
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
from scipy import integrate

from . import _kernels
from .diophantine import analytic_volume_E, count_approximates, mc_volume
from .errors import ValidationError
from .field import (FieldHandle, coprime, embed_element, principal_ideal_norms,
                    principal_ideals, zeta_partial)
from .lattice import LatticeSpec, enumerate_lattice_points, random_theta
from .regions import RegionSpec, WeightScheme, log_quasi_norm, membership_mask

ZETA_CAP_DEG1 = 10 ** 6
ZETA_CAP = 10 ** 4


@dataclass(frozen=True)
class MomentReport:
    empirical_mean: float
    empirical_variance: float
    reference_value: float
    sample_count: int
    standard_error: float
    counts: Optional[np.ndarray] = None
    translate_expectation: Optional[float] = None

    @property
    def ratio(self) -> float:
        """empirical variance / reference value."""
        return self.empirical_variance / self.reference_value if self.reference_value else math.nan

    @property
    def z_score(self) -> float:
        if self.standard_error == 0:
            return 0.0 if self.empirical_mean == self.reference_value else math.inf
        return (self.empirical_mean - self.reference_value) / self.standard_error


def _reference_volume(field, weights, region) -> float:
    if region.kind == "E":
        return analytic_volume_E(field, weights, region.c, region.T)
    if region.kind == "E_AB":
        from .spiralling import analytic_volume_AB

        A, B = region.caps
        return analytic_volume_AB(field, weights, region.c, region.T, A, B)
    raise ValidationError("translate averages need a region with 1 <= ||y||_b; F touches the q = 0 slab, "
                          "where the translate average of the count is infinite")


def translate_counts(field: FieldHandle, weights: WeightScheme, region: RegionSpec, n_theta: int, seed: int,
                     workers: int = 1) -> np.ndarray:
    """#(region cut with Lambda_theta) for n_theta independent uniform theta.

    Draw k uses the k-th child of SeedSequence(seed), so results do not
    depend on the worker count.
    """
    _reference_volume(field, weights, region)  # validates region kind
    children = np.random.SeedSequence(seed).spawn(n_theta)

    def one(ss):
        rng = np.random.default_rng(ss)
        spec = LatticeSpec(field, weights.m, weights.n, random_theta(field, weights.m, weights.n, rng))
        if region.kind == "E":
            return count_approximates(spec, weights, region.c, region.T)
        return len(enumerate_lattice_points(spec, region, weights))

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            counts = list(pool.map(one, children))
    else:
        counts = [one(ss) for ss in children]
    return np.asarray(counts, dtype=np.int64)


def translate_expectation(field: FieldHandle, weights: WeightScheme, c: float, T: float) -> float:
    """Exact theta-average of #(E_{T,c} cut Lambda_theta): a lattice sum over q."""
    from .diophantine import ball_constant
    from .lattice import q_candidates

    qc = q_candidates(field, weights.b, T)
    s = math.fsum(np.sort(np.exp(-qc.log_size)))
    return ball_constant(field, weights.m) * c * s / field.covolume ** weights.m


def _report(counts: np.ndarray, reference: float, expectation: Optional[float] = None) -> MomentReport:
    n = counts.shape[0]
    if n < 2:
        raise ValidationError("need at least 2 samples")
    mean = float(counts.mean())
    var = float(counts.var(ddof=1))
    return MomentReport(mean, var, reference, n, math.sqrt(var / n), counts, expectation)


def siegel_translate_stats(field: FieldHandle, weights: WeightScheme, region: RegionSpec, n_theta: int,
                           seed: int, workers: int = 1) -> MomentReport:
    """Translate average of the count against the analytic lambda-volume.

    ``translate_expectation`` (E regions only) is the exact mean of the
    sampled quantity; see the module docstring.
    """
    if n_theta < 100:
        raise ValidationError("n_theta must be at least 100")
    ref = _reference_volume(field, weights, region)
    if region.c <= 0:
        return MomentReport(0.0, 0.0, ref, n_theta, 0.0, np.zeros(n_theta, np.int64), 0.0)
    expect = translate_expectation(field, weights, region.c, region.T) if region.kind == "E" else None
    return _report(translate_counts(field, weights, region, n_theta, seed, workers), ref, expect)


def second_moment_stats(field: FieldHandle, weights: WeightScheme, region: RegionSpec, n_theta: int,
                        seed: int, workers: int = 1) -> MomentReport:
    """Variance of translate counts; ``ratio`` is variance / lambda-volume."""
    return siegel_translate_stats(field, weights, region, n_theta, seed, workers)


# ---------------------------------------------------------------------------
# overlap volumes


def _gamma_values(field: FieldHandle, gamma) -> np.ndarray:
    vals = embed_element(field, gamma)
    if not np.all(np.abs(vals) > 0):
        raise ValidationError("gamma must be nonzero")
    return vals


def overlap_volume(field: FieldHandle, weights: WeightScheme, region: RegionSpec, gamma,
                   samples: int, seed: int) -> tuple[float, float]:
    """Monte Carlo lambda(E cut with gamma^{-1} E); z is in gamma^{-1} E iff gamma z is in E."""
    g = _gamma_values(field, gamma)
    inner = RegionSpec("E", region.c, region.T) if region.kind == "E_AB" else region

    def indicator(x, y):
        return membership_mask(inner, weights, x * g[None, None, :], y * g[None, None, :])

    return mc_volume(field, weights, region, samples, seed, indicator=indicator)


def overlap_bound(field: FieldHandle, weights: WeightScheme, region: RegionSpec, gamma) -> float:
    """prod_nu min(1, 1/|iota_nu(gamma)|)^{d_nu} * lambda(E)."""
    g = np.abs(_gamma_values(field, gamma))
    factor = float(np.prod(np.minimum(1.0, 1.0 / g) ** field.d_nu))
    return factor * _reference_volume(field, weights, region)


# ---------------------------------------------------------------------------
# ideal sums


def rogers_tail_sum(field: FieldHandle, d: int, norm_cap: int) -> float:
    """sum over principal (q), N(q) <= cap, and principal (p) coprime to (q)
    with N(p) < N(q), of (N(p) N(q))^{-d/2}.

    Pairs with gcd(N(p), N(q)) = 1 are coprime and go through the kernel;
    in degree >= 2 the remaining pairs are decided by the HNF of (p) + (q).
    """
    if d <= 2:
        raise ValidationError(f"d = {d}: the sum diverges for d <= 2")
    if norm_cap < 1:
        raise ValidationError("norm_cap must be >= 1")
    s = d / 2.0
    if field.degree == 1:
        norms = np.arange(1, int(norm_cap) + 1, dtype=np.int64)
        return float(_kernels.coprime_pair_sum(norms, s))
    table = principal_ideals(field, norm_cap)
    norms = np.array([nrm for nrm, _ in table], dtype=np.int64)
    total = float(_kernels.coprime_pair_sum(norms, s))
    extra = []
    for (nq, q), (np_, p) in itertools.combinations(list(reversed(table)), 2):
        if np_ < nq and math.gcd(np_, nq) > 1 and coprime(field, p, q):
            extra.append((np_ * nq) ** (-s))
    return total + math.fsum(extra)


def zeta_bound_terms(field: FieldHandle, d: int, cap: Optional[int] = None) -> dict:
    if d <= 2:
        raise ValidationError(f"d = {d}: zeta_K(d/2) diverges for d <= 2")
    if cap is None:
        cap = ZETA_CAP_DEG1 if field.degree == 1 else ZETA_CAP
    z1 = zeta_partial(field, d - 1, cap)
    z2 = zeta_partial(field, d / 2, cap)
    h = d / 2
    return {
        "one": 1.0,
        "first": abs(1.0 / (1.0 - h)) * z1,
        "second": 2 ** (h - 1) / (h - 1) * z2,
        "third": z2,
        "zeta_d_minus_1": z1,
        "zeta_d_half": z2,
        "cap": cap,
    }


def zeta_bound_value(field: FieldHandle, d: int, cap: Optional[int] = None) -> float:
    """1 + |1/(1-d/2)| zeta_K(d-1) + 2^{d/2-1}/(d/2-1) zeta_K(d/2) + zeta_K(d/2),
    with principal-ideal zeta sums truncated at ``cap``."""
    t = zeta_bound_terms(field, d, cap)
    return t["one"] + t["first"] + t["second"] + t["third"]


# ---------------------------------------------------------------------------
# unit-cube sum


@dataclass(frozen=True)
class UnitCubeSum:
    value: float
    tail_bound: float
    n_terms: int


def _log_norm(field: FieldHandle, gamma) -> float:
    g = np.abs(_gamma_values(field, gamma))
    return float(np.sum(field.d_nu * np.log(g)))


def unit_cube_sum(field: FieldHandle, gamma=None, box_cap: int = 40, *, log_norm: Optional[float] = None
                  ) -> UnitCubeSum:
    """sum over v in Z^{#S}, -log N <= sum v <= #S - log N, max|v| <= box_cap,
    of prod_nu min(1, e^{d_nu v_nu}); N = N(gamma) or e^{log_norm}.

    ``tail_bound`` dominates the terms with max|v| > box_cap: a term is at
    most e^{-M} where M is the sum of the negative parts, and the vectors
    with positive-part sum P and negative-part sum M number at most
    C(P+S-1, S-1) C(M+S-1, S-1).
    """
    if box_cap < 10:
        raise ValidationError("box_cap must be >= 10")
    if (gamma is None) == (log_norm is None):
        raise ValidationError("give exactly one of gamma or log_norm")
    L = _log_norm(field, gamma) if gamma is not None else float(log_norm)
    S = field.n_places
    B = int(box_cap)
    tol = 1e-12
    axes = np.arange(-B, B + 1)
    grid = np.stack(np.meshgrid(*([axes] * S), indexing="ij"), axis=-1).reshape(-1, S)
    tot = grid.sum(axis=1)
    keep = (tot >= -L - tol) & (tot <= S - L + tol)
    v = grid[keep]
    terms = np.prod(np.minimum(1.0, np.exp(field.d_nu[None, :] * v)), axis=1)
    value = math.fsum(np.sort(terms))

    tail = 0.0
    M = 0
    while True:
        p_lo = max(0, math.ceil(M - L - tol))
        p_hi = math.floor(M + S - L + tol)
        chunk = 0.0
        for P in range(p_lo, p_hi + 1):
            if P > B or M > B:
                chunk += math.comb(P + S - 1, S - 1) * math.comb(M + S - 1, S - 1) * math.exp(-M)
        tail += chunk
        if M > B + 2 * S + abs(L) + 50 and chunk < 1e-30:
            # remaining chunks shrink by at least a factor ~e^{-1} * poly
            tail += 2 * chunk
            break
        M += 1
    return UnitCubeSum(value, tail, int(v.shape[0]))


# ---------------------------------------------------------------------------
# combinatorics


@functools.lru_cache(maxsize=None)
def _partition_table(M: int, k: int) -> tuple:
    table = [[0] * (M + 1) for _ in range(k + 1)]
    table[0][0] = 1
    for kk in range(1, k + 1):
        for mm in range(kk, M + 1):
            table[kk][mm] = table[kk - 1][mm - 1] + table[kk][mm - kk]
    return tuple(tuple(row) for row in table)


def partition_count(k: int, M: int) -> int:
    """Partitions of M into exactly k positive parts."""
    if k < 1 or M < 0:
        if k == 0 and M == 0:
            return 1
        if k < 0 or M < 0:
            raise ValidationError("need k >= 1 and M >= 0")
        return 0
    if M < k:
        return 0
    return _partition_table(M, k)[k][M]


def knessl_keller_ratio(k: int, M: int) -> float:
    """p(k, M) 2 pi M / (e^{2k} (M/k^2)^k)."""
    return partition_count(k, M) * 2 * math.pi * M / (math.exp(2 * k) * (M / k ** 2) ** k)


def z_count(n: int, M: int, N: int, box: Optional[int] = None) -> int:
    """#{z in Z^n : sum max(0, z_i) = M, sum min(0, z_i) = -N}, optionally
    restricted to |z_i| <= box; brute force over [-N, M]^n."""
    if n < 1 or M < 0 or N < 0:
        raise ValidationError("need n >= 1 and M, N >= 0")
    lo, hi = -N, M
    if box is not None:
        lo, hi = max(lo, -box), min(hi, box)
    axis = np.arange(lo, hi + 1)
    grid = np.stack(np.meshgrid(*([axis] * n), indexing="ij"), axis=-1).reshape(-1, n)
    pos = np.maximum(grid, 0).sum(axis=1)
    neg = np.minimum(grid, 0).sum(axis=1)
    return int(np.count_nonzero((pos == M) & (neg == -N)))


def z_count_table(n: int, W: int) -> dict[tuple[int, int], int]:
    """(M, N) -> #Z_{M,N} cut with [-W, W]^n, over all (M, N) that occur."""
    return {(M, N): z_count(n, M, N, box=W) for M in range(n * W + 1) for N in range(n * W + 1)
            if z_count(n, M, N, box=W)}


# ---------------------------------------------------------------------------
# Thunder's bound


class CountingOracle:
    """g-values of a countable set G, exposed as a sorted array below x."""

    def values_below(self, x: float) -> np.ndarray:
        raise NotImplementedError

    def count(self, x: float) -> int:
        """card{w : g(w) <= x}."""
        raise NotImplementedError


class IntegerOracle(CountingOracle):
    """G = positive integers, g = identity."""

    def values_below(self, x):
        return np.arange(1, math.ceil(x), dtype=np.float64) if x > 1 else np.empty(0)

    def count(self, x):
        return max(0, math.floor(x))


class PrincipalIdealOracle(CountingOracle):
    """G = nonzero principal ideals of a field, g = norm."""

    def __init__(self, field: FieldHandle):
        self.field = field

    def values_below(self, x):
        cap = math.ceil(x) - 1 if float(x).is_integer() else math.floor(x)
        return principal_ideal_norms(self.field, cap).astype(np.float64) if cap >= 1 else np.empty(0)

    def count(self, x):
        return int(principal_ideal_norms(self.field, math.floor(x)).shape[0]) if x >= 1 else 0


@dataclass(frozen=True)
class ThunderResult:
    lhs: float
    rhs: float
    holds: bool
    asymptotic_residual: float


def _check_F(F: Callable, t: float, grid_size: int = 400) -> None:
    xs = np.geomspace(0.25, t * (1 - 1e-9), grid_size)
    vals = np.array([F(x) for x in xs], dtype=np.float64)
    if not np.all(np.isfinite(vals)):
        raise ValidationError("F is not finite on (0, t)")
    scale = max(1.0, float(np.max(np.abs(vals))))
    slopes = np.diff(vals) / np.diff(xs)
    if np.any(np.diff(vals) > 1e-12 * scale):
        raise ValidationError("F must be nonincreasing on (0, t)")
    # |F'| decreasing: secant slopes must not decrease
    if np.any(np.diff(slopes) < -1e-9 * max(1.0, float(np.max(np.abs(slopes))))):
        raise ValidationError("F' must be increasing toward 0 (F convex) on (0, t)")


def thunder_check(c1: float, c2: float, c3: float, counting_oracle: CountingOracle, F: Callable[[float], float],
                  t: float) -> ThunderResult:
    """Evaluate sum_{g(w) < t} F(g(w)) against int_{1/2}^t x^{c2-1} F(x) dx + 2^{-c2} F(1/2).

    ``asymptotic_residual`` is max |card{g <= x} - c1 x^{c2}| / x^{c3} on a
    grid in [1, t], a diagnostic for the assumed counting asymptotics.
    """
    if not (c1 > 0 and c2 > 0 and c3 > 0):
        raise ValidationError("c1, c2, c3 must be positive")
    if not (1 <= t < math.inf):
        raise ValidationError("t must be finite and >= 1")
    _check_F(F, t)
    vals = counting_oracle.values_below(t)
    vals = vals[vals < t]
    lhs = math.fsum(sorted((float(F(v)) for v in vals), reverse=False))
    edges = [0.5] + [x for x in np.geomspace(1.0, t, max(2, int(math.log10(t)) + 2)) if 0.5 < x < t] + [t]
    integral = 0.0
    for lo, hi in zip(edges[:-1], edges[1:]):
        part, _ = integrate.quad(lambda x: x ** (c2 - 1) * F(x), lo, hi, epsabs=1e-11, epsrel=1e-11, limit=200)
        integral += part
    rhs = integral + 2.0 ** (-c2) * float(F(0.5))
    xs = np.unique(np.geomspace(1.0, t, 30))
    resid = max(abs(counting_oracle.count(x) - c1 * x ** c2) / x ** c3 for x in xs)
    return ThunderResult(lhs, rhs, lhs < rhs, float(resid))


# ---------------------------------------------------------------------------
# time-average sandwich


@dataclass(frozen=True)
class SandwichResult:
    lower: int
    middle: float
    upper: int
    middle_exact: float
    slack: float
    holds: bool


def time_average_sandwich(spec: LatticeSpec, weights: WeightScheme, c: float, R: float, T: float, dt: float
                          ) -> SandwichResult:
    """#((E_T minus E_R) cut Lambda) <= (1/R) int_0^T #(g_t Lambda cut E_R) dt <= #(E_{R+T} cut Lambda).

    The middle term is a left Riemann sum with step dt, counting the points
    of g_t Lambda inside E_{R,c} at each step. A point with log||y||_b = l
    sits in g_t E_R exactly for t in (l - R, l], so the count changes only
    at those endpoints; ``slack`` = (endpoints inside (0, T)) * dt / R
    bounds the quadrature error. ``middle_exact`` is the closed form.
    """
    if not (1 < R < T):
        raise ValidationError(f"need 1 < R < T, got R={R}, T={T}")
    if not (0 < dt <= R / 10):
        raise ValidationError(f"need 0 < dt <= R/10, got dt={dt}")
    if c <= 0:
        return SandwichResult(0, 0.0, 0, 0.0, 0.0, True)
    records = enumerate_lattice_points(spec, RegionSpec("E", c, R + T), weights)
    upper = len(records)
    if not records:
        return SandwichResult(0, 0.0, 0, 0.0, 0.0, True)
    x = np.stack([r.point.x for r in records])
    y = np.stack([r.point.y for r in records])
    ell = np.atleast_1d(log_quasi_norm(y, weights.b))
    lower = int(np.count_nonzero((ell >= R) & (ell < T)))

    inner = RegionSpec("E", c, R)
    steps = int(round(T / dt))
    h = T / steps
    total = 0
    for k in range(steps):
        t = k * h
        xt = x * np.exp(t * weights.a)[None, :, :]
        yt = y * np.exp(-t * weights.b)[None, :, :]
        total += int(np.count_nonzero(membership_mask(inner, weights, xt, yt)))
    middle = total * h / R
    lengths = np.clip(np.minimum(T, ell) - np.maximum(0.0, ell - R), 0.0, None)
    middle_exact = float(lengths.sum() / R)
    ends = np.concatenate([ell - R, ell])
    events = int(np.count_nonzero((ends > 0) & (ends < T)))
    slack = events * h / R + 1e-12
    holds = (lower <= middle + slack) and (middle <= upper + slack)
    return SandwichResult(lower, middle, upper, middle_exact, slack, bool(holds))


# ---------------------------------------------------------------------------
# rate comparator


def target_rate(T: float, epsilon: float, strict: bool = True) -> float:
    """T^{1/2} (log T)^{3/2} (log log T)^{1/2 + epsilon}.

    The rate is defined for T > e^e, where log log T > 1. With
    ``strict=False`` any T > e is accepted; there (log log T) < 1 and the
    value is smaller than any continuation that is at least 1.
    """
    bound = math.e ** math.e if strict else math.e
    if not T > bound:
        raise ValidationError(f"target_rate needs T > {'e^e' if strict else 'e'}, got {T}")
    if epsilon < 0:
        raise ValidationError("epsilon must be >= 0")
    lt = math.log(T)
    return math.sqrt(T) * lt ** 1.5 * math.log(lt) ** (0.5 + epsilon)
