"""The lattices Lambda_theta in K_S^d, the diagonal flow g_t and point enumeration.

Lambda_theta is stored as (field, m, n, theta), never as a basis matrix.
Its points are (iota(p) + theta iota(q), iota(q)) for p in O_K^m, q in O_K^n.

Enumeration of E_{T,c} (or E_{T,c}(A,B)) cut with Lambda_theta runs an outer
loop over q with 0 <= log||q||_b < T and, for each q, an inner loop over the
integer coefficient box of p covering |x_{i nu}| < (c / ||q||_b)^{a_{i nu}}.
The inner loops live in ``_kernels``.
"""
from __future__ import annotations

import functools
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from . import _kernels
from .errors import ValidationError
from .field import DEFAULT_CELL_CAP, AlgInt, FieldHandle, bounded_integer_coords, coprime
from .intlinalg import smith_diagonal, solve_rational
from .regions import ApproximateRecord, KSVec, RegionSpec, WeightScheme, log_quasi_norm, membership_mask


@dataclass(frozen=True, eq=False)
class LatticeSpec:
    field: FieldHandle
    m: int
    n: int
    theta: np.ndarray  # (m, n, #S) complex

    def __post_init__(self):
        if self.m < 1 or self.n < 1:
            raise ValidationError("m and n must be positive")
        th = np.array(self.theta, dtype=np.complex128)
        if th.ndim == 0:
            th = np.full((self.m, self.n, self.field.n_places), th)
        if th.shape != (self.m, self.n, self.field.n_places):
            raise ValidationError(f"theta must have shape ({self.m}, {self.n}, {self.field.n_places}), got {th.shape}")
        if not np.all(np.isfinite(th)):
            raise ValidationError("theta entries must be finite")
        for nu, place in enumerate(self.field.places):
            if place.kind == "real" and np.any(np.abs(th[..., nu].imag) > 1e-12):
                raise ValidationError(f"theta has nonzero imaginary part at real place {nu}")
            if place.kind == "real":
                th[..., nu] = th[..., nu].real
        th.setflags(write=False)
        object.__setattr__(self, "theta", th)

    @property
    def d(self) -> int:
        return self.m + self.n

    @classmethod
    def standard(cls, field: FieldHandle, m: int, n: int) -> "LatticeSpec":
        return cls(field, m, n, np.zeros((m, n, field.n_places), np.complex128))


def random_theta(field: FieldHandle, m: int, n: int, rng: np.random.Generator) -> np.ndarray:
    """theta uniform on the torus Mat_{m x n}(K_S) / iota(O_K)^{mn}.

    Each entry is sum_k u_k iota(b_k) with u uniform in [0, 1)^deg.
    """
    u = rng.random((m, n, field.degree))
    return field.embed_coords(u)


def theta_real(spec: LatticeSpec) -> np.ndarray:
    """Real (m*deg) x (n*deg) matrix of q -> theta q in realified coordinates."""
    K = spec.field
    deg = K.degree
    out = np.zeros((spec.m * deg, spec.n * deg))
    r = 0
    for nu, place in enumerate(K.places):
        for i in range(spec.m):
            for j in range(spec.n):
                z = spec.theta[i, j, nu]
                if place.kind == "real":
                    out[i * deg + r, j * deg + r] = z.real
                else:
                    out[i * deg + r, j * deg + r] = z.real
                    out[i * deg + r, j * deg + r + 1] = -z.imag
                    out[i * deg + r + 1, j * deg + r] = z.imag
                    out[i * deg + r + 1, j * deg + r + 1] = z.real
        r += 1 if place.kind == "real" else 2
    return out


def _coords(v) -> tuple[int, ...]:
    return v.coords if isinstance(v, AlgInt) else tuple(int(c) for c in np.atleast_1d(v))


def lattice_point(spec: LatticeSpec, p: Sequence, q: Sequence) -> KSVec:
    """(iota(p) + theta iota(q), iota(q)) for p in O_K^m, q in O_K^n."""
    K = spec.field
    if len(p) != spec.m or len(q) != spec.n:
        raise ValidationError(f"expected {spec.m} p-entries and {spec.n} q-entries")
    P = K.embed_coords(np.array([_coords(v) for v in p], dtype=np.float64).reshape(spec.m, K.degree))
    Q = K.embed_coords(np.array([_coords(v) for v in q], dtype=np.float64).reshape(spec.n, K.degree))
    x = P + np.einsum("ijs,js->is", spec.theta, Q)
    return KSVec(np.concatenate([x, Q]), spec.m)


# ---------------------------------------------------------------------------
# flow


@dataclass(frozen=True)
class FlowParams:
    weights: WeightScheme
    t: float


def apply_flow(flow: FlowParams, v: KSVec) -> KSVec:
    """x_{i nu} -> e^{a_{i nu} t} x_{i nu}, y_{j nu} -> e^{-b_{j nu} t} y_{j nu}."""
    w = flow.weights
    if v.m != w.m or v.d != w.m + w.n:
        raise ValidationError("weight scheme does not match the point's dimensions")
    x = v.x * np.exp(flow.t * w.a)
    y = v.y * np.exp(-flow.t * w.b)
    return KSVec(np.concatenate([x, y]), v.m)


def flow_place_determinants(flow: FlowParams) -> np.ndarray:
    """Real Jacobian of g_t restricted to K_nu^d, one value per place.

    The product over places is 1 for any valid scheme; individual factors
    need not be.
    """
    w = flow.weights
    return np.exp(flow.t * w.d_nu * (w.a.sum(axis=0) - w.b.sum(axis=0)))


def flow_jacobian(flow: FlowParams) -> float:
    return float(np.prod(flow_place_determinants(flow)))


# ---------------------------------------------------------------------------
# enumeration


@dataclass(frozen=True)
class QCandidates:
    coords: np.ndarray  # (N, n, deg) int64
    real: np.ndarray  # (N, n*deg)
    log_size: np.ndarray  # (N,) log||q||_b
    house: np.ndarray  # (N,)


@functools.lru_cache(maxsize=16)
def _q_candidates_cached(field: FieldHandle, n: int, b_bytes: bytes, T: float, cell_cap: int) -> QCandidates:
    b = np.frombuffer(b_bytes, dtype=np.float64).reshape(n, field.n_places)
    per_j = []
    for j in range(n):
        x = T * float(b[j].max())
        h = math.exp(x) if x < 700 else math.inf  # inf trips the cell cap below
        coords = bounded_integer_coords(field, h, cell_cap)
        lq = np.atleast_1d(log_quasi_norm(field.embed_coords(coords)[:, None, :], b[j][None, :]))
        per_j.append(coords[lq < T])
    sizes = [len(c) for c in per_j]
    total = int(np.prod(sizes, dtype=np.float64))
    if total > cell_cap:
        from .errors import ResourceCapError

        raise ResourceCapError(f"{total} q-candidates exceed the cell cap {cell_cap}", cap=cell_cap)
    grids = np.meshgrid(*[np.arange(s) for s in sizes], indexing="ij")
    idx = [g.ravel() for g in grids]
    coords = np.stack([per_j[j][idx[j]] for j in range(n)], axis=1)  # (N, n, deg)
    emb = field.embed_coords(coords)  # (N, n, S)
    lq = np.atleast_1d(log_quasi_norm(emb, b))
    keep = (lq >= 0) & (lq < T)
    coords, emb, lq = coords[keep], emb[keep], lq[keep]
    house = np.abs(emb).reshape(len(lq), -1).max(axis=1) if len(lq) else np.empty(0)
    # shells by increasing house, then lexicographic coordinates
    flat = coords.reshape(len(lq), -1)
    keys = [flat[:, k] for k in range(flat.shape[1] - 1, -1, -1)] + [np.round(house, 9)]
    order = np.lexsort(keys) if len(lq) else np.empty(0, np.int64)
    coords, emb, lq, house = coords[order], emb[order], lq[order], house[order]
    real = field.realify(emb).reshape(len(lq), n * field.degree)
    for arr in (coords, real, lq, house):
        arr.setflags(write=False)
    return QCandidates(coords, np.ascontiguousarray(real), lq, house)


def q_candidates(field: FieldHandle, b: np.ndarray, T: float, cell_cap: int = DEFAULT_CELL_CAP) -> QCandidates:
    """All q in O_K^n with 1 <= ||q||_b < e^T, in shell order (cached)."""
    b = np.ascontiguousarray(b, dtype=np.float64)
    return _q_candidates_cached(field, b.shape[0], b.tobytes(), float(T), int(cell_cap))


@dataclass(frozen=True)
class ScanResult:
    """Raw enumeration output; p in lattice convention (x = iota(p) + theta q)."""

    q: QCandidates
    q_idx: np.ndarray
    p: np.ndarray  # (K, m, deg)
    log_value: np.ndarray  # log ||x||_a ||y||_b

    @property
    def count(self) -> int:
        return int(self.q_idx.shape[0])


def _check_region(region: RegionSpec) -> None:
    if not region.bounded:
        raise ValidationError("region F_{T,c} contains the q = 0 slab and is unbounded; enumerate E or E_AB")
    if not math.isfinite(region.T):
        raise ValidationError("region needs a finite T cap")


def _scan_runner(spec, weights, log_c, qc, count_only):
    K = spec.field
    th = theta_real(spec)
    args = (th, np.ascontiguousarray(K.real_matrix), np.ascontiguousarray(K.real_inverse),
            K.dim_place, np.ascontiguousarray(weights.a), float(log_c))

    cap = 0 if count_only else 4096

    def run(sl):
        qr = qc.real[sl]
        lq = np.ascontiguousarray(qc.log_size[sl])
        found, qi, p, val = _kernels.lattice_scan(qr, lq, *args, cap)
        if found > cap and not count_only:
            found, qi, p, val = _kernels.lattice_scan(qr, lq, *args, found)
        return qi[:found] + sl.start, p[:found], val[:found], found

    return run


def scan(spec: LatticeSpec, weights: WeightScheme, c: float, T: float, workers: int = 1,
         cell_cap: int = DEFAULT_CELL_CAP, count_only: bool = False) -> ScanResult | int:
    """Enumerate Lambda_theta cut with E_{T,c}; see module docstring."""
    K = spec.field
    if weights.m != spec.m or weights.n != spec.n or weights.n_places != K.n_places:
        raise ValidationError("weight scheme does not match lattice dimensions")
    if not (T > 0 and math.isfinite(T)):
        raise ValidationError("T must be finite and positive")
    qc = q_candidates(K, weights.b, T, cell_cap)
    md = spec.m * K.degree
    if c <= 0 or len(qc.log_size) == 0:
        if count_only:
            return 0
        return ScanResult(qc, np.empty(0, np.int64), np.empty((0, spec.m, K.degree), np.int64), np.empty(0))
    nq = len(qc.log_size)
    workers = max(1, int(workers))
    nchunks = workers if workers > 1 else 1
    bounds = np.linspace(0, nq, nchunks + 1).astype(int)
    slices = [slice(int(lo), int(hi)) for lo, hi in zip(bounds[:-1], bounds[1:]) if hi > lo]
    run = _scan_runner(spec, weights, math.log(c), qc, count_only)
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(run, slices))
    else:
        parts = [run(sl) for sl in slices]
    if count_only:
        return int(sum(pt[3] for pt in parts))
    q_idx = np.concatenate([pt[0] for pt in parts]).astype(np.int64)
    p = np.concatenate([pt[1].reshape(-1, md) for pt in parts]).reshape(-1, spec.m, K.degree)
    val = np.concatenate([pt[2] for pt in parts])
    return ScanResult(qc, q_idx, p, val)


def _records(spec: LatticeSpec, weights: WeightScheme, res: ScanResult) -> list[ApproximateRecord]:
    K = spec.field
    out = []
    for k in range(res.count):
        qi = int(res.q_idx[k])
        q = tuple(AlgInt(tuple(int(v) for v in row), K) for row in res.q.coords[qi])
        p_lat = res.p[k]
        p = tuple(AlgInt(tuple(-int(v) for v in row), K) for row in p_lat)
        pt = lattice_point(spec, [tuple(int(v) for v in row) for row in p_lat], q)
        lq = float(res.q.log_size[qi])
        out.append(ApproximateRecord(p=p, q=q, value=math.exp(float(res.log_value[k])),
                                     q_size=math.exp(lq), point=pt))
    return out


def enumerate_lattice_points(spec: LatticeSpec, region: RegionSpec, weights: Optional[WeightScheme] = None,
                             workers: int = 1, cell_cap: int = DEFAULT_CELL_CAP) -> list[ApproximateRecord]:
    """Every point of Lambda_theta in the region, once each, in shell order.

    Records carry p in the approximation convention (point x = theta q - p)
    together with the lattice point itself.
    """
    _check_region(region)
    if weights is None:
        weights = WeightScheme.equal(spec.field.d_nu, spec.m, spec.n)
    res = scan(spec, weights, region.c, region.T, workers=workers, cell_cap=cell_cap)
    records = _records(spec, weights, res)
    if region.kind == "E_AB" and records:
        x = np.stack([r.point.x for r in records])
        y = np.stack([r.point.y for r in records])
        keep = membership_mask(region, weights, x, y)
        records = [r for r, k in zip(records, keep) if k]
    return records


# ---------------------------------------------------------------------------
# Phi(D) covolume for D = (1, p/q)


@dataclass(frozen=True)
class PhiCovolume:
    formula: int
    smith: Optional[int] = None
    residue: Optional[int] = None

    @property
    def agree(self) -> bool:
        return all(v is None or v == self.formula for v in (self.smith, self.residue))


def _residue_index(field: FieldHandle, p: AlgInt, q: AlgInt) -> int:
    """[O_K : {x : (p/q) x in O_K}] by counting residues modulo N(q) O_K."""
    N = abs(field.norm_exact(q))
    mq = field.mult_matrix(q)
    hits = 0
    for x in np.ndindex(*([N] * field.degree)):
        px = field.mul_coords(p.coords, x)
        sol = solve_rational(mq, px)
        if sol is not None and all(v.denominator == 1 for v in sol):
            hits += 1
    return N ** field.degree // hits


def phi_covolume(field: FieldHandle, d: int, p: AlgInt, q: AlgInt, verify: bool = False,
                 residue_limit: int = 10_000) -> int | PhiCovolume:
    """covol(Phi(D)) = N(q)^d for D = (1, p/q) with (p), (q) coprime.

    With ``verify`` the index [O_K : q O_K] is also computed from the Smith
    form of multiplication by q and, for small N(q)^deg, by counting
    residues x mod N(q) with p x in q O_K; a PhiCovolume holding all paths
    is returned.
    """
    if d < 1:
        raise ValidationError("d must be positive")
    if not p or not q:
        raise ValidationError("p and q must be nonzero")
    if not coprime(field, p, q):
        raise ValidationError(f"(p) = ({p.coords}) and (q) = ({q.coords}) are not coprime")
    nrm = 1.0
    for val, dn in zip(np.abs(q.embed()), field.d_nu):
        nrm *= float(val) ** int(dn)
    formula = int(round(nrm)) ** d
    if not verify:
        return formula
    smith = math.prod(smith_diagonal(field.mult_matrix(q))) ** d
    residue = None
    N = abs(field.norm_exact(q))
    if N ** field.degree <= residue_limit:
        residue = _residue_index(field, p, q) ** d
    return PhiCovolume(formula, smith, residue)
