"""Weighted projections onto spheres, spherical caps and directional counts.

A block x of K_S^k projects to the unique point of its weighted flow line
{(e^{t w_{i nu}} x_{i nu}) : t real} with sum |x_{i nu}|^2 = 1. Sphere points
are compared against caps in their real coordinates, ordered by
(row, place, Re/Im), so S^{k deg - 1} sits in R^{k deg}.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
from scipy.special import betainc

from .errors import ValidationError
from .regions import RegionSpec, WeightScheme

PROJ_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class SpherePoint:
    coords: np.ndarray  # (k, #S) complex, sum |.|^2 = 1

    def __post_init__(self):
        c = np.array(self.coords, dtype=np.complex128, ndmin=2)
        s = float(np.sum(np.abs(c) ** 2))
        if abs(s - 1.0) > 1e-10:
            raise ValidationError(f"sphere point has squared norm {s!r}")
        c.setflags(write=False)
        object.__setattr__(self, "coords", c)


def _solve_t(mod2: np.ndarray, w: np.ndarray) -> np.ndarray:
    """Root of sum_k e^{2 t w_k} mod2_k = 1 per row; rows of (N, K) arrays."""
    s0 = mod2.sum(axis=1)
    wmin = w.min()
    half = np.abs(np.log(s0)) / (2 * wmin) + 1e-12
    lo, hi = -half.copy(), half.copy()
    logm = np.where(mod2 > 0, np.log(np.where(mod2 > 0, mod2, 1.0)), -np.inf)

    def g(t):
        z = 2 * t[:, None] * w[None, :] + logm
        zmax = z.max(axis=1)
        e = np.exp(z - zmax[:, None])
        se = e.sum(axis=1)
        val = zmax + np.log(se)
        grad = (e * 2 * w[None, :]).sum(axis=1) / se
        return val, grad

    for _ in range(40):
        mid = 0.5 * (lo + hi)
        val, _ = g(mid)
        up = val > 0
        hi = np.where(up, mid, hi)
        lo = np.where(up, lo, mid)
    t = 0.5 * (lo + hi)
    for _ in range(50):
        val, grad = g(t)
        step = val / grad
        t_new = np.clip(t - step, lo, hi)
        done = np.abs(t_new - t) <= PROJ_TOL * np.maximum(1.0, np.abs(t))
        t = t_new
        if np.all(done):
            break
    return t


def project_weighted_batch(blocks: np.ndarray, weights: np.ndarray) -> np.ndarray:
    """Project a batch (N, k, #S) of nonzero blocks; returns (N, k, #S)."""
    blocks = np.asarray(blocks, dtype=np.complex128)
    weights = np.asarray(weights, dtype=np.float64)
    N = blocks.shape[0]
    mod2 = (np.abs(blocks) ** 2).reshape(N, -1)
    if np.any(mod2.sum(axis=1) == 0):
        raise ValidationError("cannot project the zero block")
    t = _solve_t(mod2, weights.ravel())
    return blocks * np.exp(t[:, None, None] * weights[None, :, :])


def project_weighted(x, weights) -> SpherePoint:
    """Weighted projection pi_w(x) of a single nonzero block (k, #S)."""
    x = np.asarray(x, dtype=np.complex128)
    w = np.asarray(weights, dtype=np.float64)
    if x.ndim == 1:
        x = x[:, None]
        w = w.reshape(-1, 1) if w.ndim == 1 else w
    return SpherePoint(project_weighted_batch(x[None], w)[0])


def sphere_real(points: np.ndarray, d_nu: Sequence[int]) -> np.ndarray:
    """(N, k, #S) complex -> (N, k*deg) real, ordered (row, place, Re/Im)."""
    points = np.asarray(points)
    cols = []
    for i in range(points.shape[1]):
        for nu, dn in enumerate(d_nu):
            cols.append(points[:, i, nu].real)
            if dn == 2:
                cols.append(points[:, i, nu].imag)
    return np.stack(cols, axis=1)


@dataclass(frozen=True, eq=False)
class CapSpec:
    """Open cap {v : <center, v> > cos(radius)} on a sphere in R^dim.

    ``full`` is the whole sphere; ``complement`` flips membership, so a cap
    and its complement partition the sphere.
    """

    center: Optional[np.ndarray]
    radius: float
    full: bool = False
    complement: bool = False

    def __post_init__(self):
        if self.full:
            return
        c = np.asarray(self.center, dtype=np.float64).ravel()
        nrm = np.linalg.norm(c)
        if nrm == 0:
            raise ValidationError("cap center must be nonzero")
        if not (0 < self.radius < math.pi):
            raise ValidationError(f"cap radius must lie in (0, pi), got {self.radius}")
        c = c / nrm
        c.setflags(write=False)
        object.__setattr__(self, "center", c)

    @classmethod
    def whole(cls) -> "CapSpec":
        return cls(None, math.pi, full=True)

    @classmethod
    def hemisphere(cls, dim: int, axis: int = 0, sign: int = 1) -> "CapSpec":
        if not 0 <= axis < dim:
            raise ValidationError(f"hemisphere axis {axis + 1} outside 1..{dim}")
        c = np.zeros(dim)
        c[axis] = 1.0 if sign >= 0 else -1.0
        return cls(c, math.pi / 2)

    @classmethod
    def parse(cls, desc, dim: int) -> "CapSpec":
        """'full', 'hemisphere:+k' / 'hemisphere:-k' (1-based axis) or {center, radius}."""
        if isinstance(desc, CapSpec):
            return desc
        if isinstance(desc, dict):
            cap = cls(np.asarray(desc["center"], dtype=np.float64), float(desc["radius"]))
            if cap.center.shape[0] != dim:
                raise ValidationError(f"cap center has dimension {cap.center.shape[0]}, sphere needs {dim}")
            return cap
        text = str(desc).strip()
        if text == "full":
            return cls.whole()
        if text.startswith("hemisphere"):
            arg = text.partition(":")[2] or "+1"
            sign = -1 if arg.startswith("-") else 1
            axis = int(arg.lstrip("+-") or 1) - 1
            return cls.hemisphere(dim, axis, sign)
        raise ValidationError(f"cannot parse cap descriptor {desc!r}")

    def complemented(self) -> "CapSpec":
        if self.full:
            raise ValidationError("the full sphere has empty complement")
        return CapSpec(self.center, self.radius, complement=not self.complement)

    @property
    def threshold(self) -> float:
        # exact zero for hemispheres so that sign tests are exact
        return 0.0 if self.radius == math.pi / 2 else math.cos(self.radius)


def cap_contains(cap: CapSpec, vecs: np.ndarray) -> np.ndarray:
    vecs = np.atleast_2d(vecs)
    if cap.full:
        return np.ones(vecs.shape[0], dtype=bool)
    if vecs.shape[1] != cap.center.shape[0]:
        raise ValidationError(f"cap lives in R^{cap.center.shape[0]}, points in R^{vecs.shape[1]}")
    inside = vecs @ cap.center > cap.threshold
    return ~inside if cap.complement else inside


def cap_volume_exact(cap: CapSpec, dim: int) -> float:
    """Normalized surface measure of the cap on S^{dim-1}."""
    if cap.full:
        return 1.0
    r = cap.radius
    if dim == 1:
        frac = 0.5  # one of the two points {+-1}
    elif dim == 2:
        frac = r / math.pi
    elif dim == 3:
        frac = (1 - math.cos(r)) / 2
    else:
        half = 0.5 * float(betainc((dim - 1) / 2, 0.5, math.sin(r) ** 2))
        frac = half if r <= math.pi / 2 else 1 - half
    return 1 - frac if cap.complement else frac


def cap_volume(cap: CapSpec, dim: int, samples: int, seed: int) -> tuple[float, float]:
    """Monte Carlo normalized cap measure from uniform sphere samples."""
    if samples < 1000:
        raise ValidationError("cap_volume needs at least 1000 samples")
    if cap.full:
        return 1.0, 0.0
    rng = np.random.default_rng(seed)
    g = rng.standard_normal((samples, dim))
    v = g / np.linalg.norm(g, axis=1, keepdims=True)
    hit = cap_contains(cap, v).astype(np.float64)
    p = hit.mean()
    return float(p), float(hit.std(ddof=1) / math.sqrt(samples))


def directions(records, weights: WeightScheme) -> tuple[np.ndarray, np.ndarray]:
    """Real sphere coordinates (pi_a(x), pi_b(y)) for a list of records."""
    x = np.stack([r.point.x for r in records])
    y = np.stack([r.point.y for r in records])
    return (sphere_real(project_weighted_batch(x, weights.a), weights.d_nu),
            sphere_real(project_weighted_batch(y, weights.b), weights.d_nu))


def count_directional(spec, weights: WeightScheme, c: float, T: float, A: CapSpec, B: CapSpec,
                      workers: int = 1) -> int:
    """#{approximates with pi_a(x) in A and pi_b(y) in B}."""
    from .lattice import enumerate_lattice_points

    region = RegionSpec("E_AB", c, T, (A, B))
    return len(enumerate_lattice_points(spec, region, weights, workers=workers))


def analytic_volume_AB(field, weights: WeightScheme, c: float, T: float, A: CapSpec, B: CapSpec) -> float:
    """lambda(E_{T,c}) vol(A) vol(B) with exact normalized cap measures.

    This is the volume of E_{T,c}(A, B) only when the projections push the
    quasi-norm balls to the uniform sphere measure, e.g. one place with a
    single row (an interval or a disc). Boxes such as the totally real
    quadratic ball put more mass near the coordinate axes; use mc_volume on
    an E_AB region for those.
    """
    from .diophantine import analytic_volume_E

    deg = field.degree
    return (analytic_volume_E(field, weights, c, T)
            * cap_volume_exact(A, weights.m * deg) * cap_volume_exact(B, weights.n * deg))
