"""Weights, weighted quasi-norms and the regions E_{T,c}, F_{T,c}, E_{T,c}(A,B).

A block of K_S^k is stored as a complex array of shape ``(k, #S)``: entry
``[i, nu]`` is the value at place nu (real places carry zero imaginary
part). Batches add a leading axis.

All region tests are done in log space. ``1 <= ||y||_b < e^T`` becomes
``0 <= log||y||_b < T`` and ``||x||_a ||y||_b < c`` becomes
``log||x||_a + log||y||_b < log c``, which keeps ``T = log 10`` and friends
free of exp/log round-trip ties.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field as dc_field
from typing import Any, Optional, Sequence

import numpy as np

from .errors import ValidationError

NORMALIZATION_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class WeightScheme:
    """Weights a (m x #S) and b (n x #S) with sum d_nu a = sum d_nu b = 1."""

    a: np.ndarray
    b: np.ndarray
    d_nu: np.ndarray

    def __post_init__(self):
        a = np.array(self.a, dtype=np.float64, ndmin=2)
        b = np.array(self.b, dtype=np.float64, ndmin=2)
        d_nu = np.array(self.d_nu, dtype=np.int64, ndmin=1)
        if a.shape[1] != d_nu.shape[0] or b.shape[1] != d_nu.shape[0]:
            raise ValidationError(f"weights must have {d_nu.shape[0]} columns (one per place)")
        for name, w in (("a", a), ("b", b)):
            if not np.all(np.isfinite(w)) or np.any(w <= 0):
                raise ValidationError(f"weights {name} must be finite and strictly positive")
            total = float((w * d_nu).sum())
            if abs(total - 1.0) > NORMALIZATION_TOL:
                raise ValidationError(f"weights {name}: sum of d_nu * weight is {total!r}, expected 1")
        for arr in (a, b, d_nu):
            arr.setflags(write=False)
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)
        object.__setattr__(self, "d_nu", d_nu)

    @property
    def m(self) -> int:
        return self.a.shape[0]

    @property
    def n(self) -> int:
        return self.b.shape[0]

    @property
    def n_places(self) -> int:
        return self.d_nu.shape[0]

    def __eq__(self, other):
        return (isinstance(other, WeightScheme) and np.array_equal(self.a, other.a)
                and np.array_equal(self.b, other.b) and np.array_equal(self.d_nu, other.d_nu))

    def __hash__(self):
        return hash((self.a.tobytes(), self.b.tobytes(), self.d_nu.tobytes(), self.a.shape, self.b.shape))

    @classmethod
    def equal(cls, d_nu: Sequence[int], m: int, n: int) -> "WeightScheme":
        d_nu = np.asarray(d_nu)
        deg = int(d_nu.sum())
        S = d_nu.shape[0]
        return cls(np.full((m, S), 1.0 / (m * deg)), np.full((n, S), 1.0 / (n * deg)), d_nu)

    @classmethod
    def from_flat(cls, d_nu: Sequence[int], m: int, n: int, values: Sequence[float],
                  renormalize: bool = False) -> "WeightScheme":
        """a then b, each row-major over (row, place).

        With ``renormalize`` each block is rescaled so its d_nu-weighted sum
        is 1; otherwise the normalization is checked as given.
        """
        d_nu = np.asarray(d_nu)
        S = d_nu.shape[0]
        vals = np.asarray(values, dtype=np.float64)
        if vals.shape != ((m + n) * S,):
            raise ValidationError(f"expected {(m + n) * S} weights for m={m}, n={n}, #S={S}; got {vals.size}")
        a = vals[: m * S].reshape(m, S)
        b = vals[m * S:].reshape(n, S)
        if renormalize:
            a = a / (a * d_nu).sum()
            b = b / (b * d_nu).sum()
        return cls(a, b, d_nu)

    @classmethod
    def random(cls, d_nu: Sequence[int], m: int, n: int, rng: np.random.Generator,
               floor: float = 0.05) -> "WeightScheme":
        """Dirichlet-distributed scheme; ``floor`` keeps every share above floor/size."""
        d_nu = np.asarray(d_nu)
        S = d_nu.shape[0]

        def block(k):
            share = rng.dirichlet(np.ones(k * S))
            share = (1 - floor) * share + floor / (k * S)
            w = share.reshape(k, S) / d_nu
            return w / (w * d_nu).sum()

        return cls(block(m), block(n), d_nu)

    def flat(self) -> list[float]:
        return [float(v) for v in np.concatenate([self.a.ravel(), self.b.ravel()])]


@dataclass(frozen=True, eq=False)
class KSVec:
    """A point (x, y) of K_S^m x K_S^n; ``entries`` has shape (m + n, #S)."""

    entries: np.ndarray
    m: int

    def __post_init__(self):
        e = np.array(self.entries, dtype=np.complex128, ndmin=2)
        e.setflags(write=False)
        object.__setattr__(self, "entries", e)

    @property
    def x(self) -> np.ndarray:
        return self.entries[: self.m]

    @property
    def y(self) -> np.ndarray:
        return self.entries[self.m:]

    @property
    def d(self) -> int:
        return self.entries.shape[0]

    def allclose(self, other: "KSVec", tol: float = 1e-9) -> bool:
        return self.m == other.m and np.allclose(self.entries, other.entries, rtol=tol, atol=tol)


def log_quasi_norm(block, weights) -> np.ndarray | float:
    """max log|x_{i nu}| / w_{i nu}; -inf for a zero block. Works on batches."""
    block = np.asarray(block)
    weights = np.asarray(weights, dtype=np.float64)
    mod = np.abs(block)
    with np.errstate(divide="ignore"):
        terms = np.log(mod) / weights
    out = terms.reshape(terms.shape[: terms.ndim - 2] + (-1,)).max(axis=-1)
    return float(out) if np.ndim(out) == 0 else out


def quasi_norm(block, weights) -> np.ndarray | float:
    """max |x_{i nu}|^(1 / w_{i nu}); zero exactly when the block is zero."""
    out = np.exp(log_quasi_norm(block, weights))
    return float(out) if np.ndim(out) == 0 else out


@dataclass(frozen=True)
class RegionSpec:
    """E: 1 <= ||y||_b < e^T, ||x||_a ||y||_b < c.  F: drops the lower bound.

    E_AB adds the cap conditions pi_a(x) in A and pi_b(y) in B; ``caps``
    then holds the two CapSpec objects.
    """

    kind: str
    c: float
    T: float
    caps: Optional[tuple[Any, Any]] = None

    def __post_init__(self):
        if self.kind not in ("E", "F", "E_AB"):
            raise ValidationError(f"unknown region kind {self.kind!r}")
        if not (self.c >= 0 and math.isfinite(self.c)):
            raise ValidationError(f"c must be finite and >= 0, got {self.c}")
        if not (self.T > 0):
            raise ValidationError(f"T must be > 0, got {self.T}")
        if self.kind == "E_AB" and (self.caps is None or len(self.caps) != 2):
            raise ValidationError("E_AB region needs a pair of caps (A, B)")

    @property
    def log_c(self) -> float:
        return math.log(self.c) if self.c > 0 else -math.inf

    @property
    def bounded(self) -> bool:
        return self.kind != "F"

    def with_T(self, T: float) -> "RegionSpec":
        return RegionSpec(self.kind, self.c, T, self.caps)

    def with_c(self, c: float) -> "RegionSpec":
        return RegionSpec(self.kind, c, self.T, self.caps)


@dataclass(frozen=True)
class ApproximateRecord:
    """One solution (p, q) of ||theta q - p||_a ||q||_b < c with 1 <= ||q||_b < e^T.

    ``p`` follows the approximation sign convention, so the lattice point
    is iota(-p) + theta iota(q) = theta q - p.
    """

    p: tuple
    q: tuple
    value: float
    q_size: float
    point: Optional[KSVec] = dc_field(default=None, compare=False, repr=False)
    directions: Optional[tuple] = dc_field(default=None, compare=False, repr=False)


def membership_mask(region: RegionSpec, weights: WeightScheme, x: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Vectorised membership for batches x (N, m, #S), y (N, n, #S)."""
    ly = np.atleast_1d(log_quasi_norm(y, weights.b))
    lx = np.atleast_1d(log_quasi_norm(x, weights.a))
    if region.c <= 0:
        return np.zeros(ly.shape, dtype=bool)
    # y = 0 gives ly = -inf: excluded from E by ly >= 0, kept in F since 0 < c
    ok = (ly < region.T) & (lx + ly < region.log_c)
    if region.kind != "F":
        ok &= ly >= 0
    if region.kind == "E_AB":
        # x = 0 has no direction; such points are counted outside every cap
        from .spiralling import cap_contains, project_weighted_batch, sphere_real

        A, B = region.caps
        idx = np.nonzero(ok)[0]
        if idx.size:
            xa = x[idx]
            nonzero = np.any(np.abs(xa.reshape(len(idx), -1)) > 0, axis=1)
            inA = np.zeros(len(idx), dtype=bool)
            if nonzero.any():
                inA[nonzero] = cap_contains(A, sphere_real(project_weighted_batch(xa[nonzero], weights.a), weights.d_nu))
            inB = cap_contains(B, sphere_real(project_weighted_batch(y[idx], weights.b), weights.d_nu))
            ok[idx] = inA & inB
    return ok


def region_membership(region: RegionSpec, weights: WeightScheme, point) -> bool:
    """Membership of a single KSVec (or an (x, y) pair of blocks)."""
    if isinstance(point, KSVec):
        x, y = point.x, point.y
    else:
        x, y = (np.asarray(v, dtype=np.complex128) for v in point)
    x = np.asarray(x, dtype=np.complex128).reshape(1, weights.m, weights.n_places)
    y = np.asarray(y, dtype=np.complex128).reshape(1, weights.n, weights.n_places)
    return bool(membership_mask(region, weights, x, y)[0])
