"""Number fields K with exact arithmetic in O_K and numerical places.

Elements of O_K are integer coordinate vectors over a fixed integral basis
``b_0 = 1, b_1, ..., b_{n-1}``; products go through an exact integer
multiplication table. Archimedean places are carried as refined double
precision roots of the minimal polynomial, one per real root and one per
conjugate pair.

Comparisons against embedded values use a relative tolerance of 1e-9
(``EMBED_TOL``); anything stored as coordinates is exact.
"""
from __future__ import annotations

import dataclasses
import itertools
import logging
import math
from dataclasses import dataclass
from typing import Iterable, Sequence, Union

import numpy as np

from . import _kernels
from .errors import ConvergenceError, ResourceCapError, ValidationError
from .intlinalg import det_bareiss, hnf_rows, solve_rational

log = logging.getLogger(__name__)

EMBED_TOL = 1e-9
DEFAULT_CELL_CAP = 50_000_000


@dataclass(frozen=True)
class PlaceInfo:
    kind: str  # "real" or "complex"
    d_nu: int
    root: complex


@dataclass(frozen=True, order=True)
class AlgInt:
    """An element of O_K as exact coordinates over the integral basis."""

    coords: tuple[int, ...]
    field: "FieldHandle" = dataclasses.field(compare=False, repr=False)

    def _coerce(self, other):
        if isinstance(other, AlgInt):
            if other.field is not self.field:
                raise ValidationError("elements belong to different fields")
            return other
        if isinstance(other, (int, np.integer)):
            return self.field.from_int(int(other))
        return NotImplemented

    def __add__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return AlgInt(tuple(x + y for x, y in zip(self.coords, other.coords)), self.field)

    __radd__ = __add__

    def __neg__(self):
        return AlgInt(tuple(-x for x in self.coords), self.field)

    def __sub__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return AlgInt(self.field.mul_coords(self.coords, other.coords), self.field)

    __rmul__ = __mul__

    def __pow__(self, k: int):
        if k < 0:
            return self.field.inverse(self) ** (-k)
        result = self.field.one
        base = self
        while k:
            if k & 1:
                result = result * base
            base = base * base
            k >>= 1
        return result

    def __bool__(self):
        return any(self.coords)

    def embed(self) -> np.ndarray:
        return self.field.embed_coords(np.array(self.coords, dtype=np.float64))


@dataclass(frozen=True)
class KElement:
    """A nonzero element of K written as num/den with num, den in O_K."""

    num: AlgInt
    den: AlgInt

    def __post_init__(self):
        if not self.den:
            raise ValidationError("zero denominator")


Element = Union[AlgInt, KElement, int]


class FieldHandle:
    """A built number field; treat as immutable."""

    def __init__(self, *, name, min_poly, mult_table, generator, places, basis_embeddings,
                 fundamental_units, torsion_order, torsion_gen):
        self.name = name
        self.min_poly = tuple(int(c) for c in min_poly)
        self.degree = len(self.min_poly) - 1
        self._table = [[list(map(int, cell)) for cell in row] for row in mult_table]
        self.basis_mult_table = np.array(mult_table, dtype=np.int64)
        self.basis_mult_table.setflags(write=False)
        self.generator = tuple(int(c) for c in generator)
        self.places = tuple(places)
        self.basis_embeddings = np.asarray(basis_embeddings, dtype=np.complex128)
        self.basis_embeddings.setflags(write=False)
        self.d_nu = np.array([p.d_nu for p in self.places], dtype=np.int64)
        self.r1 = sum(1 for p in self.places if p.kind == "real")
        self.r2 = len(self.places) - self.r1
        self.n_places = len(self.places)

        dims = []
        for nu, p in enumerate(self.places):
            dims.append((nu, 0))
            if p.kind == "complex":
                dims.append((nu, 1))
        self.dim_place = np.array([nu for nu, _ in dims], dtype=np.int64)
        mr = np.empty((self.degree, self.degree))
        for r, (nu, part) in enumerate(dims):
            row = self.basis_embeddings[nu]
            mr[r] = row.real if part == 0 else row.imag
        self.real_matrix = mr
        det = abs(np.linalg.det(mr))
        if det < 1e-12:
            raise ValidationError(f"{name}: basis embedding matrix is numerically singular (|det| = {det:.3e})")
        self.real_inverse = np.linalg.inv(mr)
        self.covolume = float(det)
        for arr in (self.real_matrix, self.real_inverse):
            arr.setflags(write=False)

        self.torsion_order = int(torsion_order)
        self.torsion_gen = AlgInt(tuple(int(c) for c in torsion_gen), self)
        self.fundamental_units = tuple(AlgInt(tuple(int(c) for c in u), self) for u in fundamental_units)
        self.unit_rank = len(self.fundamental_units)
        if self.unit_rank:
            self.unit_log_matrix = np.array([self._log_abs(u) for u in self.fundamental_units])
        else:
            self.unit_log_matrix = np.zeros((0, self.n_places))

    def __repr__(self):
        return f"FieldHandle({self.name!r}, degree={self.degree}, signature=({self.r1}, {self.r2}))"

    # exact arithmetic -------------------------------------------------
    @property
    def one(self) -> AlgInt:
        return self.from_int(1)

    @property
    def zero(self) -> AlgInt:
        return self.from_int(0)

    def from_int(self, k: int) -> AlgInt:
        return AlgInt((int(k),) + (0,) * (self.degree - 1), self)

    def element(self, coords: Sequence[int]) -> AlgInt:
        coords = tuple(int(c) for c in coords)
        if len(coords) != self.degree:
            raise ValidationError(f"expected {self.degree} coordinates, got {len(coords)}")
        return AlgInt(coords, self)

    def mul_coords(self, x: Sequence[int], y: Sequence[int]) -> tuple[int, ...]:
        out = [0] * self.degree
        for i, xi in enumerate(x):
            if not xi:
                continue
            row = self._table[i]
            for j, yj in enumerate(y):
                if not yj:
                    continue
                f = xi * yj
                for k, t in enumerate(row[j]):
                    if t:
                        out[k] += f * t
        return tuple(out)

    def mult_matrix(self, x: AlgInt | Sequence[int]) -> list[list[int]]:
        """Integer matrix of y -> x*y acting on coordinate columns."""
        coords = x.coords if isinstance(x, AlgInt) else tuple(x)
        n = self.degree
        return [[sum(coords[i] * self._table[i][j][k] for i in range(n)) for j in range(n)] for k in range(n)]

    def norm_exact(self, x: AlgInt) -> int:
        """Signed field norm N_{K/Q}(x) as an exact integer."""
        return det_bareiss(self.mult_matrix(x))

    def inverse(self, u: AlgInt) -> AlgInt:
        sol = solve_rational(self.mult_matrix(u), self.one.coords)
        if sol is None or any(v.denominator != 1 for v in sol):
            raise ValidationError(f"{u.coords} is not a unit of O_K")
        return AlgInt(tuple(int(v) for v in sol), self)

    def ideal_key(self, x: AlgInt | Sequence[int]) -> tuple:
        """Canonical key of the principal ideal (x): HNF of its Z-basis."""
        m = self.mult_matrix(x)
        return hnf_rows([list(col) for col in zip(*m)])

    # embeddings -------------------------------------------------------
    def embed_coords(self, coords: np.ndarray) -> np.ndarray:
        """(..., degree) coordinates -> (..., n_places) complex embeddings."""
        return np.asarray(coords, dtype=np.float64) @ self.basis_embeddings.T

    def realify(self, values: np.ndarray) -> np.ndarray:
        """(..., n_places) complex -> (..., degree) real coordinates of K_S."""
        values = np.asarray(values)
        out = np.empty(values.shape[:-1] + (self.degree,))
        r = 0
        for nu, p in enumerate(self.places):
            out[..., r] = values[..., nu].real
            r += 1
            if p.kind == "complex":
                out[..., r] = values[..., nu].imag
                r += 1
        return out

    def complexify(self, real: np.ndarray) -> np.ndarray:
        real = np.asarray(real, dtype=np.float64)
        out = np.zeros(real.shape[:-1] + (self.n_places,), dtype=np.complex128)
        r = 0
        for nu, p in enumerate(self.places):
            out[..., nu] = real[..., r]
            r += 1
            if p.kind == "complex":
                out[..., nu] += 1j * real[..., r]
                r += 1
        return out

    def _log_abs(self, x: AlgInt) -> np.ndarray:
        return self.d_nu * np.log(np.abs(x.embed()))


# ---------------------------------------------------------------------------
# construction


def _horner(coeffs, z):
    f = 0j if isinstance(z, complex) else 0.0
    df = f
    for c in coeffs:
        df = df * z + f
        f = f * z + c
    return f, df


def _refine_root(coeffs, z):
    for _ in range(100):
        f, df = _horner(coeffs, z)
        if df == 0:
            break
        step = f / df
        z = z - step
        if abs(step) <= 1e-15 * max(1.0, abs(z)):
            break
    f, _ = _horner(coeffs, z)
    scale = max(1.0, abs(z)) ** (len(coeffs) - 1)
    if abs(f) > 1e-10 * scale:
        raise ConvergenceError(f"root refinement did not converge near {z} (|f| = {abs(f):.3e})")
    return z


def _places_of(min_poly: Sequence[int]) -> list[PlaceInfo]:
    coeffs = [float(c) for c in min_poly]
    raw = np.roots(coeffs) if len(coeffs) > 1 else np.array([])
    reals, complexes = [], []
    for z in raw:
        if abs(z.imag) < 1e-9 * max(1.0, abs(z)):
            reals.append(float(_refine_root(coeffs, float(z.real))))
        elif z.imag > 0:
            complexes.append(complex(_refine_root(coeffs, complex(z))))
    reals.sort(reverse=True)
    complexes.sort(key=lambda z: (z.imag, z.real))
    places = [PlaceInfo("real", 1, complex(r, 0.0)) for r in reals]
    places += [PlaceInfo("complex", 2, z) for z in complexes]
    return places


def _check_polynomial(min_poly: Sequence[int]) -> None:
    import sympy

    if len(min_poly) < 2 or min_poly[0] != 1:
        raise ValidationError(f"minimal polynomial {list(min_poly)} must be monic of degree >= 1")
    x = sympy.Symbol("x")
    poly = sympy.Poly([int(c) for c in min_poly], x, domain="ZZ")
    if poly.degree() > 1 and sympy.discriminant(poly) == 0:
        raise ValidationError(f"minimal polynomial {list(min_poly)} is not squarefree")
    if not poly.is_irreducible:
        raise ValidationError(f"minimal polynomial {list(min_poly)} is reducible over Q")


def _power_table(min_poly: Sequence[int]) -> list:
    n = len(min_poly) - 1
    red = []
    v = [1] + [0] * (n - 1)
    for _ in range(2 * n - 1):
        red.append(v)
        top = v[n - 1]
        v = [0] + v[: n - 1]
        for k in range(n):
            v[k] -= top * min_poly[n - k]
    return [[red[i + j] for j in range(n)] for i in range(n)]


def _check_table(table, min_poly, generator) -> None:
    n = len(min_poly) - 1
    arr = np.array(table, dtype=object)
    if arr.shape != (n, n, n):
        raise ValidationError(f"mult_table must have shape ({n}, {n}, {n}), got {arr.shape}")
    for j in range(n):
        if list(table[0][j]) != [int(k == j) for k in range(n)]:
            raise ValidationError("basis element 0 must be the identity")
        for i in range(n):
            if list(table[i][j]) != list(table[j][i]):
                raise ValidationError("mult_table is not commutative")

    def mul(x, y):
        out = [0] * n
        for i in range(n):
            for j in range(n):
                if x[i] and y[j]:
                    for k in range(n):
                        out[k] += x[i] * y[j] * table[i][j][k]
        return out

    basis = [[int(k == i) for k in range(n)] for i in range(n)]
    for a, b, c in itertools.product(basis, repeat=3):
        if mul(mul(a, b), c) != mul(a, mul(b, c)):
            raise ValidationError("mult_table is not associative")
    # min_poly(generator) must vanish exactly
    acc = [0] * n
    for coef in min_poly:
        acc = mul(acc, list(generator))
        acc[0] += int(coef)
    if any(acc):
        raise ValidationError("mult_table is inconsistent with min_poly: min_poly(generator) != 0")


def _basis_embeddings(table, generator, places, power: bool) -> np.ndarray:
    n = len(table)
    emb = np.empty((len(places), n), dtype=np.complex128)
    if power:
        for nu, p in enumerate(places):
            emb[nu] = [p.root ** k for k in range(n)]
        return emb
    # sigma(b) is the left eigenvector of mult-by-generator for eigenvalue sigma(theta)
    mg = np.array([[sum(generator[i] * table[i][j][k] for i in range(n)) for j in range(n)]
                   for k in range(n)], dtype=np.float64)
    for nu, p in enumerate(places):
        _, _, vh = np.linalg.svd(mg.T - p.root * np.eye(n))
        v = vh[-1].conj()
        emb[nu] = v / v[0]
    return emb


def build_field(config: dict) -> FieldHandle:
    """Build and validate a field from a preset dictionary.

    Keys: ``name``, ``min_poly`` (integers, leading coefficient first),
    ``basis`` (``"power"`` or ``{"mult_table": ..., "generator": ...}``),
    ``fundamental_units`` (coordinate lists), ``torsion``
    (``{"order": w, "gen": coords}``).
    """
    from .schema import validate_preset

    validate_preset(config)
    name = config.get("name", "K")
    min_poly = [int(c) for c in config["min_poly"]]
    _check_polynomial(min_poly)
    n = len(min_poly) - 1

    basis = config.get("basis", "power")
    if basis == "power":
        table = _power_table(min_poly)
        generator = [0] * n
        if n == 1:
            generator[0] = -min_poly[1]
        else:
            generator[1] = 1
        power = True
    else:
        table = [[[int(v) for v in cell] for cell in row] for row in basis["mult_table"]]
        generator = [int(c) for c in basis["generator"]]
        power = False
    _check_table(table, min_poly, generator)

    places = _places_of(min_poly)
    if sum(p.d_nu for p in places) != n:
        raise ValidationError(f"{name}: places do not account for the degree")
    emb = _basis_embeddings(table, generator, places, power)
    # multiplicativity of the embeddings on basis products
    for i, j in itertools.product(range(n), repeat=2):
        lhs = emb[:, i] * emb[:, j]
        rhs = emb @ np.array(table[i][j], dtype=np.float64)
        if np.max(np.abs(lhs - rhs)) > 1e-9 * max(1.0, np.max(np.abs(lhs))):
            raise ValidationError(f"{name}: embeddings are not multiplicative on the basis")

    tors = config.get("torsion", {"order": 2, "gen": [-1] + [0] * (n - 1)})
    field = FieldHandle(
        name=name, min_poly=min_poly, mult_table=table, generator=generator, places=places,
        basis_embeddings=emb, fundamental_units=config.get("fundamental_units", []),
        torsion_order=tors["order"], torsion_gen=tors["gen"],
    )
    _check_units(field)
    return field


def _check_units(field: FieldHandle) -> None:
    w, g = field.torsion_order, field.torsion_gen
    if g ** w != field.one:
        raise ValidationError(f"{field.name}: torsion generator raised to {w} is not 1")
    for k in range(1, w):
        if w % k == 0 and g ** k == field.one:
            raise ValidationError(f"{field.name}: torsion generator has order {k}, not {w}")
    for u in field.fundamental_units:
        if abs(field.norm_exact(u)) != 1:
            raise ValidationError(f"{field.name}: {u.coords} has norm {field.norm_exact(u)}, not a unit")
    expected = field.r1 + field.r2 - 1
    if field.unit_rank != expected:
        raise ValidationError(f"{field.name}: expected {expected} fundamental units, got {field.unit_rank}")
    if expected:
        sv = np.linalg.svd(field.unit_log_matrix, compute_uv=False)
        if sv.min() < 1e-8:
            raise ValidationError(f"{field.name}: fundamental units are multiplicatively dependent")


# ---------------------------------------------------------------------------
# element-level operations


def _as_coords(field: FieldHandle, e) -> np.ndarray:
    if isinstance(e, AlgInt):
        return np.array(e.coords, dtype=np.float64)
    if isinstance(e, (int, np.integer)):
        return np.array(field.from_int(int(e)).coords, dtype=np.float64)
    arr = np.asarray(e, dtype=np.float64)
    if arr.shape != (field.degree,):
        raise ValidationError(f"cannot interpret {e!r} as an element of {field.name}")
    return arr


def embed_element(field: FieldHandle, e: Element | Sequence[int]) -> np.ndarray:
    """Values of e at each place, as complex numbers (one per place)."""
    if isinstance(e, KElement):
        return embed_element(field, e.num) / embed_element(field, e.den)
    return field.embed_coords(_as_coords(field, e))


def field_norm(field: FieldHandle, c: Element | Sequence[int]) -> float:
    """prod_nu |iota_nu(c)|^{d_nu}. Zero input gives 0 with a warning."""
    vals = np.abs(embed_element(field, c))
    if not np.any(vals):
        log.warning("field_norm called on zero element")
        return 0.0
    return float(np.prod(vals ** field.d_nu))


def log_unit(field: FieldHandle, u: AlgInt) -> np.ndarray:
    """Log(u) = (d_nu log|iota_nu(u)|)_nu; rejects non-units."""
    nrm = field_norm(field, u)
    if abs(nrm - 1.0) > EMBED_TOL:
        raise ValidationError(f"log_unit: element {u.coords} has norm {nrm!r}, not a unit")
    return field.d_nu * np.log(np.abs(embed_element(field, u)))


def house(field: FieldHandle, e: Element) -> float:
    return float(np.max(np.abs(embed_element(field, e))))


def bounded_integer_coords(field: FieldHandle, house: float, cell_cap: int = DEFAULT_CELL_CAP) -> np.ndarray:
    """Coordinates of every e in O_K with max_nu |iota_nu(e)| <= house.

    Rows are sorted lexicographically. The coefficient box comes from the
    row sums of the inverse real embedding matrix.
    """
    if house < 0:
        raise ValidationError("house must be nonnegative")
    limit = house * (1 + EMBED_TOL) + 1e-12
    fbound = np.floor(limit * np.abs(field.real_inverse).sum(axis=1) + 1e-9)
    # checked in floating point: a huge house would overflow the int64 cast
    cells = float(np.prod(2.0 * fbound + 1))
    if not cells <= cell_cap:
        raise ResourceCapError(
            f"coefficient box for house {house:g} has {cells:.3g} cells, over the cell cap {cell_cap}", cap=cell_cap)
    bound = fbound.astype(np.int64)
    return _kernels.box_filter(-bound, bound, np.ascontiguousarray(field.real_matrix),
                               field.dim_place, field.n_places, limit * limit)


def enumerate_bounded_integers(field: FieldHandle, house: float, cell_cap: int = DEFAULT_CELL_CAP) -> list[AlgInt]:
    return [AlgInt(tuple(int(v) for v in row), field) for row in bounded_integer_coords(field, house, cell_cap)]


def torsion_elements(field: FieldHandle) -> list[AlgInt]:
    out, g = [], field.one
    for _ in range(field.torsion_order):
        out.append(g)
        g = g * field.torsion_gen
    return out


def enumerate_units(field: FieldHandle, house: float) -> list[AlgInt]:
    """All units of house <= house (torsion times fundamental-unit powers)."""
    if house < 1 - EMBED_TOL:
        return []
    tors = torsion_elements(field)
    if field.unit_rank == 0:
        return sorted(tors)
    # Log(u) lies in the trace-zero hyperplane with |Log_nu| <= degree * log(house)
    ell = field.degree * math.log(max(house, 1.0)) + 1e-9
    pinv = np.linalg.pinv(field.unit_log_matrix)  # (n_places, rank)
    kmax = np.floor(np.abs(pinv).sum(axis=0) * ell + 1e-9).astype(int)
    limit = house * (1 + EMBED_TOL)
    out = []
    powers = []
    for u, k in zip(field.fundamental_units, kmax):
        inv = field.inverse(u)
        table = {0: field.one}
        for e in range(1, k + 1):
            table[e] = table[e - 1] * u
            table[-e] = table[-e + 1] * inv
        powers.append(table)
    for exps in itertools.product(*[range(-k, k + 1) for k in kmax]):
        base = field.one
        for table, e in zip(powers, exps):
            base = base * table[e]
        if np.max(np.abs(base.embed())) <= limit:
            out.extend(t * base for t in tors)
    return sorted(out)


# ---------------------------------------------------------------------------
# principal ideals


def _ideal_search_house(field: FieldHandle, s: float) -> float:
    spread = 0.0
    if field.unit_rank:
        spread = float(np.max(0.5 * np.abs(field.unit_log_matrix).sum(axis=0) / field.d_nu))
    return s ** (1.0 / field.degree) * math.exp(spread)


def _norms_of(field: FieldHandle, coords: np.ndarray) -> np.ndarray:
    vals = np.abs(field.embed_coords(coords))
    return np.rint(np.prod(vals ** field.d_nu, axis=-1)).astype(np.int64)


def principal_ideals(field: FieldHandle, s: float, cell_cap: int = DEFAULT_CELL_CAP) -> list[tuple[int, AlgInt]]:
    """(norm, generator) for every nonzero principal ideal of norm <= s.

    Generators found in the search region are grouped by the HNF of the
    ideal they generate; each ideal is represented by its lexicographically
    smallest generator there. Sorted by norm, then by generator.
    """
    if s < 1:
        return []
    coords = bounded_integer_coords(field, _ideal_search_house(field, s), cell_cap)
    norms = _norms_of(field, coords)
    sel = (norms >= 1) & (norms <= s)
    seen: dict[tuple, tuple[int, AlgInt]] = {}
    for row, nrm in zip(coords[sel], norms[sel]):
        key = field.ideal_key([int(v) for v in row])
        if key not in seen:
            seen[key] = (int(nrm), AlgInt(tuple(int(v) for v in row), field))
    return sorted(seen.values(), key=lambda t: (t[0], t[1]))


def principal_ideal_norms(field: FieldHandle, s: float, cell_cap: int = DEFAULT_CELL_CAP) -> np.ndarray:
    """Sorted norms, one entry per nonzero principal ideal of norm <= s."""
    if s < 1:
        return np.empty(0, np.int64)
    if field.unit_rank == 0:
        # rank 0: every generator of (alpha) is a torsion multiple and has
        # house exactly N(alpha)^(1/deg), so all of them lie in the box
        coords = bounded_integer_coords(field, _ideal_search_house(field, s), cell_cap)
        norms = _norms_of(field, coords)
        norms = norms[(norms >= 1) & (norms <= s)]
        vals, counts = np.unique(norms, return_counts=True)
        if np.any(counts % field.torsion_order):
            raise ValidationError(f"{field.name}: generator counts not divisible by torsion order")
        return np.repeat(vals, counts // field.torsion_order)
    return np.array([nrm for nrm, _ in principal_ideals(field, s, cell_cap)], dtype=np.int64)


def count_principal_ideals(field: FieldHandle, s: float, cell_cap: int = DEFAULT_CELL_CAP) -> int:
    return int(principal_ideal_norms(field, s, cell_cap).shape[0])


def zeta_partial(field: FieldHandle, s: float, ideal_norm_cap: int, cell_cap: int = DEFAULT_CELL_CAP) -> float:
    """Sum of N(a)^(-s) over principal ideals a with N(a) <= cap."""
    if s <= 1:
        raise ValidationError(f"zeta_partial needs s > 1, got {s}")
    if ideal_norm_cap < 1:
        raise ValidationError("ideal_norm_cap must be >= 1")
    norms = principal_ideal_norms(field, ideal_norm_cap, cell_cap).astype(np.float64)
    return math.fsum((norms ** (-s))[::-1])


def covolume_ok(field: FieldHandle) -> float:
    """|det| of the real embedding matrix of the integral basis."""
    return field.covolume


def coprime(field: FieldHandle, p: AlgInt, q: AlgInt) -> bool:
    """True iff the principal ideals (p) and (q) are coprime: (p) + (q) = O_K."""
    rows = [list(col) for col in zip(*field.mult_matrix(p))] + [list(col) for col in zip(*field.mult_matrix(q))]
    h = hnf_rows(rows)
    return len(h) == field.degree and all(h[i][i] == 1 for i in range(field.degree))


def iter_elements(field: FieldHandle, coords: Iterable[Sequence[int]]) -> Iterable[AlgInt]:
    for row in coords:
        yield AlgInt(tuple(int(v) for v in row), field)
