"""Named verification checks, each producing rows (check_name, lhs, rhs, margin, pass).

A check compares a computed quantity (lhs) with a reference (rhs). ``margin``
is the allowed slack in the direction stated per check. Parameters come from
the verification suite descriptor; omitted ones take the defaults below.
"""
from __future__ import annotations

import math
from typing import Callable

import numpy as np

from .errors import ValidationError
from .field import FieldHandle, coprime, enumerate_bounded_integers, principal_ideals
from .lattice import LatticeSpec, phi_covolume, random_theta
from .moments import (IntegerOracle, PrincipalIdealOracle, overlap_bound, overlap_volume, partition_count,
                      rogers_tail_sum, second_moment_stats, siegel_translate_stats, thunder_check,
                      time_average_sandwich, unit_cube_sum, z_count_table, zeta_bound_value)
from .presets import load_preset
from .regions import RegionSpec, WeightScheme

COLUMNS = ["check_name", "lhs", "rhs", "margin", "pass"]

Row = list


def coprime_pairs(field: FieldHandle, norm_max: int, p_house: float) -> list:
    """(p, q): q a generator of each principal ideal with N(q) <= norm_max,
    p any nonzero integer with house <= p_house and (p) + (q) = O_K."""
    qs = [q for _, q in principal_ideals(field, norm_max)]
    ps = [p for p in enumerate_bounded_integers(field, p_house) if any(p.coords)]
    return [(p, q) for q in qs for p in ps if coprime(field, p, q)]


def brute_partitions(k: int, M: int) -> int:
    """Partitions of M into exactly k positive parts, by listing nonincreasing tuples."""
    def rec(remaining, parts, cap):
        if parts == 0:
            return 1 if remaining == 0 else 0
        return sum(rec(remaining - v, parts - 1, v) for v in range(1, min(cap, remaining) + 1))

    return rec(M, k, M)


def _field(params) -> FieldHandle:
    return load_preset(params.get("field", "Q"))


def _weights(field, params) -> WeightScheme:
    m, n = params.get("m", 1), params.get("n", 1)
    w = params.get("weights", "equal")
    if w == "equal":
        return WeightScheme.equal(field.d_nu, m, n)
    return WeightScheme.from_flat(field.d_nu, m, n, w, renormalize=True)


def check_phi_covolume(params, seed):
    K = _field(params)
    d = params.get("d", 2)
    pairs = coprime_pairs(K, params.get("norm_max", 20), params.get("p_house", 3.0))
    agree = sum(phi_covolume(K, d, p, q, verify=True, residue_limit=params.get("residue_limit", 10_000)).agree
                for p, q in pairs)
    return [["phi_covolume", agree, len(pairs), 0, agree == len(pairs)]]


def check_translate_mean(params, seed):
    K = _field(params)
    W = _weights(K, params)
    region = RegionSpec("E", params.get("c", 1.0), params.get("T", 1.0))
    rep = siegel_translate_stats(K, W, region, params.get("n_theta", 2000), seed, params.get("workers", 1))
    margin = 3 * rep.standard_error
    return [
        ["translate_mean", rep.empirical_mean, rep.reference_value, margin,
         abs(rep.empirical_mean - rep.reference_value) <= margin],
        ["translate_mean:lattice_sum", rep.empirical_mean, rep.translate_expectation, margin,
         abs(rep.empirical_mean - rep.translate_expectation) <= margin],
    ]


def check_second_moment(params, seed):
    K = _field(params)
    W = _weights(K, params)
    region = RegionSpec("E", params.get("c", 1.0), params.get("T", 3.0))
    rep = second_moment_stats(K, W, region, params.get("n_theta", 500), seed, params.get("workers", 1))
    bound = params.get("bound", 10.0)
    return [["second_moment", rep.ratio, bound, bound - rep.ratio, rep.ratio < bound]]


def check_overlap(params, seed):
    K = _field(params)
    W = _weights(K, params)
    region = RegionSpec("E", params.get("c", 1.0), params.get("T", 2.0))
    gamma = K.element(params.get("gamma", [2] + [0] * (K.degree - 1)))
    est, se = overlap_volume(K, W, region, gamma, params.get("samples", 200_000), seed)
    bound = overlap_bound(K, W, region, gamma)
    return [["overlap", est, bound, 3 * se, est <= bound + 3 * se]]


def check_rogers_tail(params, seed):
    K = _field(params)
    d = params.get("d", 3)
    cap = params.get("cap", 1000)
    a, b = rogers_tail_sum(K, d, cap), rogers_tail_sum(K, d, 2 * cap)
    tol = params.get("tol", 1e-2)
    return [["rogers_tail", a, b, tol, abs(b - a) < tol]]


def check_zeta_bound(params, seed):
    K = _field(params)
    val = zeta_bound_value(K, params.get("d", 3), params.get("cap"))
    return [["zeta_bound", val, math.inf, math.nan, bool(math.isfinite(val) and val > 0)]]


def check_unit_cube(params, seed):
    K = load_preset(params.get("field", "Qsqrt2"))
    logs = params.get("log_norms", [0, 1, 2, 3])
    factor = params.get("factor", 3.0)
    res = [unit_cube_sum(K, log_norm=L, box_cap=params.get("box_cap", 40)) for L in logs]
    vals = [r.value for r in res]
    spread = max(vals) / min(vals)
    tails_ok = all(r.tail_bound < params.get("tail_tol", 1e-6) for r in res)
    return [["unit_cube", spread, factor, factor - spread, bool(spread < factor and tails_ok)]]


def check_partition(params, seed):
    M_max, k_max = params.get("M_max", 40), params.get("k_max", 6)
    cases = [(k, M) for k in range(1, k_max + 1) for M in range(M_max + 1)]
    ok = sum(partition_count(k, M) == brute_partitions(k, M) for k, M in cases)
    return [["partition", ok, len(cases), 0, ok == len(cases)]]


def check_z_count(params, seed):
    n, W = params.get("n", 2), params.get("W", 5)
    total = sum(z_count_table(n, W).values())
    return [["z_count", total, (2 * W + 1) ** n, 0, total == (2 * W + 1) ** n]]


def check_thunder(params, seed):
    oracle_name = params.get("oracle", "integer")
    if oracle_name == "integer":
        oracle, c1, c2 = IntegerOracle(), 1.0, 1.0
    else:
        K = load_preset(params.get("field", "Qi"))
        oracle, c1, c2 = PrincipalIdealOracle(K), params.get("c1", math.pi / 4), 1.0
    s = params.get("exponent", 1.5)
    t = params.get("t", 200.0)
    res = thunder_check(c1, c2, params.get("c3", 0.5), oracle, lambda x: x ** (-s), t)
    return [["thunder", res.lhs, res.rhs, res.rhs - res.lhs, res.holds]]


def check_sandwich(params, seed):
    K = _field(params)
    W = _weights(K, params)
    rng = np.random.default_rng(seed)
    spec = LatticeSpec(K, W.m, W.n, random_theta(K, W.m, W.n, rng))
    R, T = params.get("R", 2.0), params.get("T", 5.0)
    res = time_average_sandwich(spec, W, params.get("c", 1.0), R, T, params.get("dt", 0.01))
    return [
        ["sandwich:lower", res.lower, res.middle, res.slack, res.lower <= res.middle + res.slack],
        ["sandwich:upper", res.middle, res.upper, res.slack, res.middle <= res.upper + res.slack],
    ]


CHECKS: dict[str, Callable] = {
    "phi_covolume": check_phi_covolume,
    "translate_mean": check_translate_mean,
    "second_moment": check_second_moment,
    "overlap": check_overlap,
    "rogers_tail": check_rogers_tail,
    "zeta_bound": check_zeta_bound,
    "unit_cube": check_unit_cube,
    "partition": check_partition,
    "z_count": check_z_count,
    "thunder": check_thunder,
    "sandwich": check_sandwich,
}

# a quick suite: every check at small parameters
DEFAULT_SUITE = [
    {"name": "phi_covolume", "params": {"field": "Qi", "d": 2, "norm_max": 10, "p_house": 2.0}},
    {"name": "translate_mean", "params": {"field": "Q", "T": 1.0, "n_theta": 200}, "seed": 1},
    {"name": "second_moment", "params": {"field": "Q", "T": 3.0, "n_theta": 200}, "seed": 2},
    {"name": "overlap", "params": {"field": "Q", "gamma": [2], "samples": 100_000}, "seed": 3},
    {"name": "rogers_tail", "params": {"field": "Q", "d": 3, "cap": 1000}},
    {"name": "zeta_bound", "params": {"field": "Q", "d": 3}},
    {"name": "unit_cube", "params": {"field": "Qsqrt2"}},
    {"name": "partition", "params": {"M_max": 20, "k_max": 4}},
    {"name": "z_count", "params": {"n": 2, "W": 4}},
    {"name": "thunder", "params": {"oracle": "integer", "t": 100.0}},
    {"name": "sandwich", "params": {"field": "Q", "R": 2.0, "T": 4.0, "dt": 0.02}, "seed": 4},
]


def run_check(name: str, params: dict | None = None, seed: int = 0) -> list[Row]:
    if name not in CHECKS:
        raise ValidationError(f"unknown check {name!r}; known: {sorted(CHECKS)}")
    return CHECKS[name](dict(params or {}), seed)


def run_suite(checks: list[dict], base_seed: int = 0) -> list[Row]:
    """Run checks in order; a check without its own seed gets base_seed + index."""
    rows = []
    for i, chk in enumerate(checks):
        rows.extend(run_check(chk["name"], chk.get("params"), chk.get("seed", base_seed + i)))
    return rows
