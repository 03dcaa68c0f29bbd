"""Command line front end.

    nfapprox count   --field Q --theta 1.61803 --c 1 --T 0.6931
    nfapprox volume  --field Qi --c 1 --T 1 --samples 200000 --seed 7
    nfapprox spiral  --field Q --T 8 --caps hemisphere:+1 hemisphere:-1 --theta-seed 3
    nfapprox scaling --field Q --T-grid 5:15:1 --theta-seed 11
    nfapprox ideals  --field Qi --s-grid 1000,10000,100000
    nfapprox verify  --suite checks.json
    nfapprox presets
    nfapprox run experiment.json

Exit codes: 0 ok, 2 invalid input, 3 resource cap exceeded, 4 I/O failure.
"""
from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from . import __version__
from .errors import ReportIOError, ResourceCapError, ValidationError
from .report import Report, emit_report
from .schema import validate

COMMANDS = ("count", "volume", "spiral", "verify", "scaling", "ideals")
EXIT_OK, EXIT_VALIDATION, EXIT_RESOURCE, EXIT_IO = 0, 2, 3, 4

DEFAULTS = {
    "field": "Q",
    "m": 1,
    "n": 1,
    "weights": "equal",
    "c": 1.0,
    "T": 1.0,
    "samples": 200_000,
    "seed": 0,
    "workers": 1,
    "format": "csv",
}
SCALING_GRID = [float(t) for t in range(5, 16)]

# config keys that can change each command's results
_LATTICE_KEYS = ("field", "m", "n", "weights", "theta", "theta_seed", "c")
RELEVANT_KEYS = {
    "count": _LATTICE_KEYS + ("T",),
    "volume": ("field", "m", "n", "weights", "c", "T", "caps", "samples", "seed"),
    "spiral": _LATTICE_KEYS + ("T", "caps"),
    "scaling": _LATTICE_KEYS + ("T_grid",),
    "ideals": ("field", "s", "s_grid"),
    "verify": ("checks", "seed"),
    "presets": (),
}


def semantic_config(cfg: dict) -> dict:
    """The part of a resolved config that determines the results."""
    keys = RELEVANT_KEYS[cfg["command"]]
    out = {k: cfg[k] for k in keys if k in cfg}
    if "theta" in out:
        out.pop("theta_seed", None)
    out["command"] = cfg["command"]
    return out


# ---------------------------------------------------------------------------
# argument parsing


def _float_list(text: str) -> list[float]:
    """'1,2,3' or 'start:stop:step' (stop included when hit)."""
    text = text.strip()
    if not text:
        return []
    if ":" in text:
        parts = [float(v) for v in text.split(":")]
        if len(parts) != 3 or parts[2] <= 0:
            raise argparse.ArgumentTypeError(f"range {text!r} must be start:stop:step with step > 0")
        start, stop, step = parts
        k = int(math.floor((stop - start) / step + 1e-9))
        return [round(start + i * step, 12) for i in range(k + 1)]
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from exc


def _weights_arg(text: str):
    if text == "equal":
        return "equal"
    vals = _float_list(text)
    if not vals:
        raise argparse.ArgumentTypeError("weights must be 'equal' or a comma list")
    return vals


def _theta_arg(text: str):
    out = []
    for tok in text.split(","):
        tok = tok.strip().replace(" ", "")
        try:
            z = complex(tok)
        except ValueError as exc:
            raise argparse.ArgumentTypeError(f"bad theta entry {tok!r}") from exc
        out.append(z.real if z.imag == 0 else tok)
    return out


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="experiment JSON; explicit flags override its values")
    p.add_argument("--field", help="preset name or path to a preset JSON")
    p.add_argument("--m", type=int)
    p.add_argument("--n", type=int)
    p.add_argument("--weights", type=_weights_arg, help="'equal' or a flat list: a rows then b rows, per place")
    p.add_argument("--seed", type=int)
    p.add_argument("--workers", type=int)
    p.add_argument("--out", help="output directory (or file); stdout when absent")
    p.add_argument("--format", choices=["csv", "json"])


def _add_region(p: argparse.ArgumentParser, grid: bool = False) -> None:
    p.add_argument("--theta", type=_theta_arg, help="per-place values, row-major over (i, j, place)")
    p.add_argument("--theta-seed", dest="theta_seed", type=int)
    p.add_argument("--c", type=float)
    p.add_argument("--T", type=float)
    if grid:
        p.add_argument("--T-grid", dest="T_grid", type=_float_list)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="nfapprox", description="Weighted Diophantine approximation over number fields")
    parser.add_argument("--version", action="version", version=f"nfapprox {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("count", help="count approximates in E_{T,c}")
    _add_common(p)
    _add_region(p)

    p = sub.add_parser("volume", help="analytic and Monte Carlo volume of E_{T,c}")
    _add_common(p)
    _add_region(p)
    p.add_argument("--caps", nargs=2, metavar=("A", "B"))
    p.add_argument("--samples", type=int)

    p = sub.add_parser("spiral", help="directional counts against vol(A) vol(B)")
    _add_common(p)
    _add_region(p)
    p.add_argument("--caps", nargs=2, metavar=("A", "B"))

    p = sub.add_parser("scaling", help="error series count - volume along a T grid")
    _add_common(p)
    _add_region(p, grid=True)

    p = sub.add_parser("ideals", help="principal ideal counts")
    _add_common(p)
    p.add_argument("--s", type=float)
    p.add_argument("--s-grid", dest="s_grid", type=_float_list)

    p = sub.add_parser("verify", help="run a verification suite")
    _add_common(p)
    p.add_argument("--suite", help="verification suite JSON (default: built-in quick suite)")

    p = sub.add_parser("presets", help="list field presets")
    p.add_argument("--out")
    p.add_argument("--format", choices=["csv", "json"])

    p = sub.add_parser("run", help="run an experiment file")
    p.add_argument("config")
    p.add_argument("--out")
    p.add_argument("--format", choices=["csv", "json"])
    return parser


# ---------------------------------------------------------------------------
# configuration


def read_json(path: str) -> dict:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ReportIOError(f"cannot read {path}: {exc.strerror or exc}", path=path) from exc
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise ValidationError(f"{path}: line {exc.lineno} column {exc.colno}: {exc.msg}") from exc


def resolve_config(command: str, args: argparse.Namespace) -> dict:
    """Config file values, overridden by explicit flags, validated, defaults filled."""
    cfg: dict = {}
    if getattr(args, "config", None):
        cfg = read_json(args.config)
        if not isinstance(cfg, dict):
            raise ValidationError(f"{args.config}: experiment must be a JSON object")
        if cfg.get("command", command) != command:
            raise ValidationError(f"{args.config}: command is {cfg['command']!r}, invoked as {command!r}")
    for key, val in vars(args).items():
        if key in ("config", "command", "suite") or val is None:
            continue
        cfg[key] = val
    cfg["command"] = command
    validate(cfg, "experiment")
    for key, val in DEFAULTS.items():
        cfg.setdefault(key, val)
    if command == "verify" and getattr(args, "suite", None):
        suite = read_json(args.suite)
        validate(suite, "verify")
        cfg["checks"] = suite["checks"]
    return cfg


def _field_and_weights(cfg):
    from .presets import load_preset
    from .regions import WeightScheme

    K = load_preset(cfg["field"])
    if cfg["weights"] == "equal":
        W = WeightScheme.equal(K.d_nu, cfg["m"], cfg["n"])
    else:
        W = WeightScheme.from_flat(K.d_nu, cfg["m"], cfg["n"], cfg["weights"])
    return K, W


def _theta(cfg, K):
    from .lattice import LatticeSpec, random_theta

    m, n = cfg["m"], cfg["n"]
    if "theta" in cfg:
        raw = cfg["theta"] if isinstance(cfg["theta"], list) else [cfg["theta"]]
        vals = np.array([complex(str(v).replace(" ", "")) for v in raw])
        size = m * n * K.n_places
        if vals.size == 1:
            vals = np.full(size, vals[0])
        if vals.size != size:
            raise ValidationError(f"theta needs {size} values (m*n*#places), got {vals.size}")
        return LatticeSpec(K, m, n, vals.reshape(m, n, K.n_places))
    seed = cfg.get("theta_seed", cfg["seed"])
    cfg.setdefault("theta_seed", seed)
    return LatticeSpec(K, m, n, random_theta(K, m, n, np.random.default_rng(seed)))


def _caps(cfg, K, W, default=None):
    from .spiralling import CapSpec

    caps = cfg.get("caps", default)
    if caps is None:
        return None
    return (CapSpec.parse(caps[0], W.m * K.degree), CapSpec.parse(caps[1], W.n * K.degree))


# ---------------------------------------------------------------------------
# commands


def cmd_count(cfg) -> Report:
    from .diophantine import analytic_volume_E, count_approximates

    K, W = _field_and_weights(cfg)
    spec = _theta(cfg, K)
    k = count_approximates(spec, W, cfg["c"], cfg["T"], workers=cfg["workers"])
    vol = analytic_volume_E(K, W, cfg["c"], cfg["T"])
    return Report("count", ["T", "c", "count", "volume"], [[cfg["T"], cfg["c"], k, vol]], cfg, cfg["seed"])


def cmd_volume(cfg) -> Report:
    from .diophantine import analytic_volume_E, mc_volume
    from .regions import RegionSpec
    from .spiralling import analytic_volume_AB

    K, W = _field_and_weights(cfg)
    caps = _caps(cfg, K, W)
    if caps is None:
        region = RegionSpec("E", cfg["c"], cfg["T"])
        exact = analytic_volume_E(K, W, cfg["c"], cfg["T"])
    else:
        region = RegionSpec("E_AB", cfg["c"], cfg["T"], caps)
        exact = analytic_volume_AB(K, W, cfg["c"], cfg["T"], *caps)
    est, se = mc_volume(K, W, region, cfg["samples"], cfg["seed"])
    z = (est - exact) / se if se > 0 else 0.0
    return Report("volume", ["T", "c", "analytic", "mc_estimate", "mc_stderr", "samples", "z"],
                  [[cfg["T"], cfg["c"], exact, est, se, cfg["samples"], z]], cfg, cfg["seed"])


def cmd_spiral(cfg) -> Report:
    from .diophantine import count_approximates
    from .spiralling import cap_volume_exact, count_directional

    K, W = _field_and_weights(cfg)
    spec = _theta(cfg, K)
    A, B = _caps(cfg, K, W, default=["hemisphere:+1", "hemisphere:+1"])
    total = count_approximates(spec, W, cfg["c"], cfg["T"], workers=cfg["workers"])
    hits = count_directional(spec, W, cfg["c"], cfg["T"], A, B, workers=cfg["workers"])
    expected = cap_volume_exact(A, W.m * K.degree) * cap_volume_exact(B, W.n * K.degree)
    frac = hits / total if total else math.nan
    se = math.sqrt(expected * (1 - expected) / total) if total else math.nan
    return Report("spiral", ["T", "c", "total", "directional", "fraction", "expected", "binomial_se"],
                  [[cfg["T"], cfg["c"], total, hits, frac, expected, se]], cfg, cfg["seed"])


def cmd_scaling(cfg) -> Report:
    from .diophantine import error_series, fit_scaling_exponent
    from .moments import target_rate

    K, W = _field_and_weights(cfg)
    grid = cfg.get("T_grid", SCALING_GRID)
    if not grid:
        raise ValidationError("T grid is empty")
    cfg["T_grid"] = grid
    spec = _theta(cfg, K)
    series = error_series(spec, W, cfg["c"], grid, workers=cfg["workers"])
    eps = 0.01
    rows = [[pt.T, pt.count, pt.volume, pt.error, target_rate(pt.T, eps, strict=False) if pt.T > math.e else None]
            for pt in series]
    meta = {"epsilon": eps}
    try:
        fit = fit_scaling_exponent(series, epsilon=eps, rate_T_min=math.e)
        meta.update(slope=fit.slope, r2=fit.r2, max_rate_ratio=fit.max_rate_ratio)
    except ValidationError as exc:
        meta["fit"] = str(exc)
    return Report("scaling", ["T", "count", "volume", "error", "target_rate"], rows, cfg, cfg["seed"], meta)


def cmd_ideals(cfg) -> Report:
    from .field import count_principal_ideals
    from .presets import load_preset

    K = load_preset(cfg["field"])
    grid = cfg.get("s_grid") or ([cfg["s"]] if "s" in cfg else [1000.0])
    rows = []
    for s in grid:
        k = count_principal_ideals(K, s)
        rows.append([s, k, k / s])
    return Report("ideals", ["s", "count", "density"], rows, cfg, cfg["seed"])


def cmd_verify(cfg) -> Report:
    from .checks import COLUMNS, DEFAULT_SUITE, run_suite

    cfg.setdefault("checks", DEFAULT_SUITE)
    rows = run_suite(cfg["checks"], cfg["seed"])
    return Report("verify", COLUMNS, rows, cfg, cfg["seed"])


def cmd_presets(cfg) -> Report:
    from .presets import list_presets

    rows = [[p.name, p.degree, p.signature[0], p.signature[1], p.unit_rank] for p in list_presets()]
    return Report("presets", ["name", "degree", "r1", "r2", "unit_rank"], rows, cfg)


RUNNERS = {
    "count": cmd_count,
    "volume": cmd_volume,
    "spiral": cmd_spiral,
    "scaling": cmd_scaling,
    "ideals": cmd_ideals,
    "verify": cmd_verify,
}


def run_experiment(cfg: dict) -> Report:
    """Run a resolved, validated configuration."""
    report = RUNNERS[cfg["command"]](cfg)
    report.config = semantic_config(cfg)
    return report


def _execute(argv: Optional[Sequence[str]]) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "presets":
        emit_report(cmd_presets({"command": "presets"}), args.out, args.format or "csv")
        return EXIT_OK
    if args.command == "run":
        doc = read_json(args.config)
        if not isinstance(doc, dict) or "command" not in doc:
            raise ValidationError(f"{args.config}: experiment needs a 'command' key")
        command = doc["command"]
        ns = argparse.Namespace(config=args.config, out=args.out, format=args.format)
    else:
        command, ns = args.command, args
    cfg = resolve_config(command, ns)
    report = run_experiment(cfg)
    emit_report(report, cfg.get("out"), cfg["format"])
    return EXIT_OK


def main(argv: Optional[Sequence[str]] = None) -> int:
    try:
        return _execute(argv)
    except ValidationError as exc:
        print(f"nfapprox: invalid input: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except ResourceCapError as exc:
        print(f"nfapprox: resource cap exceeded: {exc}", file=sys.stderr)
        return EXIT_RESOURCE
    except (ReportIOError, OSError) as exc:
        print(f"nfapprox: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
