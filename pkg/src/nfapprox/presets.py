"""Field preset catalog.

Presets are JSON files. Lookup order for a name: a literal path, then each
directory in ``NFAPPROX_PRESET_PATH`` (os.pathsep separated), then the
presets bundled with the package.
"""
from __future__ import annotations

import functools
import json
import os
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

from .errors import ValidationError
from .field import FieldHandle, build_field

ENV_VAR = "NFAPPROX_PRESET_PATH"


def _search_dirs() -> list[Path]:
    dirs = [Path(p) for p in os.environ.get(ENV_VAR, "").split(os.pathsep) if p]
    dirs.append(Path(str(resources.files("nfapprox").joinpath("presets"))))
    return dirs


def resolve_preset(name: str) -> Path:
    path = Path(name)
    if path.suffix == ".json" and path.is_file():
        return path
    for d in _search_dirs():
        cand = d / f"{name}.json"
        if cand.is_file():
            return cand
    raise ValidationError(f"unknown field preset {name!r}; searched {[str(d) for d in _search_dirs()]}")


def read_preset(name: str) -> dict:
    path = resolve_preset(name)
    try:
        doc = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ValidationError(f"{path}: line {exc.lineno} column {exc.colno}: {exc.msg}") from exc
    doc.setdefault("name", path.stem)
    return doc


@functools.lru_cache(maxsize=32)
def _cached(path: str, mtime: float) -> FieldHandle:
    return build_field(read_preset(path))


def load_preset(name: str) -> FieldHandle:
    """Build (and cache) the field for a preset name or JSON path."""
    path = resolve_preset(name)
    return _cached(str(path), path.stat().st_mtime)


@dataclass(frozen=True)
class PresetInfo:
    name: str
    degree: int
    signature: tuple[int, int]
    unit_rank: int
    path: str


def list_presets() -> list[PresetInfo]:
    seen: dict[str, PresetInfo] = {}
    for d in _search_dirs():
        if not d.is_dir():
            continue
        for path in sorted(d.glob("*.json")):
            if path.stem in seen:
                continue
            k = load_preset(str(path))
            seen[path.stem] = PresetInfo(path.stem, k.degree, (k.r1, k.r2), k.unit_rank, str(path))
    return sorted(seen.values(), key=lambda p: (p.degree, p.name))
