"""JSON schema documents shipped with the package and their validators."""
from __future__ import annotations

import functools
import json
from importlib import resources

import jsonschema
from referencing import Registry, Resource

from .errors import ValidationError

SCHEMAS = ("preset", "experiment", "report", "verify")


@functools.lru_cache(maxsize=None)
def load_schema(name: str) -> dict:
    if name not in SCHEMAS:
        raise KeyError(name)
    text = resources.files("nfapprox").joinpath("schemas", f"{name}.schema.json").read_text()
    return json.loads(text)


@functools.lru_cache(maxsize=None)
def _validator(name: str):
    registry = Registry().with_resources(
        (f"{other}.schema.json", Resource.from_contents(load_schema(other))) for other in SCHEMAS)
    return jsonschema.Draft202012Validator(load_schema(name), registry=registry)


def _where(err) -> str:
    path = "/".join(str(p) for p in err.absolute_path)
    return path or "<root>"


def validate(doc, name: str) -> None:
    """Raise ValidationError listing every violation with its JSON path."""
    errors = sorted(_validator(name).iter_errors(doc), key=lambda e: list(map(str, e.absolute_path)))
    if errors:
        lines = [f"{_where(e)}: {e.message}" for e in errors]
        raise ValidationError(f"{name} document invalid:\n  " + "\n  ".join(lines))


def validate_preset(doc) -> None:
    validate(doc, "preset")
