"""Loading and applying the packaged JSON schemas.

Cross-file ``$ref`` entries (the output document embeds the query schema) are
inlined at load time so each schema validates standalone with any jsonschema
version.
"""

from __future__ import annotations

import functools
import json
from importlib import resources

import jsonschema

from .models import SchemaError

SCHEMA_NAMES = ("query", "detections", "groundtruth", "exsclaim")


def _inline_refs(node, loader):
    if isinstance(node, dict):
        ref = node.get("$ref")
        if isinstance(ref, str) and ref.endswith(".schema.json"):
            target = dict(loader(ref.removesuffix(".schema.json")))
            target.pop("$schema", None)
            target.pop("$id", None)
            return _inline_refs(target, loader)
        return {k: _inline_refs(v, loader) for k, v in node.items()}
    if isinstance(node, list):
        return [_inline_refs(v, loader) for v in node]
    return node


def _read_schema(name: str) -> dict:
    if name not in SCHEMA_NAMES:
        raise ValueError(f"unknown schema {name!r}; expected one of {SCHEMA_NAMES}")
    path = resources.files("figmine") / "schemas" / f"{name}.schema.json"
    return json.loads(path.read_text(encoding="utf-8"))


@functools.lru_cache(maxsize=None)
def load_schema(name: str) -> dict:
    """Return the named schema with all cross-file references inlined."""
    return _inline_refs(_read_schema(name), _read_schema)


def validate_payload(payload, name: str) -> None:
    """Validate ``payload`` against the named schema; raise SchemaError on failure."""
    validator = jsonschema.Draft7Validator(load_schema(name))
    errors = sorted(validator.iter_errors(payload), key=lambda e: list(e.absolute_path))
    if errors:
        err = jsonschema.exceptions.best_match(errors)
        where = "/".join(str(p) for p in err.absolute_path) or "<root>"
        raise SchemaError(where, err.message)
