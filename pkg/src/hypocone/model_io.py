"""Loading and validating model and operator files."""

from __future__ import annotations

import json
from importlib import resources
from pathlib import Path

import jsonschema

from .frame_model import Frame, make_frame
from .poly import Poly, PolyVF
from .symbols import NCPoly

__all__ = ["ModelError", "MODEL_SCHEMA", "OPERATOR_SCHEMA", "load_model", "load_operator",
           "resolve_path", "builtin_names"]

_SCALAR = {"type": ["string", "integer"]}  # literal checked by the exact parser
_TERM = {
    "type": "object",
    "required": ["coeff"],
    "properties": {
        "coeff": _SCALAR,
        "exponents": {"type": "array", "items": {"type": "integer", "minimum": 0}},
        "harmonics": {"type": "array", "items": {"type": "integer"}},
        "phase": {"enum": ["sin", "cos"]},
    },
    "additionalProperties": False,
}
_POLY = {"anyOf": [{"type": "array", "items": _TERM}, _TERM, _SCALAR]}
OPERATOR_SCHEMA = {
    "type": "object",
    "required": ["terms"],
    "properties": {
        "name": {"type": "string"},
        "terms": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["coeff", "word"],
                "properties": {
                    "coeff": _POLY,
                    "word": {"type": "array", "items": {"type": "integer", "minimum": 1}},
                },
                "additionalProperties": False,
            },
        },
    },
    "additionalProperties": False,
}
MODEL_SCHEMA = {
    "type": "object",
    "required": ["dimension", "step", "fields"],
    "properties": {
        "name": {"type": "string"},
        "description": {"type": "string"},
        "dimension": {"type": "integer", "minimum": 1},
        "periodic": {"type": "array", "items": {"type": "boolean"}},
        "step": {"type": "integer", "minimum": 1},
        "fields": {"type": "array", "minItems": 1, "items": {"type": "array", "items": _POLY}},
        "operators": {"type": "object", "additionalProperties": OPERATOR_SCHEMA},
        "grids": {
            "type": "object",
            "additionalProperties": {"type": "array", "items": {"type": "array", "items": _SCALAR}},
        },
    },
    "additionalProperties": False,
}


class ModelError(ValueError):
    """Malformed model or operator file; ``path`` locates the offending entry."""

    def __init__(self, message: str, path: str = ""):
        super().__init__(f"{path}: {message}" if path else message)
        self.path = path


def builtin_names() -> list[str]:
    return sorted(p.name[:-5] for p in resources.files("hypocone.data").iterdir() if p.name.endswith(".json"))


def resolve_path(spec: str) -> Path | resources.abc.Traversable:
    """A filesystem path, or the name of a shipped data file (with or without .json)."""
    p = Path(spec)
    if p.exists():
        return p
    name = spec if spec.endswith(".json") else spec + ".json"
    q = resources.files("hypocone.data") / name
    if q.is_file():
        return q
    raise ModelError(f"no such model/operator file or shipped example: {spec}")


def _read(spec: str, schema: dict) -> dict:
    src = resolve_path(spec)
    try:
        data = json.loads(src.read_text())
    except json.JSONDecodeError as exc:
        raise ModelError(f"invalid JSON ({exc.msg} at line {exc.lineno})", str(spec)) from exc
    try:
        jsonschema.validate(data, schema)
    except jsonschema.ValidationError as exc:
        where = "/" + "/".join(str(p) for p in exc.absolute_path)
        raise ModelError(exc.message, f"{spec}#{where}") from exc
    return data


def load_model(spec: str) -> tuple[Frame, dict]:
    """Frame plus the raw document (for named operators and grids)."""
    data = _read(spec, MODEL_SCHEMA)
    m = data["dimension"]
    periodic = data.get("periodic", [False] * m)
    try:
        fields = []
        for i, f in enumerate(data["fields"]):
            if len(f) != m:
                raise ModelError(f"field has {len(f)} components, dimension is {m}", f"{spec}#/fields/{i}")
            fields.append(PolyVF(Poly.from_json(m, c) for c in f))
        F = make_frame(fields, data["step"], periodic)
    except ModelError:
        raise
    except (ValueError, TypeError) as exc:
        raise ModelError(str(exc), str(spec)) from exc
    return F, data


def load_operator(spec: str, F: Frame, model_doc: dict | None = None) -> NCPoly:
    """An operator file, or the name of an operator stored in the model document."""
    if model_doc and spec in model_doc.get("operators", {}):
        data = model_doc["operators"][spec]
    else:
        data = _read(spec, OPERATOR_SCHEMA)
    try:
        return NCPoly.from_json(F.m, F.n, data)
    except (ValueError, TypeError) as exc:
        raise ModelError(str(exc), str(spec)) from exc
