"""JSON manifold-spec files: schema, loading and export.

A spec file is an object with keys ``dim_n``, ``coords``, ``theta``,
``chart_box``, ``embedding``, ``ambient_J`` ("standard" or a 2N x 2N matrix),
``reeb_extension`` (expressions over ``u1..u2N``), and optionally ``reeb`` and
``name``.  Every error names the offending location as a JSON pointer.
"""
from __future__ import annotations

import json
from pathlib import Path

import jsonschema
import numpy as np

from .contact import ManifoldSpec, ambient_names, standard_j, validate_spec
from .dsl import ExprSyntaxError, UnboundIdentifierError, parse

__all__ = ["SPEC_SCHEMA", "SpecError", "load_manifold_spec", "spec_from_dict", "spec_to_dict", "export_spec"]

_EXPRS = {"type": "array", "items": {"type": "string"}, "minItems": 1}

SPEC_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "required": ["dim_n", "coords", "theta", "chart_box", "embedding", "ambient_J", "reeb_extension"],
    "additionalProperties": False,
    "properties": {
        "name": {"type": "string"},
        "dim_n": {"type": "integer", "minimum": 1},
        "coords": {
            "type": "array",
            "items": {"type": "string", "pattern": "^[A-Za-z_][A-Za-z0-9_]*$"},
            "minItems": 3,
            "uniqueItems": True,
        },
        "theta": _EXPRS,
        "chart_box": {
            "type": "array",
            "items": {"type": "array", "items": {"type": "number"}, "minItems": 2, "maxItems": 2},
            "minItems": 1,
        },
        "embedding": _EXPRS,
        "ambient_J": {
            "oneOf": [
                {"const": "standard"},
                {"type": "array", "items": {"type": "array", "items": {"type": "number"}}},
            ]
        },
        "reeb_extension": _EXPRS,
        "reeb": _EXPRS,
    },
}


class SpecError(ValueError):
    """A spec file is malformed or fails validation; ``pointer`` locates the problem."""

    def __init__(self, pointer: str, message: str):
        super().__init__(f"{pointer or '/'}: {message}")
        self.pointer = pointer
        self.message = message


def _pointer(parts) -> str:
    return "".join(f"/{p}" for p in parts)


def _schema_check(doc) -> None:
    validator = jsonschema.Draft202012Validator(SPEC_SCHEMA)
    errors = sorted(validator.iter_errors(doc), key=lambda e: (list(map(str, e.absolute_path)), e.message))
    if not errors:
        return
    err = errors[0]
    path = list(err.absolute_path)
    if err.validator == "required":
        missing = [k for k in err.validator_value if k not in err.instance]
        raise SpecError(_pointer(path + missing[:1]), f"missing required key {missing[0]!r}")
    if err.validator == "additionalProperties":
        extra = sorted(set(err.instance) - set(SPEC_SCHEMA["properties"]))
        raise SpecError(_pointer(path + extra[:1]), "unknown key")
    raise SpecError(_pointer(path), err.message)


def _parse_list(doc, key, names):
    out = []
    for i, text in enumerate(doc[key]):
        try:
            out.append(parse(text, names))
        except (ExprSyntaxError, UnboundIdentifierError) as exc:
            raise SpecError(f"/{key}/{i}", f"{exc} (offset {exc.offset})") from exc
    return tuple(out)


def spec_from_dict(doc, name: str = "spec") -> ManifoldSpec:
    """Schema-check, size-check and compile a spec document (no geometric validation)."""
    _schema_check(doc)
    n = doc["dim_n"]
    m = 2 * n + 1
    coords = tuple(doc["coords"])
    for key, want in (("coords", m), ("theta", m), ("chart_box", m)):
        if len(doc[key]) != want:
            raise SpecError(f"/{key}", f"expected {want} entries for dim_n={n}, got {len(doc[key])}")
    for i, (lo, hi) in enumerate(doc["chart_box"]):
        if not lo < hi:
            raise SpecError(f"/chart_box/{i}", "lower bound must be below upper bound")
    d = len(doc["embedding"])
    if d % 2 or d < m + 1:
        raise SpecError("/embedding", f"need an even number (>= {m + 1}) of components, got {d}")
    if len(doc["reeb_extension"]) != d:
        raise SpecError("/reeb_extension", f"expected {d} entries, got {len(doc['reeb_extension'])}")
    if "reeb" in doc and len(doc["reeb"]) != m:
        raise SpecError("/reeb", f"expected {m} entries, got {len(doc['reeb'])}")
    if doc["ambient_J"] == "standard":
        J = standard_j(d // 2)
    else:
        J = np.asarray(doc["ambient_J"], dtype=float)
        if J.shape != (d, d):
            raise SpecError("/ambient_J", f"expected a {d}x{d} matrix")
    return ManifoldSpec(
        name=doc.get("name", name),
        n=n,
        coords=coords,
        theta=_parse_list(doc, "theta", coords),
        chart_box=np.asarray(doc["chart_box"], dtype=float),
        embedding=_parse_list(doc, "embedding", coords),
        ambient_J=J,
        reeb_extension=_parse_list(doc, "reeb_extension", ambient_names(d // 2)),
        reeb=_parse_list(doc, "reeb", coords) if "reeb" in doc else None,
    )


def load_manifold_spec(path, validate: bool = True, samples: int = 100, seed: int = 0) -> ManifoldSpec:
    """Load a spec file; with ``validate`` also run ``validate_spec`` and raise on failure."""
    path = Path(path)
    try:
        doc = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise SpecError("", f"invalid JSON: {exc}") from exc
    M = spec_from_dict(doc, name=path.stem)
    if validate:
        rep = validate_spec(M, samples=samples, seed=seed)
        if not rep.passed:
            raise SpecError("", f"validation failed: {rep.describe()}")
    return M


def spec_to_dict(M: ManifoldSpec) -> dict:
    J = M.ambient_J
    doc = {
        "name": M.name,
        "dim_n": M.n,
        "coords": list(M.coords),
        "theta": [e.source for e in M.theta],
        "chart_box": M.chart_box.tolist(),
        "embedding": [e.source for e in M.embedding],
        "ambient_J": "standard" if np.array_equal(J, standard_j(len(J) // 2)) else J.tolist(),
        "reeb_extension": [e.source for e in M.reeb_extension],
    }
    if M.reeb is not None:
        doc["reeb"] = [e.source for e in M.reeb]
    return doc


def export_spec(M: ManifoldSpec) -> str:
    return json.dumps(spec_to_dict(M), indent=2) + "\n"
