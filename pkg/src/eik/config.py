"""Experiment configs: JSON parsing and per-kind schema validation."""

import json
from dataclasses import dataclass, field

import jsonschema

from .errors import ConfigInvalid

KINDS = (
    "classical-maxent",
    "qmaxent",
    "qbr",
    "spin-demo",
    "ed-sim",
    "weak-demo",
    "thermal",
    "noncommute-demo",
)

_num = {"type": "number"}
_pos = {"type": "number", "exclusiveMinimum": 0}
_vec = {"type": "array", "items": _num, "minItems": 1}
_complex = {"oneOf": [_num, {"type": "array", "items": _num, "minItems": 2, "maxItems": 2}]}
_cvec = {"type": "array", "items": _complex, "minItems": 1}
_matrix = {
    "type": "object",
    "required": ["dim", "re"],
    "properties": {
        "dim": {"type": "integer", "minimum": 1},
        "re": {"type": "array", "items": _vec},
        "im": {"type": "array", "items": _vec},
    },
}
_qconstraint = {
    "type": "object",
    "required": ["observable", "target"],
    "properties": {"observable": _matrix, "target": _num},
}
_qconstraints = {"type": "array", "items": _qconstraint}

SCHEMAS = {
    "classical-maxent": {
        "type": "object",
        "required": ["prior", "constraints"],
        "properties": {
            "prior": _vec,
            "constraints": {
                "type": "array",
                "items": {
                    "type": "object",
                    "required": ["observable", "target"],
                    "properties": {"observable": _vec, "target": _num},
                },
            },
        },
    },
    "qmaxent": {
        "type": "object",
        "required": ["prior", "constraints"],
        "properties": {"prior": _matrix, "constraints": _qconstraints},
    },
    "qbr": {
        "type": "object",
        "required": ["prior", "kraus"],
        "properties": {
            "prior": _matrix,
            "kraus": {"type": "array", "items": _matrix, "minItems": 1},
            "detected": {"type": "integer", "minimum": 0},
            "data": _vec,
        },
        "oneOf": [{"required": ["detected"]}, {"required": ["data"]}],
    },
    "spin-demo": {
        "type": "object",
        "required": ["a", "b", "c", "target"],
        "properties": {
            "a": _pos,
            "b": _pos,
            "c": {"type": "array", "items": _num, "minItems": 4, "maxItems": 4},
            "target": _num,
        },
    },
    "ed-sim": {
        "type": "object",
        "required": ["grid", "params", "initial_state", "n_steps"],
        "properties": {
            "grid": {
                "type": "object",
                "required": ["n_points", "dx"],
                "properties": {
                    "n_points": {"type": "integer", "minimum": 8},
                    "dx": _pos,
                    "origin": _num,
                },
            },
            "params": {
                "type": "object",
                "required": ["dt"],
                "properties": {
                    "dt": _pos,
                    "mass": _pos,
                    "hbar": _pos,
                    "harmonic_omega": {"type": "number", "minimum": 0},
                    "vector_potential": _num,
                },
            },
            "initial_state": {
                "type": "object",
                "required": ["x0", "sigma"],
                "properties": {"x0": _num, "sigma": _pos, "p0": _num},
            },
            "n_steps": {"type": "integer", "minimum": 1},
            "outputs": {
                "type": "object",
                "properties": {"every": {"type": "integer", "minimum": 1}},
            },
        },
    },
    "weak-demo": {
        "type": "object",
        "required": ["amplitudes", "eigenvalues", "delta", "postselection", "n_samples"],
        "properties": {
            "amplitudes": _cvec,
            "eigenvalues": _vec,
            "delta": _pos,
            "postselection": _cvec,
            "n_samples": {"type": "integer", "minimum": 2},
            "seed": {"type": "integer", "minimum": 0},
            "c": {"type": "number", "not": {"const": 0}},
        },
    },
    "thermal": {
        "type": "object",
        "required": ["prior", "kraus", "energies", "target_energy"],
        "properties": {
            "prior": _matrix,
            "kraus": {"type": "array", "items": _matrix, "minItems": 1},
            "energies": _vec,
            "target_energy": _num,
        },
    },
    "noncommute-demo": {
        "type": "object",
        "required": ["prior", "cs1", "cs2"],
        "properties": {"prior": _matrix, "cs1": _qconstraints, "cs2": _qconstraints},
    },
}


@dataclass
class ExperimentConfig:
    kind: str
    inputs: dict
    output_path: str = None
    seed: int = None
    tol: float = None
    extra: dict = field(default_factory=dict)


def _offending_field(err):
    if err.validator == "required":
        missing = [k for k in err.validator_value if k not in err.instance]
        if missing:
            return missing[0]
    path = [p for p in err.absolute_path if isinstance(p, str)]
    if path:
        return path[-1]
    return "<root>"


def validate_config(raw, kind=None, output_path=None, seed=None, tol=None):
    """Parse JSON text and check it against the schema for `kind`.

    The kind may come from the argument or from a "kind" key in the file;
    if both are present they must agree.
    """
    try:
        data = json.loads(raw)
    except json.JSONDecodeError as exc:
        raise ConfigInvalid(f"malformed JSON: {exc}", field="<root>") from exc
    if not isinstance(data, dict):
        raise ConfigInvalid("config must be a JSON object", field="<root>")
    file_kind = data.pop("kind", None)
    if kind is None:
        kind = file_kind
    elif file_kind is not None and file_kind != kind:
        raise ConfigInvalid(f"config kind {file_kind!r} does not match {kind!r}", field="kind")
    if kind not in SCHEMAS:
        raise ConfigInvalid(f"unknown experiment kind {kind!r}", field="kind")
    validator = jsonschema.Draft202012Validator(SCHEMAS[kind])
    errors = sorted(validator.iter_errors(data), key=lambda e: (len(e.absolute_path), str(e.message)))
    if errors:
        err = errors[0]
        name = _offending_field(err)
        raise ConfigInvalid(f"invalid field {name!r}: {err.message}", field=name)
    if seed is None:
        seed = data.get("seed")
    return ExperimentConfig(kind, data, output_path, seed, tol)
