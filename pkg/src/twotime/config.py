"""JSON model configs: schema, parsing and bit-exact serialization."""

from __future__ import annotations

import json
from pathlib import Path

import jsonschema
import numpy as np

from .errors import ValidationError
from .linalg import HilbertSpace, operator_from_json, operator_to_json
from .model import (CollapseFamily, OutcomeGrid, TwoTimeModel, build_grw_family,
                    build_projective_family)


class ConfigError(ValidationError):
    """The config text could not be parsed or does not match the schema."""


_NUM_MATRIX = {"type": "array", "items": {"type": "array", "items": {"type": "number"}}}
_OPERATOR = {
    "type": "object",
    "properties": {"dim": {"type": "integer", "minimum": 1},
                   "re": _NUM_MATRIX, "im": _NUM_MATRIX},
    "required": ["dim", "re", "im"],
    "additionalProperties": False,
}
_NUM_LIST = {"type": "array", "items": {"type": "number"}, "minItems": 1}

CONFIG_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "properties": {
        "dim": {"type": "integer", "minimum": 1},
        "basis_labels": {"type": "array", "items": {"type": "string"}},
        "H": {"$ref": "#/$defs/operator"},
        "family": {
            "oneOf": [
                {"type": "object",
                 "properties": {"kind": {"const": "projective"},
                                "projectors": {"type": "array", "minItems": 1,
                                               "items": {"$ref": "#/$defs/operator"}}},
                 "required": ["kind", "projectors"], "additionalProperties": False},
                {"type": "object",
                 "properties": {"kind": {"const": "grw"}, "lattice": _NUM_LIST,
                                "positions": _NUM_LIST,
                                "alpha": {"type": "number", "exclusiveMinimum": 0}},
                 "required": ["kind", "lattice", "positions", "alpha"],
                 "additionalProperties": False},
                {"type": "object",
                 "properties": {"kind": {"const": "explicit"}, "points": _NUM_LIST,
                                "weights": _NUM_LIST,
                                "operators": {"type": "array", "minItems": 1,
                                              "items": {"$ref": "#/$defs/operator"}}},
                 "required": ["kind", "points", "weights", "operators"],
                 "additionalProperties": False},
            ]
        },
        "schedule": {"type": "array", "items": {"type": "number"}, "minItems": 2},
        "rho_I": {"$ref": "#/$defs/operator"},
        "rho_F": {"$ref": "#/$defs/operator"},
    },
    "required": ["dim", "basis_labels", "H", "family", "schedule", "rho_I", "rho_F"],
    "additionalProperties": False,
    "$defs": {"operator": _OPERATOR},
}


def parse_config_text(text: str) -> dict:
    """Parse and schema-validate config text.

    Raises ``ConfigError`` carrying the line/column of a JSON syntax error,
    or the path of the first schema violation.
    """
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"invalid JSON at line {exc.lineno}, column {exc.colno}: {exc.msg}") from exc
    validate_config(obj)
    return obj


def validate_config(obj) -> None:
    try:
        jsonschema.validate(obj, CONFIG_SCHEMA)
    except jsonschema.ValidationError as exc:
        where = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        raise ConfigError(f"config does not match schema at {where}: {exc.message}") from exc


def family_from_config(recipe: dict, space: HilbertSpace, *, check: bool = True) -> CollapseFamily:
    kind = recipe["kind"]
    if kind == "projective":
        return build_projective_family([operator_from_json(p) for p in recipe["projectors"]])
    if kind == "grw":
        x = np.diag(np.asarray(recipe["positions"], dtype=float))
        return build_grw_family(recipe["lattice"], x, recipe["alpha"])
    grid = OutcomeGrid(recipe["points"], recipe["weights"])
    ops = [operator_from_json(op) for op in recipe["operators"]]
    out = {"kind": "explicit", "points": np.asarray(recipe["points"], dtype=float),
           "weights": np.asarray(recipe["weights"], dtype=float), "operators": ops}
    return CollapseFamily(grid, ops, space, check=check, recipe=out)


def model_from_config(obj: dict, *, check: bool = True) -> TwoTimeModel:
    """Build a model from an already parsed config dict."""
    validate_config(obj)
    space = HilbertSpace(obj["dim"], tuple(obj["basis_labels"]))
    family = family_from_config(obj["family"], space, check=check)
    return TwoTimeModel(operator_from_json(obj["H"]), family, obj["schedule"],
                        operator_from_json(obj["rho_I"]), operator_from_json(obj["rho_F"]),
                        space)


def _family_to_config(family: CollapseFamily) -> dict:
    recipe = family.recipe
    if recipe is None:
        return {"kind": "explicit",
                "points": [float(p) for p in family.grid.points],
                "weights": [float(w) for w in family.grid.weights],
                "operators": [operator_to_json(op) for op in family.operators]}
    if recipe["kind"] == "projective":
        return {"kind": "projective",
                "projectors": [operator_to_json(p) for p in recipe["projectors"]]}
    if recipe["kind"] == "grw":
        return {"kind": "grw", "lattice": [float(z) for z in recipe["lattice"]],
                "positions": [float(x) for x in recipe["positions"]],
                "alpha": recipe["alpha"]}
    return {"kind": "explicit",
            "points": [float(p) for p in recipe["points"]],
            "weights": [float(w) for w in recipe["weights"]],
            "operators": [operator_to_json(op) for op in recipe["operators"]]}


def model_to_config(model: TwoTimeModel) -> dict:
    return {
        "dim": model.dim,
        "basis_labels": list(model.space.basis_labels),
        "H": operator_to_json(model.H),
        "family": _family_to_config(model.family),
        "schedule": list(model.schedule.times),
        "rho_I": operator_to_json(model.rho_I),
        "rho_F": operator_to_json(model.rho_F),
    }


def load_model(path, *, check: bool = True) -> TwoTimeModel:
    return model_from_config(parse_config_text(Path(path).read_text()), check=check)


def save_model(model: TwoTimeModel, path) -> None:
    Path(path).write_text(json.dumps(model_to_config(model), indent=1) + "\n")
