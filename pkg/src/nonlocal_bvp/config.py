"""JSON problem configs: validation, loading and dumping."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Optional

import jsonschema

from .coincidence import Problem
from .degree import BoundaryMap
from .measure import BVFunction
from .ode import VectorField
from .problems import SecondOrderSpec
from .solver import SolverConfig

__all__ = ["ConfigError", "ProblemConfig", "SecondOrderConfig", "load_json", "parse_config", "dumps"]

_EXPRS = {"type": "array", "items": {"type": "string"}, "minItems": 1}
_COMPONENT = {
    "type": "object",
    "properties": {
        "jump0": {"type": "number"},
        "jump1": {"type": "number"},
        "atoms": {"type": "array", "items": {"type": "array", "items": {"type": "number"},
                                             "minItems": 2, "maxItems": 2}},
        "density": {"type": ["string", "null"]},
    },
    "additionalProperties": False,
}
_G = {"type": "array", "items": _COMPONENT, "minItems": 1}

PROBLEM_SCHEMA = {
    "type": "object",
    "properties": {
        "k": {"type": "integer", "minimum": 1},
        "f": _EXPRS,
        "g": _G,
        "h": _EXPRS,
        "R": {"type": "number", "exclusiveMinimum": 0},
        "solver": {"type": "object"},
        "certify_r": {"type": ["number", "null"], "exclusiveMinimum": 0},
        "split": {"type": ["integer", "null"], "minimum": 1},
    },
    "required": ["k", "f", "g", "h", "R"],
    "additionalProperties": False,
}

SECOND_ORDER_SCHEMA = {
    "type": "object",
    "properties": {
        "k": {"type": "integer", "minimum": 1},
        "f2": _EXPRS,
        "h1": _EXPRS,
        "h2": _EXPRS,
        "g1": _G,
        "g2": _G,
        "R": {"type": "number", "exclusiveMinimum": 0},
        "solver": {"type": "object"},
        "certify_r": {"type": ["number", "null"], "exclusiveMinimum": 0},
    },
    "required": ["k", "f2", "h1", "h2", "g1", "g2", "R"],
    "additionalProperties": False,
}


class ConfigError(ValueError):
    """A config that cannot be used; ``path`` locates the offending entry."""

    def __init__(self, message: str, path: str = "$"):
        super().__init__(f"{path}: {message}")
        self.path = path


def _path(parts) -> str:
    out = "$"
    for p in parts:
        out += f"[{p}]" if isinstance(p, int) else f".{p}"
    return out


def _validate(doc, schema):
    errors = sorted(jsonschema.Draft202012Validator(schema).iter_errors(doc), key=lambda e: list(e.absolute_path))
    if errors:
        err = errors[0]
        raise ConfigError(err.message, _path(err.absolute_path))


def _check_lengths(doc: dict, keys):
    k = doc["k"]
    for key in keys:
        if len(doc[key]) != k:
            raise ConfigError(f"expected {k} entries, found {len(doc[key])}", _path([key]))


@dataclass(frozen=True)
class ProblemConfig:
    problem: Problem
    R: float
    solver: SolverConfig = field(default_factory=SolverConfig)
    certify_r: Optional[float] = None

    def to_dict(self) -> dict:
        p = self.problem
        d = {
            "k": p.k,
            "f": p.f.to_strings(),
            "g": p.g.to_list(),
            "h": p.h.to_strings(),
            "R": self.R,
        }
        if p.split is not None:
            d["split"] = p.split
        if self.solver != SolverConfig():
            d["solver"] = self.solver.to_dict()
        if self.certify_r is not None:
            d["certify_r"] = self.certify_r
        return d


@dataclass(frozen=True)
class SecondOrderConfig:
    spec: SecondOrderSpec
    R: float
    solver: SolverConfig = field(default_factory=SolverConfig)
    certify_r: Optional[float] = None


def _build(path_key: str, fn, *args):
    try:
        return fn(*args)
    except (ValueError, TypeError) as exc:  # parse errors and invariant violations
        raise ConfigError(str(exc), _path([path_key])) from exc


def _solver(doc: dict) -> SolverConfig:
    return _build("solver", SolverConfig.from_dict, doc.get("solver", {}))


def parse_config(doc) -> ProblemConfig | SecondOrderConfig:
    """Validate a decoded JSON document; second-order configs are recognised by ``f2``."""
    if not isinstance(doc, dict):
        raise ConfigError("config must be a JSON object")
    if "f2" in doc:
        _validate(doc, SECOND_ORDER_SCHEMA)
        _check_lengths(doc, ("f2", "h1", "h2", "g1", "g2"))
        g1 = _build("g1", BVFunction.from_list, doc["g1"])
        g2 = _build("g2", BVFunction.from_list, doc["g2"])
        spec = _build("f2", SecondOrderSpec, tuple(doc["f2"]), tuple(doc["h1"]), tuple(doc["h2"]), g1, g2)
        return SecondOrderConfig(spec, float(doc["R"]), _solver(doc), doc.get("certify_r"))
    _validate(doc, PROBLEM_SCHEMA)
    _check_lengths(doc, ("f", "g", "h"))
    f = _build("f", VectorField.from_strings, doc["f"])
    g = _build("g", BVFunction.from_list, doc["g"])
    h = _build("h", BoundaryMap.from_strings, doc["h"])
    problem = _build("split", Problem, f, g, h, doc.get("split"))
    return ProblemConfig(problem, float(doc["R"]), _solver(doc), doc.get("certify_r"))


def load_json(path: str):
    try:
        with open(path, encoding="utf-8") as fh:
            return json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc.strerror}", path) from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"invalid JSON at line {exc.lineno} column {exc.colno}: {exc.msg}", path) from exc


def dumps(obj, indent: Optional[int] = 2) -> str:
    """Stable-keyed JSON; non-finite floats are written as strings so the output stays valid JSON."""
    return json.dumps(_finite(obj), indent=indent, sort_keys=True, allow_nan=False)


def _finite(obj):
    if isinstance(obj, float) and not math.isfinite(obj):
        return repr(obj)
    if isinstance(obj, dict):
        return {k: _finite(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_finite(v) for v in obj]
    return obj
