"""System and measure specifications: inline strings, JSON objects and the config schema."""
from __future__ import annotations

import math
from typing import Any

import jsonschema
import numpy as np

from .errors import ConfigError, DomainError
from .measures import Bernoulli, Markov, MeasureSpec, Mixture, parry_measure, point_mass
from .metric_core import FiniteMetricSystem
from .shift_systems import GOLDEN_MEAN, Alphabet, ShiftWindowSystem, build_full_shift, build_rotation, build_sft

NAMED_ADJACENCY = {"golden": GOLDEN_MEAN}
AUTO_LAZY_WORDS = 1 << 16

EXPERIMENTS = ("cover", "growth", "sandwich", "mdim", "entropy", "mrid", "idr", "rd-curve", "rd-dim",
               "rd-checks", "brin-katok", "ball-bound", "vp-check", "mbke", "tame")

_matrix = {"type": "array", "items": {"type": "array", "items": {"type": "number"}}, "minItems": 1}
_system_obj = {
    "type": "object",
    "required": ["kind"],
    "properties": {
        "kind": {"enum": ["full_shift", "sft", "rotation", "unit_shift_family", "rotation_family"]},
        "m": {"type": "integer", "minimum": 1},
        "W": {"type": "integer", "minimum": 0},
        "horizon": {"type": "integer", "minimum": 1},
        "adjacency": {"anyOf": [{"type": "string"}, _matrix]},
        "values": {"type": "array", "items": {"type": "number"}},
        "p": {"type": "integer"},
        "q": {"type": "integer", "minimum": 1},
        "lazy": {"type": "boolean"},
    },
    "additionalProperties": False,
}
_measure_obj = {
    "type": "object",
    "required": ["kind"],
    "properties": {
        "kind": {"enum": ["bernoulli", "markov", "parry", "mixture", "point_mass", "uniform"]},
        "probs": {"type": "array", "items": {"type": "number", "minimum": 0}, "minItems": 1},
        "transition": _matrix,
        "adjacency": {"anyOf": [{"type": "string"}, _matrix]},
        "weights": {"type": "array", "items": {"type": "number", "minimum": 0}},
        "components": {"type": "array", "items": {"$ref": "#/$defs/measure"}, "minItems": 1},
        "k": {"type": "integer", "minimum": 1},
        "symbol": {"type": "integer", "minimum": 0},
    },
    "additionalProperties": False,
}
_spec = lambda obj: {"anyOf": [{"type": "string"}, obj]}

CONFIG_SCHEMA: dict[str, Any] = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "$defs": {"measure": _spec(_measure_obj), "system": _spec(_system_obj)},
    "type": "object",
    "required": ["experiment"],
    "properties": {
        "experiment": {"enum": list(EXPERIMENTS)},
        "system": {"$ref": "#/$defs/system"},
        "measures": {"type": "array", "items": {"$ref": "#/$defs/measure"}, "minItems": 1},
        "eps": {"type": "number", "exclusiveMinimum": 0},
        "eps_grid": {"type": "array", "items": {"type": "number", "exclusiveMinimum": 0}, "minItems": 1},
        "m_grid": {"type": "array", "items": {"type": "integer", "minimum": 1}, "minItems": 1},
        "R_grid": {"type": "array", "items": {"type": "number", "minimum": 0}, "minItems": 1},
        "delta_grid": {"type": "array", "items": {"type": "number", "exclusiveMinimum": 0}, "minItems": 1},
        "n_range": {"type": "array", "items": {"type": "integer", "minimum": 1}, "minItems": 2, "maxItems": 2},
        "n": {"type": "integer", "minimum": 1},
        "n_max": {"type": "integer", "minimum": 1},
        "p": {"type": "number", "minimum": 1},
        "delta": {"type": "number", "exclusiveMinimum": 0},
        "mdim_est": {"type": "number", "minimum": 0},
        "family": {"enum": ["grid", "voronoi", "runs", "all"]},
        "centers": {"type": "integer", "minimum": 3},
        "seeds": {"type": "array", "items": {"type": "integer", "minimum": 0}, "minItems": 1},
        "tolerances": {"type": "object", "additionalProperties": {"type": "number", "minimum": 0}},
        "units": {"enum": ["nats", "bits"]},
        "balls": {"type": "boolean"},
        "output_dir": {"type": "string"},
    },
    "additionalProperties": False,
    "allOf": [
        {"if": {"properties": {"experiment": {"enum": ["vp-check", "entropy", "mrid", "idr", "rd-curve",
                                                       "rd-dim", "rd-checks", "brin-katok", "ball-bound"]}}},
         "then": {"required": ["measures"]}},
        {"if": {"properties": {"experiment": {"enum": ["cover", "growth", "sandwich", "vp-check",
                                                       "brin-katok", "ball-bound", "tame"]}}},
         "then": {"required": ["system"]}},
    ],
}


def validate_config(config: Any) -> dict:
    """Validate against :data:`CONFIG_SCHEMA`; errors carry a JSON pointer to the offending field."""
    validator = jsonschema.Draft202012Validator(CONFIG_SCHEMA)
    err = jsonschema.exceptions.best_match(validator.iter_errors(config))
    if err is not None:
        pointer = "/" + "/".join(str(p) for p in err.absolute_path)
        raise ConfigError(err.message, pointer)
    return config


def _numbers(text: str) -> list[float]:
    try:
        return [float(t) for t in text.split(",") if t.strip()]
    except ValueError as exc:
        raise ConfigError(f"bad number list {text!r}", "") from exc


def _adjacency(value) -> np.ndarray:
    if isinstance(value, str):
        if value not in NAMED_ADJACENCY:
            raise ConfigError(f"unknown adjacency name {value!r}", "/adjacency")
        return np.asarray(NAMED_ADJACENCY[value])
    return np.asarray(value)


def parse_system(spec) -> dict:
    """Normalize a system spec to a dict.

    Inline forms: ``rotation:p,q``, ``full_shift:m,W,H``, ``sft:golden,W,H``,
    ``unit_shift_family`` and ``rotation_family``.
    """
    if isinstance(spec, dict):
        return dict(spec)
    kind, _, args = str(spec).partition(":")
    if kind == "rotation":
        p, q = (int(v) for v in _numbers(args))
        return {"kind": "rotation", "p": p, "q": q}
    if kind == "full_shift":
        vals = [int(v) for v in _numbers(args)]
        m, W, H = (vals + [2, 0, 1][len(vals):])[:3]
        return {"kind": "full_shift", "m": m, "W": W, "horizon": H}
    if kind == "sft":
        name, *rest = args.split(",")
        W, H = ([int(v) for v in rest] + [0, 1])[:2]
        return {"kind": "sft", "adjacency": name, "W": W, "horizon": H}
    if kind in ("unit_shift_family", "rotation_family"):
        return {"kind": kind}
    raise ConfigError(f"unknown system spec {spec!r}", "/system")


def build_system(spec, lazy: bool | None = None) -> FiniteMetricSystem:
    """Instantiate a single system (not a family) from a spec.

    Full shifts with more than :data:`AUTO_LAZY_WORDS` words are built lazily
    unless ``lazy`` is given; their covering brackets need no enumeration.
    """
    d = parse_system(spec)
    kind = d["kind"]
    if lazy is None:
        lazy = d.get("lazy")
    if lazy is None:
        size = d.get("m", len(d.get("values", ())) or 2) ** (d.get("horizon", 1) + 2 * d.get("W", 0))
        lazy = kind == "full_shift" and size > AUTO_LAZY_WORDS
    try:
        if kind == "rotation":
            return build_rotation(d.get("p", 1), d["q"])
        alphabet = Alphabet(tuple(d["values"])) if "values" in d else None
        if kind == "full_shift":
            return build_full_shift(d.get("m", 2), d.get("W", 0), d.get("horizon", 1),
                                    alphabet=alphabet, lazy=lazy)
        if kind == "sft":
            return build_sft(_adjacency(d["adjacency"]), alphabet, d.get("W", 0), d.get("horizon", 1),
                             lazy=lazy)
    except KeyError as exc:
        raise ConfigError(f"system spec lacks {exc.args[0]!r}", f"/system/{exc.args[0]}") from exc
    raise ConfigError(f"{kind} is a family, not a single system", "/system/kind")


def parse_measure(spec) -> dict:
    """Normalize a measure spec to a dict.

    Inline forms: ``bernoulli:p0,p1,...``, ``uniform:k``, ``parry:golden``,
    ``point_mass:k,symbol`` and ``markov:p00,p01,p10,p11`` (row-major, square).
    """
    if isinstance(spec, dict):
        return dict(spec)
    kind, _, args = str(spec).partition(":")
    if kind == "bernoulli":
        return {"kind": "bernoulli", "probs": _numbers(args)}
    if kind == "uniform":
        return {"kind": "uniform", "k": int(args or 2)}
    if kind == "parry":
        return {"kind": "parry", "adjacency": args or "golden"}
    if kind == "point_mass":
        k, *sym = (int(v) for v in _numbers(args or "1"))
        return {"kind": "point_mass", "k": k, "symbol": sym[0] if sym else 0}
    if kind == "markov":
        vals = _numbers(args)
        k = math.isqrt(len(vals))
        if k * k != len(vals):
            raise ConfigError("markov spec needs a square number of entries", "/measures")
        return {"kind": "markov", "transition": np.reshape(vals, (k, k)).tolist()}
    raise ConfigError(f"unknown measure spec {spec!r}", "/measures")


def build_measure(spec, alphabet: Alphabet | None = None) -> MeasureSpec:
    d = parse_measure(spec)
    kind = d["kind"]
    try:
        if kind == "bernoulli":
            return Bernoulli(tuple(d["probs"]), alphabet)
        if kind == "uniform":
            k = d.get("k", alphabet.size if alphabet else 2)
            return Bernoulli(tuple([1.0 / k] * k), alphabet)
        if kind == "markov":
            return Markov(np.asarray(d["transition"], float), alphabet=alphabet)
        if kind == "parry":
            return parry_measure(_adjacency(d.get("adjacency", "golden")), alphabet)
        if kind == "point_mass":
            return point_mass(d.get("k", 1), d.get("symbol", 0), alphabet)
        if kind == "mixture":
            comps = [build_measure(c, alphabet) for c in d["components"]]
            weights = d.get("weights") or [1.0 / len(comps)] * len(comps)
            return Mixture(list(zip(weights, comps)), alphabet)
    except KeyError as exc:
        raise ConfigError(f"measure spec lacks {exc.args[0]!r}", f"/measures/{exc.args[0]}") from exc
    except DomainError as exc:
        raise ConfigError(str(exc), "/measures") from exc
    raise ConfigError(f"unknown measure kind {kind!r}", "/measures")


def system_alphabet(sys: FiniteMetricSystem) -> Alphabet | None:
    return sys.alphabet if isinstance(sys, ShiftWindowSystem) else None
