"""Experiment configuration: JSON documents validated against a versioned schema."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import jsonschema

from .errors import NeuromorphError

SCHEMA_VERSION = 1
TASKS = ("encode", "intra", "ssm", "attn", "train", "sweep", "check")
CHECK_NAMES = (
    "codec-round-trip", "bernoulli-convergence", "linear-attention", "parallel-scan", "toeplitz",
    "exact-attention", "coincidence-pair", "stochastic-attention", "gradient-check",
    "multiplication-free", "tradeoff", "learning", "determinism",
)

_num = {"type": "number"}
_pos_int = {"type": "integer", "minimum": 1}

_codec = {
    "type": "object",
    "additionalProperties": False,
    "properties": {
        "scheme": {"enum": ["rate-unary", "rate-random", "bernoulli", "time-positional",
                            "first-to-spike", "multilevel-rate"]},
        "t_steps": _pos_int,
        "levels": _pos_int,
    },
    "required": ["scheme", "t_steps"],
}

_models = {
    "encode": {"type": "object", "additionalProperties": False, "properties": {}},
    "intra": {
        "type": "object", "additionalProperties": False,
        "properties": {
            "dims": {"type": "array", "items": _pos_int, "minItems": 2},
            "alpha": _num, "gamma": _num, "reset": {"type": "boolean"},
            "mode": {"enum": ["deterministic-binary", "probabilistic-binary"]},
        },
        "required": ["dims"],
    },
    "ssm": {
        "type": "object", "additionalProperties": False,
        "properties": {
            "d_z": _pos_int, "d_k": _pos_int, "d_v": _pos_int,
            "gates": {
                "type": "object", "additionalProperties": False,
                "properties": {"mode": {"enum": ["constant", "selective"]}, "a": _num, "b": _num,
                               "c_delta": _num},
            },
            "spiking": {
                "type": "object", "additionalProperties": False,
                "properties": {"mode": {"enum": ["probabilistic", "deterministic"]}, "gamma": _num},
            },
        },
        "required": ["d_z", "d_k", "d_v"],
    },
    "attn": {
        "type": "object", "additionalProperties": False,
        "properties": {
            "d_z": _pos_int, "d_k": _pos_int, "d_v": _pos_int,
            "variant": {"enum": ["exact", "lif-and", "lif-xnor", "stochastic"]},
            "mask": {"enum": ["full", "autoregressive"]},
            "softmax": {"type": "boolean"}, "alpha": _num, "gamma": _num,
        },
        "required": ["d_z", "d_k", "d_v"],
    },
    "train": {
        "type": "object", "additionalProperties": False,
        "properties": {
            "d_emb": _pos_int, "hidden": {"type": "array", "items": _pos_int, "minItems": 1},
            "alpha": _num, "threshold": _num, "steps": _pos_int, "lr": _num,
            "surrogate": {
                "type": "object", "additionalProperties": False,
                "properties": {"kind": {"enum": ["sigmoid", "arctan", "piecewise-linear",
                                                 "straight-through"]},
                               "beta": {"type": "number", "exclusiveMinimum": 0}},
            },
        },
    },
    "sweep": {
        "type": "object", "additionalProperties": False,
        "properties": {
            "task": {"enum": ["bernoulli-rate"]},
            "values": {"type": "array", "items": {"type": "number", "minimum": 0, "maximum": 1},
                       "minItems": 1},
            "t_values": {"type": "array", "items": _pos_int, "minItems": 1},
            "trials": _pos_int, "workers": _pos_int,
        },
        "required": ["t_values"],
    },
    "check": {
        "type": "object", "additionalProperties": False,
        "properties": {"checks": {"type": "array", "items": {"enum": list(CHECK_NAMES)}, "uniqueItems": True}},
    },
}

_inputs = {
    "encode": {
        "type": "object", "additionalProperties": False,
        "properties": {"values": {"type": "array", "items": _num, "minItems": 1}},
        "required": ["values"],
    },
    "intra": {
        "type": "object", "additionalProperties": False,
        "properties": {
            "tokens": {"type": "array", "items": {"type": "array", "items": _num}, "minItems": 1},
            "n_tokens": _pos_int,
        },
    },
    "ssm": {"type": "object", "additionalProperties": False, "properties": {"n_tokens": _pos_int}},
    "attn": {"type": "object", "additionalProperties": False, "properties": {"n_tokens": _pos_int}},
    "train": {
        "type": "object", "additionalProperties": False,
        "properties": {"text": {"type": "string", "minLength": 2}, "corpus": {"type": "string"}},
    },
    "sweep": {"type": "object", "additionalProperties": False, "properties": {}},
    "check": {"type": "object", "additionalProperties": False, "properties": {}},
}

SCHEMA: dict[str, Any] = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "additionalProperties": False,
    "properties": {
        "version": {"const": SCHEMA_VERSION},
        "task": {"enum": list(TASKS)},
        "seed": {"type": "integer", "minimum": 0},
        "out": {"type": "string"},
        "codec": _codec,
        "model": {"type": "object"},
        "input": {"type": "object"},
    },
    "required": ["version", "task"],
    "allOf": [
        {
            "if": {"properties": {"task": {"const": t}}, "required": ["task"]},
            "then": {"properties": {"model": _models[t], "input": _inputs[t]}},
        }
        for t in TASKS
    ] + [
        {
            "if": {"properties": {"task": {"enum": ["encode"]}}, "required": ["task"]},
            "then": {"required": ["codec", "input"]},
        },
        {
            "if": {"properties": {"task": {"enum": ["intra", "ssm", "attn", "sweep"]}},
                   "required": ["task"]},
            "then": {"required": ["model"]},
        },
    ],
}


class ConfigError(NeuromorphError):
    def __init__(self, problems: list[str]):
        super().__init__("; ".join(problems))
        self.problems = problems


@dataclass
class ExperimentConfig:
    task: str
    seed: int = 0
    codec: dict = field(default_factory=dict)
    model: dict = field(default_factory=dict)
    input: dict = field(default_factory=dict)
    out: str | None = None
    version: int = SCHEMA_VERSION


def validate(doc: Any) -> ExperimentConfig:
    validator = jsonschema.Draft202012Validator(SCHEMA)
    errors = sorted(validator.iter_errors(doc), key=lambda e: list(e.absolute_path))
    if errors:
        problems = []
        for e in errors:
            where = "/".join(str(p) for p in e.absolute_path) or "<root>"
            problems.append(f"{where}: {e.message}")
        raise ConfigError(problems)
    return ExperimentConfig(**doc)


def load_config(path: str | Path) -> ExperimentConfig:
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
    except FileNotFoundError:
        raise ConfigError([f"config file {path} not found"]) from None
    except json.JSONDecodeError as exc:
        raise ConfigError([f"invalid JSON: {exc}"]) from None
    return validate(doc)
