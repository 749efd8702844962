"""JSON experiment configuration: schema validation and defaults."""

from __future__ import annotations

import json

import jsonschema


class ConfigError(ValueError):
    """The configuration file is missing, malformed or out of contract."""


_NUMBER_ROW = {"type": "array", "items": {"type": "number"}, "minItems": 1}

SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "properties": {
        "K": {"type": "integer", "minimum": 1},
        "alpha_true": _NUMBER_ROW,
        "C": {"type": "array", "items": _NUMBER_ROW, "minItems": 1},
        "N": {"type": "integer", "minimum": 1},
        "M": {"type": "integer", "minimum": 2},
        "L": {"type": "number", "exclusiveMinimum": 0},
        "T": {"type": "number", "exclusiveMinimum": 0},
        "x0": {"type": "number", "exclusiveMinimum": 0},
        "observed_components": {
            "type": "array",
            "items": {"type": "integer", "minimum": 1},
            "minItems": 1,
        },
        "delta": {
            "anyOf": [
                {"type": "number", "minimum": 0, "exclusiveMaximum": 1},
                {
                    "type": "array",
                    "items": {"type": "number", "minimum": 0, "exclusiveMaximum": 1},
                    "minItems": 1,
                },
            ]
        },
        "alpha0": _NUMBER_ROW,
        "tol": {"type": "number", "exclusiveMinimum": 0},
        "fd_step": {"type": "number"},
        "max_iters": {"type": "integer", "minimum": 1},
    },
}

DEFAULTS = {
    "N": 100,
    "M": 100,
    "L": 1.0,
    "T": 1.0,
    "x0": 0.5,
    "delta": 0.0,
    "tol": 1e-6,
    "fd_step": 1e-6,
    "max_iters": 10,
}


def load_config(path: str) -> dict:
    """Parse and validate a config file; unknown keys are rejected.
    Returns the settings merged over the defaults."""
    try:
        with open(path) as fh:
            raw = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path} is not valid JSON: {exc}") from exc
    try:
        jsonschema.validate(raw, SCHEMA)
    except jsonschema.ValidationError as exc:
        raise ConfigError(f"config {path}: {exc.message}") from exc

    merged = dict(DEFAULTS)
    merged.update(raw)
    _cross_check(merged)
    return merged


def _cross_check(cfg: dict) -> None:
    k = cfg.get("K")
    if k is None:
        for key in ("alpha_true", "alpha0"):
            if key in cfg:
                k = len(cfg[key])
                cfg["K"] = k
                break
    if k is None and "C" in cfg:
        k = len(cfg["C"])
        cfg["K"] = k
    if k is not None:
        for key in ("alpha_true", "alpha0"):
            if key in cfg and len(cfg[key]) != k:
                raise ConfigError(f"{key} must have K = {k} entries")
        if "C" in cfg:
            rows = cfg["C"]
            if len(rows) != k or any(len(row) != k for row in rows):
                raise ConfigError(f"C must be a {k} x {k} matrix")
        if "observed_components" in cfg:
            bad = [c for c in cfg["observed_components"] if not 1 <= c <= k]
            if bad:
                raise ConfigError(f"observed components {bad} outside 1..{k}")
    for key in ("alpha_true", "alpha0"):
        if key in cfg:
            bad = [a for a in cfg[key] if not 0.0 < a < 1.0]
            if bad:
                raise ConfigError(f"{key} entries {bad} outside (0, 1)")
    if not 0.0 < abs(cfg["fd_step"]) < 1.0:
        raise ConfigError("fd_step must satisfy 0 < |fd_step| < 1")
