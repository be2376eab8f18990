"""Experiment configuration: JSON documents validated against a schema.

A configuration looks like::

    {
      "mode": "sweep",
      "problem": {"kind": "quadratic", "dim": 100, "lambda_max": 1.0},
      "params": {"gammas": [0.1, 0.01], "delta": 0.01, "early_exit": true},
      "seeds": {"base_seed": 0, "count": 20},
      "out": "sweep.csv",
      "jobs": 4
    }

Command-line flags override file values.  Per-run seeds are derived from
``(base_seed, index)`` with :class:`numpy.random.SeedSequence`, which hashes its
entropy words into 64-bit outputs, so a run's seed never depends on how runs
are scheduled.
"""

from __future__ import annotations

import copy
import hashlib
import json
from dataclasses import dataclass, field
from typing import Optional

import jsonschema
import numpy as np

from ..errors import ConfigurationError

MODES = ("extract", "minimize", "sweep", "verify-lemma1")

_number = {"type": "number"}
_pos = {"type": "number", "exclusiveMinimum": 0}

SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "properties": {
        "mode": {"enum": list(MODES)},
        "problem": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "kind": {"enum": ["quadratic", "quartic"]},
                "dim": {"type": "integer", "minimum": 1},
                "lambda_min": {"type": ["number", "null"]},
                "lambda_max": _pos,
                "eigenvalues": {"type": "array", "items": _number, "minItems": 1},
                "a": {"oneOf": [
                    {"type": "array", "items": _pos, "minItems": 1},
                    {"type": "object", "additionalProperties": False,
                     "required": ["low", "high"],
                     "properties": {"low": _pos, "high": _pos}},
                ]},
                "bound": _pos,
                "rotated": {"type": "boolean"},
                "operating_radius": _pos,
            },
        },
        "params": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "gamma": _pos,
                "gammas": {"type": "array", "items": _pos, "minItems": 1},
                "eps": _pos,
                "delta": {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 1},
                "c_hat": {"type": "number", "minimum": 43},
                "eta_scale": _pos,
                "eta_gamma": _pos,
                "L2_eff": _pos,
                "c": _pos,
                "k": {"type": "integer", "minimum": 0},
                "early_exit": {"type": "boolean"},
                "algorithms": {"type": "array", "minItems": 1,
                               "items": {"enum": ["neon_plus", "neon_gd"]}},
            },
        },
        "seeds": {"oneOf": [
            {"type": "array", "items": {"type": "integer", "minimum": 0}, "minItems": 1},
            {"type": "object", "additionalProperties": False, "required": ["count"],
             "properties": {"base_seed": {"type": "integer", "minimum": 0},
                            "count": {"type": "integer", "minimum": 1}}},
        ]},
        "out": {"type": ["string", "null"]},
        "jobs": {"type": "integer", "minimum": 1},
    },
    "required": ["mode"],
}

SWEEP_GAMMAS = [0.1, 0.03, 0.01, 0.003, 0.001]

DEFAULTS = {
    "extract": {
        "problem": {"kind": "quadratic", "dim": 100, "lambda_max": 1.0},
        "params": {"gamma": 0.1, "delta": 0.01},
        "seeds": {"base_seed": 0, "count": 1},
    },
    "minimize": {
        "problem": {"kind": "quartic", "dim": 20, "a": {"low": 0.1, "high": 0.4}},
        "params": {"eps": 1e-3, "delta": 0.01},
        "seeds": {"base_seed": 0, "count": 1},
    },
    "sweep": {
        "problem": {"kind": "quadratic", "dim": 100, "lambda_max": 1.0},
        "params": {"gammas": SWEEP_GAMMAS, "delta": 0.01, "early_exit": True,
                   "algorithms": ["neon_plus", "neon_gd"]},
        "seeds": {"base_seed": 0, "count": 20},
    },
    "verify-lemma1": {
        "problem": {"kind": "quadratic", "dim": 8},
        "params": {"gamma": 0.01, "eta_gamma": 0.01, "k": 3},
        "seeds": {"base_seed": 0, "count": 100},
    },
}


PROBLEM_DEFAULTS = {
    "quadratic": {"kind": "quadratic", "dim": 100, "lambda_max": 1.0},
    "quartic": {"kind": "quartic", "dim": 20, "a": {"low": 0.1, "high": 0.4}},
}


def derive_seed(base_seed: int, index: int) -> int:
    """64-bit run seed from ``(base_seed, index)``."""
    ss = np.random.SeedSequence([int(base_seed), int(index)])
    return int(ss.generate_state(1, dtype=np.uint64)[0])


@dataclass
class ExperimentConfig:
    mode: str
    problem: dict
    params: dict
    seeds: list
    out: Optional[str] = None
    jobs: int = 1
    raw: dict = field(default_factory=dict)

    @property
    def digest(self) -> str:
        return config_digest(self.raw)

    @property
    def gammas(self) -> list:
        if "gammas" in self.params:
            return [float(g) for g in self.params["gammas"]]
        if "gamma" in self.params:
            return [float(self.params["gamma"])]
        raise ConfigurationError("no gamma configured")


def config_digest(raw: dict) -> str:
    """Digest of everything that can change a record; output path and parallelism excluded."""
    keep = {k: v for k, v in raw.items() if k not in ("out", "jobs")}
    blob = json.dumps(keep, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode()).hexdigest()[:12]


def load_document(path) -> dict:
    try:
        with open(path) as fh:
            return json.load(fh)
    except OSError as exc:
        raise ConfigurationError(f"cannot read config {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigurationError(f"config {path} is not valid JSON: {exc}") from exc


def _merge(base: dict, over: dict) -> dict:
    out = copy.deepcopy(base)
    for k, v in over.items():
        if isinstance(v, dict) and isinstance(out.get(k), dict):
            out[k] = _merge(out[k], v)
        else:
            out[k] = copy.deepcopy(v)
    return out


def build_config(doc: Optional[dict] = None, overrides: Optional[dict] = None,
                 mode: Optional[str] = None) -> ExperimentConfig:
    """Merge defaults, a config document and overrides, then validate."""
    doc = dict(doc or {})
    overrides = dict(overrides or {})
    mode = mode or overrides.get("mode") or doc.get("mode")
    if mode not in MODES:
        raise ConfigurationError(f"unknown or missing mode {mode!r}")
    doc_mode = doc.get("mode")
    if doc_mode is not None and doc_mode != mode:
        raise ConfigurationError(f"config is for mode {doc_mode!r}, not {mode!r}")
    mode_problem = DEFAULTS[mode]["problem"]
    kind = (overrides.get("problem", {}).get("kind") or doc.get("problem", {}).get("kind")
            or mode_problem["kind"])
    if kind not in PROBLEM_DEFAULTS:
        raise ConfigurationError(f"unknown problem kind {kind!r}")
    # a different problem kind starts from its own defaults, not the mode's
    problem = PROBLEM_DEFAULTS[kind] if kind != mode_problem["kind"] else mode_problem
    merged = _merge({**DEFAULTS[mode], "problem": problem}, doc)
    merged = _merge(merged, overrides)
    merged["mode"] = mode
    try:
        jsonschema.validate(merged, SCHEMA)
    except jsonschema.ValidationError as exc:
        path = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        raise ConfigurationError(f"invalid config at {path}: {exc.message}") from exc
    _check_semantics(merged)
    seeds = merged["seeds"]
    if isinstance(seeds, dict):
        base = int(seeds.get("base_seed", 0))
        seed_list = [derive_seed(base, i) for i in range(int(seeds["count"]))]
    else:
        seed_list = [int(s) for s in seeds]
    return ExperimentConfig(mode=mode, problem=merged["problem"], params=merged["params"],
                            seeds=seed_list, out=merged.get("out"),
                            jobs=int(merged.get("jobs", 1)), raw=merged)


def _check_semantics(cfg: dict):
    prob, params = cfg["problem"], cfg["params"]
    for g in params.get("gammas", [params.get("gamma", 0.5)]):
        if not 0 < g < 1:
            raise ConfigurationError(f"gamma {g!r} must lie in (0, 1)")
    if prob.get("kind") == "quartic":
        a = prob.get("a")
        if isinstance(a, list) and "dim" in prob and len(a) != prob["dim"]:
            raise ConfigurationError("length of 'a' does not match 'dim'")
        if isinstance(a, dict) and a["low"] > a["high"]:
            raise ConfigurationError("a.low exceeds a.high")
    if "eigenvalues" in prob and "dim" in prob and len(prob["eigenvalues"]) != prob["dim"]:
        raise ConfigurationError("length of 'eigenvalues' does not match 'dim'")
    if cfg["mode"] == "verify-lemma1":
        if params.get("k", 3) > prob.get("dim", 8):
            raise ConfigurationError("k exceeds the dimension")
