"""Experiment configuration: JSON schema, validation and named presets."""

from __future__ import annotations

import copy
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Mapping

import jsonschema
import numpy as np

from ..matrices import ENSEMBLE_KINDS
from ..parsing import ParseError, parse_ast

KINDS = ("cfree", "infinitesimal", "fluctuation", "ordered", "indented", "concentration")
FLUCTUATION_MIN_TRIALS = 1000
DEFAULT_THRESHOLD = 3.0
DEFAULT_SEED = 20240917

_NUMBER = {"type": "number"}
_MATRIX_SPEC = {
    "type": "object",
    "required": ["kind"],
    "properties": {
        "kind": {"enum": list(ENSEMBLE_KINDS)},
        "theta": _NUMBER,
        "a": {"oneOf": [_NUMBER, {"type": "array", "items": _NUMBER, "minItems": 1}]},
        "position": {"type": "integer", "minimum": 0},
        "angle": _NUMBER,
        "values": {"type": "array", "items": _NUMBER, "minItems": 1},
        "rank": {"type": "integer", "minimum": 0},
    },
    "additionalProperties": False,
}
_VECTOR_SPEC = {
    "type": "object",
    "required": ["kind"],
    "properties": {
        "kind": {"enum": ["basis", "ones", "explicit"]},
        "index": {"type": "integer", "minimum": 0},
        "values": {"type": "array", "items": {"oneOf": [_NUMBER, {"type": "array", "items": _NUMBER,
                                                                   "minItems": 2, "maxItems": 2}]}},
    },
    "additionalProperties": False,
}

SCHEMA: dict = {
    "$schema": "http://json-schema.org/draft-07/schema#",
    "title": "vortex experiment config",
    "type": "object",
    "required": ["kind", "dims", "trials", "ensembles", "words"],
    "properties": {
        "kind": {"enum": list(KINDS)},
        "preset": {"type": "string"},
        "dims": {"type": "array", "items": {"type": "integer", "minimum": 3}, "minItems": 1},
        "trials": {"type": "integer", "minimum": 2},
        "seed": {"type": "integer", "minimum": 0, "maximum": 2 ** 64 - 1},
        "ensembles": {
            "type": "object",
            "patternProperties": {"^[0-9]+$": {"oneOf": [_MATRIX_SPEC, {"type": "array", "items": _MATRIX_SPEC,
                                                                          "minItems": 1}]}},
            "additionalProperties": False,
        },
        "words": {"type": "array", "items": {"type": "string", "minLength": 1}, "minItems": 1},
        "pairs": {"type": "array", "items": {"type": "array", "items": {"type": "string"},
                                             "minItems": 2, "maxItems": 2}},
        "modes": {"type": "array", "items": {"enum": ["trace", "vector"]}, "minItems": 1},
        "fixed_vectors": {"type": "array", "items": _VECTOR_SPEC, "minItems": 1},
        "powers": {"type": "array", "items": {"type": "integer", "minimum": 1}},
        "threshold": {"type": "number", "exclusiveMinimum": 0},
        "rel_tol": {"type": "number", "exclusiveMinimum": 0},
        "chunk_size": {"type": "integer", "minimum": 1},
        "fit_terms": {"enum": [2, 3]},
        "outputs": {
            "type": "object",
            "properties": {"csv": {"type": "string"}, "summary": {"type": "string"}},
            "additionalProperties": False,
        },
    },
    "additionalProperties": False,
}


class ConfigError(ValueError):
    """Invalid experiment configuration."""


@dataclass
class ExperimentConfig:
    kind: str
    dims: list[int]
    trials: int
    seed: int
    ensembles: dict[int, Any]
    words: list[str]
    pairs: list[tuple[str, str]] = field(default_factory=list)
    modes: list[str] = field(default_factory=lambda: ["trace", "vector"])
    fixed_vectors: list[dict] = field(default_factory=list)
    powers: list[int] = field(default_factory=lambda: [1, 2, 3])
    threshold: float = DEFAULT_THRESHOLD
    rel_tol: float = 0.15
    chunk_size: int = 50
    fit_terms: int = 2
    outputs: dict[str, str] = field(default_factory=dict)

    @property
    def csv_name(self) -> str:
        return self.outputs.get("csv", f"{self.kind}.csv")

    @property
    def summary_name(self) -> str:
        return self.outputs.get("summary", f"{self.kind}_summary.json")

    def to_dict(self) -> dict:
        return {
            "kind": self.kind, "dims": self.dims, "trials": self.trials, "seed": self.seed,
            "ensembles": {str(k): v for k, v in self.ensembles.items()}, "words": self.words,
            "pairs": [list(p) for p in self.pairs], "modes": self.modes,
            "fixed_vectors": self.fixed_vectors, "powers": self.powers, "threshold": self.threshold,
            "rel_tol": self.rel_tol, "chunk_size": self.chunk_size, "fit_terms": self.fit_terms,
            "outputs": self.outputs,
        }

    def vectors(self, N: int) -> list[np.ndarray]:
        """Fixed vectors at dimension ``N``, checked to be orthonormal."""
        out = [vector_from_spec(s, N) for s in self.fixed_vectors]
        if out:
            V = np.column_stack(out)
            if np.linalg.norm(V.conj().T @ V - np.eye(len(out))) > 1e-10:
                raise ConfigError("fixed vectors must be orthonormal")
        return out


def vector_from_spec(spec: Mapping, N: int) -> np.ndarray:
    kind = spec["kind"]
    if kind == "basis":
        i = int(spec.get("index", 0))
        if i >= N:
            raise ConfigError(f"basis index {i} out of range for N={N}")
        v = np.zeros(N, dtype=complex)
        v[i] = 1
        return v
    if kind == "ones":
        return np.ones(N, dtype=complex) / np.sqrt(N)
    vals = [complex(*x) if isinstance(x, list) else complex(x) for x in spec.get("values", [])]
    if len(vals) != N:
        raise ConfigError(f"explicit vector has length {len(vals)}, expected N={N}")
    v = np.asarray(vals)
    nrm = np.linalg.norm(v)
    if nrm == 0:
        raise ConfigError("explicit vector is zero")
    return v / nrm


# ------------------------------------------------------------------ presets

_A = {"kind": "spiked_diagonal", "theta": 2.0, "a": [-1.0, 0.5, 1.0], "position": 0, "angle": 0.6}
_B = {"kind": "spiked_diagonal", "theta": 1.5, "a": [1.0, -0.5], "position": 0, "angle": 0.9}
_E0 = {"kind": "basis", "index": 0}
_E1 = {"kind": "basis", "index": 1}
_E2 = {"kind": "basis", "index": 2}
_GRID = [32, 64, 128, 256]

_CFREE_WORDS = [
    "X0", "Y0", "X0*Y0", "{X0}*{Y0}", "X0^2*Y0", "Y0*X0*Y0", "{X0}*{Y0}*{X0}",
    "X0*Y0*X0*Y0", "{X0}*{Y0}*{X0}*{Y0}", "{X0^2}*{Y0}*{X0}*{Y0}", "X0^2*Y0^2", "{X0}*{Y0^2}*{X0}*{Y0}",
]

PRESETS: dict[str, dict] = {
    "cfree-basic": {
        "kind": "cfree", "dims": _GRID, "trials": 2000, "seed": DEFAULT_SEED,
        "ensembles": {"0": _A, "1": _B}, "fixed_vectors": [_E0], "words": _CFREE_WORDS,
        "modes": ["trace", "vector"],
    },
    "concentration-basic": {
        "kind": "concentration", "dims": _GRID, "trials": 400, "seed": DEFAULT_SEED,
        "ensembles": {"0": _A, "1": _B}, "fixed_vectors": [_E0],
        "words": ["3", "X0*Y0", "{X0}*{Y0}*{X0}*{Y0}", "X0^2*Y0"], "modes": ["trace", "vector"],
    },
    # period-3 bulks and N - 1 divisible by 3: the trace on the complement of
    # v equals the bulk moments exactly, so Tr of centered words has no
    # O(1/N) offset from a partial period
    "infinitesimal-basic": {
        "kind": "infinitesimal", "dims": [16, 31, 64, 127, 256], "trials": 2000, "seed": DEFAULT_SEED,
        "ensembles": {
            "0": {"kind": "spiked_diagonal", "theta": 2.0, "a": [-1.0, 0.0, 1.0], "position": 0},
            "1": {"kind": "spiked_diagonal", "theta": 3.0, "a": [0.5, -0.5, 0.0], "position": 0, "angle": 0.7},
        },
        "fixed_vectors": [_E0],
        "words": ["X0^2", "X0*Y0", "X0^2*Y0", "X0*Y0*X0*Y0", "{X0}*{Y0}", "{X0}*{Y0}*{X0}*{Y0}",
                  "{X0^2}*{Y0}*{X0}*{Y0}", "{X0}*{Y0^2}"],
    },
    "fluctuation-basic": {
        "kind": "fluctuation", "dims": [128], "trials": 10000, "seed": DEFAULT_SEED,
        "ensembles": {
            "0": {"kind": "spiked_diagonal", "theta": 2.0, "a": [-1.0, 0.0, 1.0], "position": 0},
            "1": {"kind": "spiked_diagonal", "theta": 1.5, "a": [1.0, -1.0, 0.5], "position": 0, "angle": 0.9},
        },
        "fixed_vectors": [_E0],
        "words": ["{X0}*{Y0}*{X0}*{Y0}", "{X0^2}*{Y0}*{X0}*{Y0}"],
        "pairs": [["{X0}*{Y0}*{X0}*{Y0}", "{X0^2}*{Y0}*{X0}*{Y0}"]],
    },
    "ordered-basic": {
        "kind": "ordered", "dims": [64, 256], "trials": 2000, "seed": DEFAULT_SEED,
        "ensembles": {
            "0": _A,
            "1": {"kind": "spiked_diagonal", "theta": 1.5, "a": [1.0, -0.5], "position": 1, "angle": 0.9},
        },
        "fixed_vectors": [_E0, _E1], "powers": [1, 2, 3],
        "words": ["X0", "Y0", "X0*Y0", "Y0*X0", "X0*Y0*X0", "Y0*X0*Y0", "{X0}*{Y0}",
                  "{X0}*{Y0}*{X0}*{Y0}", "X0^2*Y0^2"],
    },
    # the triad is (e0, e2, e1): A tilts in the (u, w) plane and B in the (w, v) plane,
    # so neither family couples the two vectors its own unitary fixes; A's tilt is kept
    # small because its (u, w) coupling feeds an O(1/N) term through the shared vector u
    "indented-basic": {
        "kind": "indented", "dims": [64, 256], "trials": 2000, "seed": DEFAULT_SEED,
        "ensembles": {
            "0": dict(_A, angle=0.25),
            "1": {"kind": "spiked_diagonal", "theta": 1.5, "a": [1.0, -0.5], "position": 1, "angle": 0.9},
        },
        "fixed_vectors": [_E0, _E2, _E1], "powers": [1, 2, 3],
        "words": ["X0", "Y0", "X0*Y0", "Y0*X0", "X0*Y0*X0", "Y0*X0*Y0", "{X0}*{Y0}",
                  "{X0}*{Y0}*{X0}*{Y0}", "X0^2*Y0^2"],
    },
    "smoke": {
        "kind": "cfree", "dims": [16, 24, 32], "trials": 40, "seed": 7, "chunk_size": 8,
        "ensembles": {"0": _A, "1": _B}, "fixed_vectors": [_E0],
        "words": ["X0", "{X0}*{Y0}", "X0*Y0*X0*Y0"], "modes": ["trace", "vector"],
    },
}

_REQUIRED_VECTORS = {"cfree": 1, "concentration": 1, "infinitesimal": 1, "fluctuation": 1, "ordered": 2, "indented": 3}


def preset(name: str) -> dict:
    try:
        return copy.deepcopy(PRESETS[name])
    except KeyError:
        raise ConfigError(f"unknown preset {name!r}; available: {', '.join(sorted(PRESETS))}") from None


def _resolve(raw: Mapping) -> dict:
    data = dict(raw)
    if "preset" in data:
        base = preset(data.pop("preset"))
        base.update(data)
        data = base
    return data


def build_config(raw: Mapping, seed: int | None = None) -> ExperimentConfig:
    """Validate ``raw`` (possibly ``{"preset": name, ...overrides}``) into a config."""
    data = _resolve(raw)
    try:
        jsonschema.validate(data, SCHEMA)
    except jsonschema.ValidationError as exc:
        where = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        raise ConfigError(f"config invalid at {where}: {exc.message}") from None
    kind = data["kind"]
    dims = list(data["dims"])
    if any(b <= a for a, b in zip(dims, dims[1:])):
        raise ConfigError("dims must be strictly ascending")
    ensembles = {int(k): v for k, v in data["ensembles"].items()}
    if not {0, 1} <= set(ensembles):
        raise ConfigError("ensembles for families 0 and 1 are required")
    cfg = ExperimentConfig(
        kind=kind, dims=dims, trials=int(data["trials"]),
        seed=int(seed if seed is not None else data.get("seed", DEFAULT_SEED)),
        ensembles=ensembles, words=list(data["words"]),
        pairs=[tuple(p) for p in data.get("pairs", [])],
        modes=list(data.get("modes", ["trace", "vector"])),
        fixed_vectors=list(data.get("fixed_vectors", [_E0, _E1, _E2][:_REQUIRED_VECTORS[kind]])),
        powers=list(data.get("powers", [1, 2, 3])),
        threshold=float(data.get("threshold", DEFAULT_THRESHOLD)),
        rel_tol=float(data.get("rel_tol", 0.15)),
        chunk_size=int(data.get("chunk_size", 50)),
        fit_terms=int(data.get("fit_terms", 2)),
        outputs=dict(data.get("outputs", {})),
    )
    if not 0 <= cfg.seed < 2 ** 64:
        raise ConfigError("seed must be a 64-bit unsigned integer")
    need = _REQUIRED_VECTORS[kind]
    if len(cfg.fixed_vectors) != need:
        raise ConfigError(f"{kind} experiments need exactly {need} fixed vector(s)")
    if kind == "fluctuation" and cfg.trials < FLUCTUATION_MIN_TRIALS:
        raise ConfigError(f"fluctuation experiments need at least {FLUCTUATION_MIN_TRIALS} trials "
                          f"per dimension, got {cfg.trials}")
    if kind in ("infinitesimal", "concentration") and len(dims) < 3:
        raise ConfigError(f"{kind} experiments need at least 3 dimensions for a fit")
    if kind == "infinitesimal" and len(dims) < cfg.fit_terms + 1:
        raise ConfigError(f"a {cfg.fit_terms}-term fit needs at least {cfg.fit_terms + 1} dimensions")
    if kind == "cfree" and len(dims) < 2:
        raise ConfigError("cfree experiments need at least 2 dimensions for the slope")
    for text in list(cfg.words) + [w for pq in cfg.pairs for w in pq]:
        try:
            parse_ast(text)
        except ParseError as exc:
            raise ConfigError(f"word {text!r}: {exc}") from None
    for N in dims:
        cfg.vectors(N)
    return cfg


def load_config(path: str | Path, seed: int | None = None) -> ExperimentConfig:
    try:
        raw = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: not valid JSON ({exc})") from None
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    return build_config(raw, seed)
