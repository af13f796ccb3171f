"""JSON run configuration (``"schema": 1``) and its validation."""
from __future__ import annotations

import json
import os
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any

import numpy as np
from jsonschema import Draft202012Validator

from .errors import ConfigError, RegobsError
from .geometry import Box, box_from_bounds, unit_interval
from .sensors import (
    Sensor,
    SymmetricProfile,
    TableProfile,
    UniformProfile,
    boundary_point,
    boundary_zone,
    filament,
    pointwise,
    zone,
)

__all__ = ["SCHEMA", "REPORT_SCHEMA", "RunConfig", "SweepSpec", "load_config", "parse_config", "default_parallelism"]

_POS = {"type": "number", "exclusiveMinimum": 0}
_POINT = {"type": "array", "items": {"type": "number"}, "minItems": 1, "maxItems": 2}
_BOUNDS = {
    "type": "array",
    "minItems": 1,
    "maxItems": 2,
    "items": {"type": "array", "items": {"type": "number"}, "minItems": 2, "maxItems": 2},
}
_STATE = {
    "type": "object",
    "properties": {
        "mode": {"oneOf": [{"type": "integer", "minimum": 1},
                           {"type": "array", "items": {"type": "integer", "minimum": 1},
                            "minItems": 2, "maxItems": 2}]},
        "coefficients": {"type": "array", "items": {"type": "number"}, "minItems": 1},
        "region_coefficients": {"type": "array", "items": {"type": "number"}, "minItems": 1},
        "amplitude": {"type": "number"},
    },
    "additionalProperties": False,
    "minProperties": 1,
}

SCHEMA: dict[str, Any] = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "required": ["schema"],
    "additionalProperties": False,
    "properties": {
        "schema": {"const": 1},
        "domain": {
            "type": "object",
            "properties": {
                "kind": {"enum": ["interval", "rectangle"]},
                "length": _POS,
                "sides": {"type": "array", "items": _POS, "minItems": 2, "maxItems": 2},
            },
            "required": ["kind"],
            "additionalProperties": False,
        },
        "region": {
            "type": "object",
            "properties": {"bounds": _BOUNDS},
            "required": ["bounds"],
            "additionalProperties": False,
        },
        "basis": {
            "type": "object",
            "properties": {
                "N": {"type": "integer", "minimum": 1},
                "N_region": {"type": "integer", "minimum": 1},
                "convention": {"enum": ["laplacian", "paper"]},
            },
            "additionalProperties": False,
        },
        "sensors": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["kind"],
                "additionalProperties": False,
                "properties": {
                    "kind": {"enum": ["zone-internal", "pointwise-internal", "zone-boundary",
                                      "pointwise-boundary", "filament"]},
                    "label": {"type": "string"},
                    "position": _POINT,
                    "support": _BOUNDS,
                    "segment": {"type": "array", "items": _POINT, "minItems": 2, "maxItems": 2},
                    "vertices": {"type": "array", "items": _POINT, "minItems": 2},
                    "profile": {
                        "type": "object",
                        "required": ["type"],
                        "additionalProperties": False,
                        "properties": {
                            "type": {"enum": ["uniform", "symmetric", "table"]},
                            "value": {"type": "number"},
                            "shapes": {"type": "array", "items": {"type": "string"}, "minItems": 1},
                            "axes": {"type": "array", "items": {"type": "array", "items": {"type": "number"}}},
                            "values": {"type": "array"},
                        },
                    },
                },
            },
        },
        "time": {
            "type": "object",
            "properties": {"T": _POS, "samples": {"type": "integer", "minimum": 2}},
            "additionalProperties": False,
        },
        "method": {"enum": ["gramian", "rank"]},
        "thresholds": {
            "type": "object",
            "properties": {
                "eps_group": _POS, "tau_rank": _POS, "tau_gram": _POS, "tau_rat": _POS,
                "q_max": {"type": "integer", "minimum": 1},
            },
            "additionalProperties": False,
        },
        "sweep": {
            "type": "object",
            "required": ["axes"],
            "additionalProperties": False,
            "properties": {
                "sensor": {"type": "integer", "minimum": 0},
                "axes": {
                    "type": "array",
                    "minItems": 1,
                    "maxItems": 2,
                    "items": {
                        "type": "object",
                        "required": ["start", "stop", "steps"],
                        "additionalProperties": False,
                        "properties": {
                            "start": {"type": "number"},
                            "stop": {"type": "number"},
                            "steps": {"type": "integer", "minimum": 1},
                        },
                    },
                },
            },
        },
        "x0": _STATE,
        "ground_truth": _STATE,
        "reconstruct": {
            "type": "object",
            "properties": {"ridge": {"type": "number", "minimum": 0}},
            "additionalProperties": False,
        },
        "counterexample": {
            "type": "object",
            "properties": {
                "alpha": {"type": "number"}, "b": {"type": "number"},
                "N": {"type": "integer", "minimum": 1}, "T": _POS,
            },
            "additionalProperties": False,
        },
        "output": {
            "type": "object",
            "properties": {"path": {"type": "string"}, "summary": {"type": "string"}},
            "additionalProperties": False,
        },
        "parallelism": {"type": "integer", "minimum": 1},
        "seed": {"type": "integer", "minimum": 0},
    },
}

_VALIDATOR = Draft202012Validator(SCHEMA)

_NUM_OR_NULL = {"type": ["number", "null"]}

# Published layout of the JSON written by ``regobs strategic``.
REPORT_SCHEMA: dict[str, Any] = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "required": ["verdict", "method", "q", "r", "q_ge_r", "N", "N_region", "thresholds",
                 "min_sv", "failing_groups", "gramian", "kernel_witnesses", "notes"],
    "properties": {
        "verdict": {"enum": ["strategic", "not-strategic"]},
        "method": {"enum": ["gramian", "rank"]},
        "q": {"type": "integer", "minimum": 0},
        "r": {"type": "integer", "minimum": 1},
        "q_ge_r": {"type": "boolean"},
        "N": {"type": "integer", "minimum": 1},
        "N_region": {"type": "integer", "minimum": 1},
        "T": _NUM_OR_NULL,
        "region": {"type": ["array", "null"]},
        "thresholds": {"type": "object", "additionalProperties": {"type": "number"}},
        "min_sv": {"type": "number"},
        "failing_groups": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["group", "eigenvalue", "modes", "rank", "singular_values"],
            },
        },
        "gramian": {
            "oneOf": [
                {"type": "null"},
                {"type": "object", "required": ["min_eigenvalue", "max_eigenvalue", "threshold"]},
            ]
        },
        "kernel_witnesses": {
            "type": "array",
            "items": {"type": "object", "required": ["modes", "coefficients", "output_sup"]},
        },
        "unverified_null_directions": {"type": "integer", "minimum": 0},
        "tail_truncated": {"type": "boolean"},
        "notes": {"type": "array", "items": {"type": "string"}},
        "seed": {"type": "integer"},
    },
}

DEFAULT_N = 25
DEFAULT_T = 1.0
DEFAULT_SAMPLES = 64
DEFAULT_SEED = 42


def default_parallelism() -> int:
    env = os.environ.get("REGOBS_THREADS")
    if env:
        try:
            value = int(env)
        except ValueError as exc:
            raise ConfigError(f"REGOBS_THREADS must be an integer, got {env!r}") from exc
        if value < 1:
            raise ConfigError("REGOBS_THREADS must be at least 1")
        return value
    return os.cpu_count() or 1


@dataclass(frozen=True)
class SweepSpec:
    sensor: int
    axes: tuple[tuple[float, float, int], ...]

    def coordinates(self) -> np.ndarray:
        """Grid points in row-major order, shape ``(P, dim)``."""
        lines = [np.array([a]) if n == 1 else np.linspace(a, b, n) for a, b, n in self.axes]
        mesh = np.meshgrid(*lines, indexing="ij")
        return np.column_stack([m.ravel() for m in mesh])


@dataclass(frozen=True)
class RunConfig:
    domain: Box
    region: Box
    N: int = DEFAULT_N
    N_region: int | None = None
    convention: str = "laplacian"
    sensors: tuple[Sensor, ...] = ()
    T: float = DEFAULT_T
    samples: int = DEFAULT_SAMPLES
    method: str | None = None
    eps_group: float = 1e-9
    tau_rank: float = 1e-8
    tau_gram: float = 1e-10
    tau_rat: float = 1e-9
    q_max: int = 1000
    sweep: SweepSpec | None = None
    x0: dict | None = None
    ground_truth: dict | None = None
    ridge: float = 0.0
    counterexample: dict = field(default_factory=dict)
    output_path: str | None = None
    summary_path: str | None = None
    parallelism: int | None = None
    seed: int = DEFAULT_SEED

    @property
    def regional(self) -> bool:
        return self.region != self.domain

    @property
    def resolved_method(self) -> str:
        if self.method:
            return self.method
        return "gramian" if self.regional else "rank"

    @property
    def workers(self) -> int:
        # REGOBS_THREADS wins over the config value
        if os.environ.get("REGOBS_THREADS"):
            return default_parallelism()
        return self.parallelism or default_parallelism()

    def with_method(self, method: str | None) -> "RunConfig":
        return self if method is None else replace(self, method=method)


def _error_path(err) -> str:
    parts = [str(p) for p in err.absolute_path]
    return "/".join(parts) if parts else "<root>"


def _profile(doc: dict | None, where: str):
    if doc is None:
        return None
    kind = doc["type"]
    try:
        if kind == "uniform":
            return UniformProfile(float(doc.get("value", 1.0)))
        if kind == "symmetric":
            if "shapes" not in doc:
                raise ConfigError(f"{where}/shapes: required for symmetric profiles")
            return SymmetricProfile(tuple(doc["shapes"]))
        if "axes" not in doc or "values" not in doc:
            raise ConfigError(f"{where}: table profiles need 'axes' and 'values'")
        return TableProfile(tuple(doc["axes"]), np.asarray(doc["values"], dtype=float))
    except RegobsError as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(f"{where}: {exc}") from exc


def _sensor(doc: dict, k: int) -> Sensor:
    where = f"sensors/{k}"
    kind = doc["kind"]
    label = doc.get("label", f"s{k + 1}")
    profile = _profile(doc.get("profile"), f"{where}/profile")
    needs = {
        "pointwise-internal": "position",
        "pointwise-boundary": "position",
        "zone-internal": "support",
        "zone-boundary": "segment",
        "filament": "vertices",
    }[kind]
    if needs not in doc:
        raise ConfigError(f"{where}/{needs}: required for {kind} sensors")
    try:
        if kind == "pointwise-internal":
            return pointwise(doc["position"], label)
        if kind == "pointwise-boundary":
            return boundary_point(doc["position"], label)
        if kind == "zone-internal":
            return zone(box_from_bounds(doc["support"]), profile, label)
        if kind == "zone-boundary":
            return boundary_zone(doc["segment"][0], doc["segment"][1], profile, label)
        return filament(doc["vertices"], profile, label)
    except RegobsError as exc:
        raise ConfigError(f"{where}: {exc}") from exc


def parse_config(doc: Any) -> RunConfig:
    """Validate a decoded JSON document and build a :class:`RunConfig`."""
    errors = sorted(_VALIDATOR.iter_errors(doc), key=lambda e: list(e.absolute_path))
    if errors:
        msg = "; ".join(f"{_error_path(e)}: {e.message}" for e in errors)
        raise ConfigError(msg)

    dom = doc.get("domain", {"kind": "interval"})
    try:
        if dom["kind"] == "interval":
            if "sides" in dom:
                raise ConfigError("domain/sides: not allowed for an interval")
            domain = unit_interval(float(dom.get("length", 1.0)))
        else:
            if "length" in dom:
                raise ConfigError("domain/length: not allowed for a rectangle")
            s1, s2 = dom.get("sides", [1.0, 1.0])
            domain = Box((0.0, 0.0), (float(s1), float(s2)))
        region = box_from_bounds(doc["region"]["bounds"]) if "region" in doc else domain
    except ConfigError:
        raise
    except RegobsError as exc:
        raise ConfigError(f"region: {exc}") from exc
    if region.dim != domain.dim:
        raise ConfigError("region/bounds: dimension does not match the domain")
    if not domain.contains_box(region):
        raise ConfigError(f"region/bounds: {region.to_json()} is not inside the domain {domain.to_json()}")

    sensors = tuple(_sensor(s, k) for k, s in enumerate(doc.get("sensors", [])))
    basis = doc.get("basis", {})
    time = doc.get("time", {})
    thr = doc.get("thresholds", {})
    sweep = None
    if "sweep" in doc:
        sw = doc["sweep"]
        axes = tuple((float(a["start"]), float(a["stop"]), int(a["steps"])) for a in sw["axes"])
        if len(axes) != domain.dim:
            raise ConfigError(f"sweep/axes: need {domain.dim} axes for this domain")
        sweep = SweepSpec(int(sw.get("sensor", 0)), axes)
        if sensors and sweep.sensor >= len(sensors):
            raise ConfigError(f"sweep/sensor: index {sweep.sensor} out of range")
    out = doc.get("output", {})
    return RunConfig(
        domain=domain,
        region=region,
        N=int(basis.get("N", DEFAULT_N)),
        N_region=basis.get("N_region"),
        convention=basis.get("convention", "laplacian"),
        sensors=sensors,
        T=float(time.get("T", DEFAULT_T)),
        samples=int(time.get("samples", DEFAULT_SAMPLES)),
        method=doc.get("method"),
        eps_group=float(thr.get("eps_group", 1e-9)),
        tau_rank=float(thr.get("tau_rank", 1e-8)),
        tau_gram=float(thr.get("tau_gram", 1e-10)),
        tau_rat=float(thr.get("tau_rat", 1e-9)),
        q_max=int(thr.get("q_max", 1000)),
        sweep=sweep,
        x0=doc.get("x0"),
        ground_truth=doc.get("ground_truth"),
        ridge=float(doc.get("reconstruct", {}).get("ridge", 0.0)),
        counterexample=dict(doc.get("counterexample", {})),
        output_path=out.get("path"),
        summary_path=out.get("summary"),
        parallelism=doc.get("parallelism"),
        seed=int(doc.get("seed", DEFAULT_SEED)),
    )


def load_config(path: str | os.PathLike) -> RunConfig:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"malformed JSON in {path}: {exc}") from exc
    return parse_config(doc)
