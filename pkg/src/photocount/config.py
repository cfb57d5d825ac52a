"""Run configuration for the command-line tool.

A config is one JSON object. Complex numbers are written as ``[re, im]``
or as plain reals. Example::

    {
      "state": {"type": "cat", "alpha": [0, 3]},
      "detector": {"eta": 0.8, "T": 0.99, "v": 0.985, "K": null},
      "s": 0.0,
      "grid": {"kind": "polar", "radius": [0, 3, 20], "phases": 40},
      "N": 8000, "seed": 1, "format": "csv", "out": "scan.csv"
    }

Grid kinds: ``cartesian`` with ``re`` and ``im`` given as
``[start, stop, num]``; ``polar`` with ``radius`` as ``[start, stop, num]``
and an integer number of ``phases``, scanned circle by circle; ``points``
with an explicit list of complex values.
"""

from __future__ import annotations

import copy
import json
from dataclasses import dataclass, field

import numpy as np

from .direct_scheme import DetectorModel, visibility_to_overlap
from .states import (
    Cat,
    Coherent,
    Fock,
    Mixture,
    SqueezedVacuum,
    StateSpec,
    Thermal,
    Vacuum,
)

__all__ = ["ConfigError", "RunConfig", "parse_complex", "parse_state", "parse_detector",
           "grid_points", "load_config", "apply_override"]


class ConfigError(ValueError):
    def __init__(self, message: str, key: str | None = None):
        super().__init__(message)
        self.key = key

    def record(self) -> dict:
        return {"error": "config", "key": self.key, "message": str(self)}


def parse_complex(v, key: str = "value") -> complex:
    if isinstance(v, bool):
        raise ConfigError(f"{key}: expected a number or [re, im]", key)
    if isinstance(v, (int, float)):
        return complex(v)
    if isinstance(v, (list, tuple)) and len(v) == 2 and all(isinstance(c, (int, float)) for c in v):
        return complex(v[0], v[1])
    raise ConfigError(f"{key}: expected a number or [re, im], got {v!r}", key)


def _num(d: dict, name: str, key: str, default=None):
    if name not in d:
        if default is None:
            raise ConfigError(f"{key}.{name} is required", f"{key}.{name}")
        return default
    v = d[name]
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ConfigError(f"{key}.{name} must be a number", f"{key}.{name}")
    return v


def parse_state(d, key: str = "state") -> StateSpec:
    if not isinstance(d, dict) or "type" not in d:
        raise ConfigError(f"{key} must be an object with a 'type'", key)
    kind = d["type"]
    try:
        if kind == "vacuum":
            return Vacuum()
        if kind == "coherent":
            return Coherent(parse_complex(d.get("alpha", 0), f"{key}.alpha"))
        if kind == "fock":
            n = d.get("n")
            if not isinstance(n, int) or isinstance(n, bool):
                raise ConfigError(f"{key}.n must be an integer", f"{key}.n")
            return Fock(n)
        if kind == "thermal":
            return Thermal(float(_num(d, "nbar", key)))
        if kind == "squeezed":
            return SqueezedVacuum(float(_num(d, "r", key)))
        if kind == "cat":
            return Cat(parse_complex(d.get("alpha"), f"{key}.alpha"))
        if kind == "mixture":
            comps = d.get("components")
            if not isinstance(comps, list) or not comps:
                raise ConfigError(f"{key}.components must be a nonempty list", f"{key}.components")
            return Mixture(tuple((float(w), parse_state(c, f"{key}.components[{i}]"))
                                 for i, (w, c) in enumerate(comps)))
    except ConfigError:
        raise
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{key}: {exc}", key) from exc
    raise ConfigError(f"{key}.type: unknown state type {kind!r}", f"{key}.type")


def parse_detector(d, key: str = "detector") -> DetectorModel:
    if not isinstance(d, dict):
        raise ConfigError(f"{key} must be an object", key)
    if ("xi" in d) == ("v" in d):
        raise ConfigError(f"{key}: give exactly one of 'xi' or 'v'", key)
    try:
        xi = float(d["xi"]) if "xi" in d else visibility_to_overlap(float(d["v"]))
        K = d.get("K")
        if K is not None and (not isinstance(K, int) or isinstance(K, bool)):
            raise ConfigError(f"{key}.K must be an integer or null", f"{key}.K")
        return DetectorModel(float(_num(d, "eta", key)), float(_num(d, "T", key)), xi, K)
    except ConfigError:
        raise
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{key}: {exc}", key) from exc


def _linspace(v, key: str) -> np.ndarray:
    if (not isinstance(v, list) or len(v) != 3 or not isinstance(v[2], int)
            or isinstance(v[2], bool) or v[2] < 1):
        raise ConfigError(f"{key} must be [start, stop, num] with integer num >= 1", key)
    return np.linspace(float(v[0]), float(v[1]), v[2])


def grid_points(d, key: str = "grid"):
    """Points of a grid config; cartesian grids also return their axes."""
    if not isinstance(d, dict):
        raise ConfigError(f"{key} must be an object", key)
    kind = d.get("kind", "cartesian")
    if kind == "cartesian":
        re = _linspace(d.get("re"), f"{key}.re")
        im = _linspace(d.get("im", d.get("re")), f"{key}.im")
        return (re[:, None] + 1j * im[None, :]).ravel(), (re, im)
    if kind == "polar":
        radius = _linspace(d.get("radius"), f"{key}.radius")
        phases = d.get("phases")
        if not isinstance(phases, int) or isinstance(phases, bool) or phases < 1:
            raise ConfigError(f"{key}.phases must be a positive integer", f"{key}.phases")
        pts = []
        for r in radius:
            if r == 0:
                pts.append(0j)
                continue
            pts.extend(r * np.exp(2j * np.pi * np.arange(phases) / phases))
        return np.array(pts), None
    if kind == "points":
        pts = d.get("points")
        if not isinstance(pts, list) or not pts:
            raise ConfigError(f"{key}.points must be a nonempty list", f"{key}.points")
        return np.array([parse_complex(p, f"{key}.points[{i}]") for i, p in enumerate(pts)]), None
    raise ConfigError(f"{key}.kind: unknown grid kind {kind!r}", f"{key}.kind")


@dataclass
class RunConfig:
    """Resolved configuration; ``raw`` keeps the full JSON for provenance."""

    raw: dict
    seed: int = 0
    format: str = "csv"
    out: str | None = None
    strict: bool = False
    extras: dict = field(default_factory=dict)

    def get(self, name, default=None):
        return self.raw.get(name, default)

    def require(self, name):
        if name not in self.raw:
            raise ConfigError(f"{name} is required", name)
        return self.raw[name]

    def number(self, name, default=None) -> float:
        if name not in self.raw and default is not None:
            return default
        return float(_num(self.raw, name, "config", default))

    def state(self) -> StateSpec:
        return parse_state(self.require("state"))

    def detector(self) -> DetectorModel:
        return parse_detector(self.require("detector"))

    @property
    def resolved(self) -> dict:
        """The config as embedded in outputs; the output path is left out so
        that a rerun into another file is byte-identical."""
        body = {k: v for k, v in self.raw.items() if k != "out"}
        body.update(seed=self.seed, format=self.format, strict=self.strict)
        return body

    @property
    def provenance(self) -> str:
        return json.dumps(self.resolved, sort_keys=True, separators=(",", ":"))


def apply_override(raw: dict, assignment: str):
    """Apply ``dotted.key=JSON`` to ``raw`` in place."""
    if "=" not in assignment:
        raise ConfigError(f"override {assignment!r} must look like key=value", assignment)
    path, text = assignment.split("=", 1)
    try:
        value = json.loads(text)
    except json.JSONDecodeError:
        value = text
    keys = path.split(".")
    node = raw
    for k in keys[:-1]:
        node = node.setdefault(k, {})
        if not isinstance(node, dict):
            raise ConfigError(f"override {path!r} descends into a non-object", path)
    node[keys[-1]] = value


def load_config(path: str | None, *, seed=None, fmt=None, out=None, strict=False,
                overrides=()) -> RunConfig:
    raw: dict = {}
    if path is not None:
        try:
            with open(path) as fh:
                raw = json.load(fh)
        except OSError as exc:
            raise ConfigError(f"cannot read config: {exc}", "config") from exc
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config is not valid JSON: {exc}", "config") from exc
        if not isinstance(raw, dict):
            raise ConfigError("config must be a JSON object", "config")
    raw = copy.deepcopy(raw)
    for o in overrides:
        apply_override(raw, o)
    if seed is not None:
        raw["seed"] = seed
    if fmt is not None:
        raw["format"] = fmt
    if out is not None:
        raw["out"] = out
    s = raw.get("seed", 0)
    if not isinstance(s, int) or isinstance(s, bool) or not 0 <= s < 2**64:
        raise ConfigError("seed must be an unsigned 64-bit integer", "seed")
    f = raw.get("format", "csv")
    if f not in ("csv", "json"):
        raise ConfigError("format must be 'csv' or 'json'", "format")
    return RunConfig(raw, s, f, raw.get("out"), strict)
