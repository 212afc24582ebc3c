"""Experiment configuration: one JSON document, validated field by field.

Example::

    {
      "instance": {"generator": "uniform", "n": 10, "k": 3, "seed": 0},
      "policies": ["at_ducb", {"name": "esucb", "params": {"tmax_fraction": 0.125}}],
      "horizons": [4096, 16384],
      "seeds": {"base_seed": 0, "count": 20},
      "output_dir": "runs/demo"
    }
"""
from __future__ import annotations

import hashlib
import json
import warnings
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Mapping, Optional, Tuple

from ..core import Instance
from ..instances import (
    InstanceFormatError,
    gen_lowerbound_base,
    gen_lowerbound_perturbed,
    gen_uniform_random,
    load,
)
from ..metrics import TRACE_MODES
from ..policies import POLICIES

TOP_LEVEL = ("instance", "instance_per_seed", "policies", "horizons", "seeds", "output_dir",
             "trace_mode", "grid", "n_grid")

GENERATORS = {
    "uniform": {"required": ("n", "k"), "optional": {"seed": 0}},
    "lb-base": {"required": ("n",), "optional": {"capacity": 1}},
    "lb-perturbed": {"required": ("n", "k_item", "t1"), "optional": {"capacity": 1}},
}


_PROBE = Instance(1, 1, [1.0], [0.5])


class ConfigError(ValueError):
    """Invalid experiment configuration; the message names the offending field."""

    def __init__(self, field_name: str, message: str):
        super().__init__(f"{field_name}: {message}")
        self.field = field_name


@dataclass(frozen=True)
class PolicySpec:
    name: str
    params: Dict[str, Any] = field(default_factory=dict)
    overrides: Tuple[str, ...] = ()

    @property
    def label(self) -> str:
        if not self.overrides:
            return self.name
        tail = ",".join(f"{k}={self.params[k]}" for k in sorted(self.overrides))
        return f"{self.name}[{tail}]"

    def build(self):
        return POLICIES[self.name](**self.params)


@dataclass(frozen=True)
class ExperimentConfig:
    instance: Dict[str, Any]
    policies: Tuple[PolicySpec, ...]
    horizons: Tuple[int, ...]
    seeds: Tuple[int, ...]
    output_dir: str = "results"
    trace_mode: str = "summary"
    grid: Any = None
    n_grid: Optional[Tuple[int, ...]] = None
    instance_per_seed: bool = False

    def to_dict(self) -> dict:
        return {
            "instance": dict(self.instance),
            "instance_per_seed": self.instance_per_seed,
            "policies": [{"name": p.name, "params": dict(p.params), "overrides": list(p.overrides)}
                         for p in self.policies],
            "horizons": list(self.horizons),
            "seeds": list(self.seeds),
            "output_dir": self.output_dir,
            "trace_mode": self.trace_mode,
            "grid": self.grid,
            "n_grid": None if self.n_grid is None else list(self.n_grid),
        }

    def digest(self) -> str:
        text = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(text.encode()).hexdigest()

    def item_counts(self) -> List[Optional[int]]:
        return list(self.n_grid) if self.n_grid else [None]

    def make_instance(self, n_items: Optional[int] = None, seed: int = 0) -> Instance:
        spec = dict(self.instance)
        if "file" in spec:
            return load(spec["file"])
        family = spec.pop("generator")
        if n_items is not None:
            spec["n"] = n_items
        if family == "uniform":
            offset = seed if self.instance_per_seed else 0
            return gen_uniform_random(spec["n"], min(spec["k"], spec["n"]), seed=spec["seed"] + offset)
        if family == "lb-base":
            return gen_lowerbound_base(spec["n"], capacity=spec["capacity"])
        return gen_lowerbound_perturbed(spec["n"], spec["k_item"], spec["t1"], capacity=spec["capacity"])


def _int(value, name, minimum=None) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise ConfigError(name, f"expected an integer, got {value!r}")
    if minimum is not None and value < minimum:
        raise ConfigError(name, f"must be >= {minimum}, got {value}")
    return value


def _instance(raw) -> Dict[str, Any]:
    if not isinstance(raw, Mapping):
        raise ConfigError("instance", "expected an object with 'file' or 'generator'")
    if "file" in raw:
        extra = set(raw) - {"file"}
        if extra:
            raise ConfigError(f"instance.{sorted(extra)[0]}", "not allowed next to 'file'")
        path = raw["file"]
        if not isinstance(path, str):
            raise ConfigError("instance.file", "expected a path string")
        try:
            load(path)
        except FileNotFoundError:
            raise ConfigError("instance.file", f"no such file: {path}") from None
        except InstanceFormatError as exc:
            raise ConfigError("instance.file", str(exc)) from None
        return {"file": path}
    family = raw.get("generator")
    if family not in GENERATORS:
        raise ConfigError("instance.generator", f"expected one of {sorted(GENERATORS)}, got {family!r}")
    rule = GENERATORS[family]
    allowed = {"generator", *rule["required"], *rule["optional"]}
    for key in raw:
        if key not in allowed:
            raise ConfigError(f"instance.{key}", f"unknown field for generator {family!r}")
    out: Dict[str, Any] = {"generator": family}
    for key in rule["required"]:
        if key not in raw:
            raise ConfigError(f"instance.{key}", "missing required field")
        out[key] = _int(raw[key], f"instance.{key}", 0 if key == "seed" else 1)
    for key, default in rule["optional"].items():
        out[key] = _int(raw.get(key, default), f"instance.{key}", 0 if key == "seed" else 1)
    return out


def _policies(raw) -> Tuple[PolicySpec, ...]:
    if not isinstance(raw, list) or not raw:
        raise ConfigError("policies", "expected a non-empty list")
    specs = []
    for j, entry in enumerate(raw):
        where = f"policies[{j}]"
        if isinstance(entry, str):
            entry = {"name": entry}
        if not isinstance(entry, Mapping):
            raise ConfigError(where, "expected a policy name or {name, params}")
        extra = set(entry) - {"name", "params"}
        if extra:
            raise ConfigError(f"{where}.{sorted(extra)[0]}", "unknown field")
        name = entry.get("name")
        if name not in POLICIES:
            raise ConfigError(f"{where}.name", f"expected one of {sorted(POLICIES)}, got {name!r}")
        params = entry.get("params", {})
        if not isinstance(params, Mapping):
            raise ConfigError(f"{where}.params", "expected an object")
        valid = POLICIES[name]().get_params()
        for key in params:
            if key not in valid:
                raise ConfigError(f"{where}.params.{key}", f"not a parameter of {name}")
        # serialize every default so the run is self-describing
        full = dict(valid)
        full.update(params)
        try:
            # a two-step run exercises the parameter checks done at fit time
            with warnings.catch_warnings():
                warnings.simplefilter("ignore")
                POLICIES[name](**full).fit(_PROBE, 2)
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"{where}.params", str(exc)) from None
        specs.append(PolicySpec(name, full, tuple(sorted(params))))
    return tuple(specs)


def _seeds(raw) -> Tuple[int, ...]:
    if isinstance(raw, list):
        if not raw:
            raise ConfigError("seeds", "need at least one seed")
        seeds = tuple(_int(s, f"seeds[{j}]", 0) for j, s in enumerate(raw))
        if len(set(seeds)) != len(seeds):
            raise ConfigError("seeds", "duplicate seeds")
        return seeds
    if isinstance(raw, Mapping):
        extra = set(raw) - {"base_seed", "count"}
        if extra:
            raise ConfigError(f"seeds.{sorted(extra)[0]}", "unknown field")
        base = _int(raw.get("base_seed", 0), "seeds.base_seed", 0)
        count = _int(raw.get("count"), "seeds.count", 1)
        return tuple(range(base, base + count))
    raise ConfigError("seeds", "expected a list or {base_seed, count}")


def _grid(raw):
    if raw is None or raw == "geometric":
        return raw
    if isinstance(raw, list):
        pts = [_int(t, f"grid[{j}]", 1) for j, t in enumerate(raw)]
        if any(b <= a for a, b in zip(pts, pts[1:])):
            raise ConfigError("grid", "must be strictly increasing")
        return pts
    raise ConfigError("grid", "expected null, 'geometric' or a list of time steps")


def parse_config(data: Mapping, sweep: bool = False) -> ExperimentConfig:
    if not isinstance(data, Mapping):
        raise ConfigError("config", "expected a JSON object")
    for key in data:
        if key not in TOP_LEVEL:
            raise ConfigError(key, "unknown field")
    for key in ("instance", "policies", "horizons", "seeds"):
        if key not in data:
            raise ConfigError(key, "missing required field")
    instance = _instance(data["instance"])
    horizons = data["horizons"]
    if not isinstance(horizons, list) or not horizons:
        raise ConfigError("horizons", "need at least one horizon")
    horizons = tuple(sorted({_int(T, f"horizons[{j}]", 1) for j, T in enumerate(horizons)}))
    trace_mode = data.get("trace_mode", "summary")
    if trace_mode not in TRACE_MODES:
        raise ConfigError("trace_mode", f"expected one of {list(TRACE_MODES)}, got {trace_mode!r}")
    output_dir = data.get("output_dir", "results")
    if not isinstance(output_dir, str) or not output_dir:
        raise ConfigError("output_dir", "expected a non-empty path string")
    per_seed = data.get("instance_per_seed", False)
    if not isinstance(per_seed, bool):
        raise ConfigError("instance_per_seed", "expected true or false")
    n_grid = data.get("n_grid")
    if n_grid is not None:
        if "file" in instance:
            raise ConfigError("n_grid", "needs a generated instance")
        if not isinstance(n_grid, list) or not n_grid:
            raise ConfigError("n_grid", "expected a non-empty list")
        n_grid = tuple(sorted({_int(n, f"n_grid[{j}]", 1) for j, n in enumerate(n_grid)}))
        if instance["generator"] != "uniform" and min(n_grid) < 2:
            raise ConfigError("n_grid", "lower-bound families need n >= 2")
    if sweep and len(horizons) < 3:
        raise ConfigError("horizons", "a sweep needs at least 3 horizons to fit a scaling law")
    cfg = ExperimentConfig(instance, _policies(data["policies"]), horizons, _seeds(data["seeds"]),
                           output_dir, trace_mode, _grid(data.get("grid")), n_grid, per_seed)
    for n in cfg.item_counts():
        try:
            cfg.make_instance(n, cfg.seeds[0])
        except (ValueError, KeyError) as exc:
            raise ConfigError("instance", str(exc)) from None
    return cfg


def load_config(path, sweep: bool = False) -> ExperimentConfig:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError("config", f"cannot read {path}: {exc.strerror}") from None
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError("config", f"malformed JSON at line {exc.lineno} column {exc.colno}: {exc.msg}") from None
    return parse_config(data, sweep=sweep)
