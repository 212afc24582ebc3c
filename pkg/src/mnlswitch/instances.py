"""Instance generators and the on-disk JSON format.

File format (item labels are implicit, 1..n_items in list order)::

    {"n_items": 3, "capacity": 2, "rewards": [...], "weights": [...]}
"""
from __future__ import annotations

import json
import math
import warnings
from pathlib import Path
from typing import Mapping, Union

import numpy as np

from .core import Instance, InvalidInstanceError

SCHEMA_FIELDS = ("n_items", "capacity", "rewards", "weights")


class InstanceFormatError(ValueError):
    pass


def gen_uniform_random(n: int, k: int, seed: int = 0) -> Instance:
    """Rewards and weights drawn i.i.d. from U[0, 1]."""
    if not 1 <= k <= n:
        raise InvalidInstanceError(f"need 1 <= k <= n, got n={n}, k={k}")
    rng = np.random.default_rng(seed)
    rewards = rng.random(n)
    weights = rng.random(n)
    return Instance(n, k, rewards, weights)


def gen_lowerbound_base(n: int, capacity: int = 1) -> Instance:
    """Every item has weight 1/2 and reward 1; single-slot shelf by default."""
    if n < 2:
        raise InvalidInstanceError(f"lower-bound instances need n >= 2, got {n}")
    return Instance(n, capacity, np.ones(n), np.full(n, 0.5))


def perturbation(n: int, t1: int) -> float:
    return math.sqrt(n / (24.0 * t1)) / 16.0


def gen_lowerbound_perturbed(n: int, k_item: int, t1: int, capacity: int = 1) -> Instance:
    """Base instance with item ``k_item`` (1-based) made slightly more attractive.

    The weight becomes 1/2 + sqrt(n / (24 t1)) / 16, clamped at 1.
    """
    if n < 2:
        raise InvalidInstanceError(f"lower-bound instances need n >= 2, got {n}")
    if not 1 <= k_item <= n:
        raise InvalidInstanceError(f"k_item must be in 1..{n}, got {k_item}")
    if t1 < 1:
        raise InvalidInstanceError(f"t1 must be a positive integer, got {t1}")
    weights = np.full(n, 0.5)
    w = 0.5 + perturbation(n, t1)
    if w > 1.0:
        warnings.warn(f"perturbed weight {w:.4f} exceeds 1; clamped to 1", stacklevel=2)
        w = 1.0
    weights[k_item - 1] = w
    return Instance(n, capacity, np.ones(n), weights)


def instance_from_dict(data: Mapping) -> Instance:
    if not isinstance(data, Mapping):
        raise InstanceFormatError("instance must be a JSON object")
    extra = sorted(set(data) - set(SCHEMA_FIELDS))
    if extra:
        raise InstanceFormatError(f"unknown field(s) in instance: {', '.join(extra)}")
    for name in SCHEMA_FIELDS:
        if name not in data:
            raise InstanceFormatError(f"missing field {name!r}")
    for name in ("n_items", "capacity"):
        if isinstance(data[name], bool) or not isinstance(data[name], int):
            raise InstanceFormatError(f"field {name!r} must be an integer")
    for name in ("rewards", "weights"):
        vals = data[name]
        if not isinstance(vals, list) or not all(
                isinstance(x, (int, float)) and not isinstance(x, bool) for x in vals):
            raise InstanceFormatError(f"field {name!r} must be a list of numbers")
    try:
        return Instance(data["n_items"], data["capacity"], data["rewards"], data["weights"])
    except InvalidInstanceError as exc:
        raise InstanceFormatError(str(exc)) from exc


def loads(text: str) -> Instance:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise InstanceFormatError(f"malformed JSON at line {exc.lineno}, column {exc.colno}: {exc.msg}") from exc
    return instance_from_dict(data)


def dumps(inst: Instance) -> str:
    return json.dumps(inst.to_dict(), indent=2) + "\n"


def load(path: Union[str, Path]) -> Instance:
    path = Path(path)
    try:
        return loads(path.read_text())
    except InstanceFormatError as exc:
        raise InstanceFormatError(f"{path}: {exc}") from exc


def save(inst: Instance, path: Union[str, Path]) -> None:
    Path(path).write_text(dumps(inst))
