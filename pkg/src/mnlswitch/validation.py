"""Input validation helpers shared by the estimators and the CLI."""
from __future__ import annotations

from typing import Iterable, Mapping, Optional, Union

import numpy as np

from .core import Assortment, Instance, InvalidAssortmentError, validate_assortment

SeedLike = Union[int, np.integer, None]


def check_instance(obj: Union[Instance, Mapping]) -> Instance:
    """Accept an Instance or its JSON-style mapping and return an Instance."""
    if isinstance(obj, Instance):
        return obj
    if isinstance(obj, Mapping):
        from .instances import instance_from_dict

        return instance_from_dict(obj)
    raise TypeError(f"expected an Instance or mapping, got {type(obj).__name__}")


def check_assortment(s: Union[Assortment, Iterable[int]], inst: Instance) -> Assortment:
    if not isinstance(s, Assortment):
        s = Assortment(tuple(s))
    validate_assortment(inst, s)
    return s


def check_weights(weights, n_items: int) -> np.ndarray:
    w = np.asarray(weights, dtype=float)
    if w.shape != (n_items,):
        raise ValueError(f"weight vector must have {n_items} entries, got shape {w.shape}")
    if not np.all(np.isfinite(w)) or (w < 0).any():
        raise ValueError("weights must be finite and nonnegative")
    return w


def check_horizon(horizon) -> int:
    if isinstance(horizon, bool) or not isinstance(horizon, (int, np.integer)) or horizon < 1:
        raise ValueError(f"horizon must be a positive integer, got {horizon!r}")
    return int(horizon)


def check_seed(seed: SeedLike) -> int:
    if seed is None:
        return 0
    if isinstance(seed, bool) or not isinstance(seed, (int, np.integer)) or not 0 <= seed < 2**64:
        raise ValueError(f"seed must be an integer in [0, 2**64), got {seed!r}")
    return int(seed)


def check_is_fitted(estimator, attribute: str = "trace_") -> None:
    if not hasattr(estimator, attribute):
        raise RuntimeError(f"{type(estimator).__name__} is not fitted yet; call fit() first")


__all__ = [
    "InvalidAssortmentError",
    "check_assortment",
    "check_horizon",
    "check_instance",
    "check_is_fitted",
    "check_seed",
    "check_weights",
]
