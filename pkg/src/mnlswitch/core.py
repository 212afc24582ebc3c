"""MNL choice model: problem instances, assortments and revenue arithmetic.

Item indices are 0-based inside the package. Everything that leaves the
process (JSON, CSV, CLI output) uses 1-based labels, see
:meth:`Assortment.to_external`.
"""
from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence

import numpy as np

NO_PURCHASE = -1


class InvalidInstanceError(ValueError):
    pass


class InvalidAssortmentError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class Instance:
    """An MNL bandit instance with ``n_items`` items and capacity ``capacity``.

    The no-purchase option always has weight 1.
    """

    n_items: int
    capacity: int
    rewards: np.ndarray
    weights: np.ndarray
    no_purchase_weight: float = field(default=1.0, init=False)

    def __post_init__(self):
        n, k = self.n_items, self.capacity
        if isinstance(n, bool) or not isinstance(n, (int, np.integer)) or n < 1:
            raise InvalidInstanceError(f"n_items must be a positive integer, got {n!r}")
        if isinstance(k, bool) or not isinstance(k, (int, np.integer)) or not 1 <= k <= n:
            raise InvalidInstanceError(f"capacity must satisfy 1 <= capacity <= n_items, got {k!r}")
        object.__setattr__(self, "n_items", int(n))
        object.__setattr__(self, "capacity", int(k))
        for name in ("rewards", "weights"):
            arr = np.array(getattr(self, name), dtype=float)
            if arr.shape != (n,):
                raise InvalidInstanceError(f"{name} must have exactly {n} entries, got shape {arr.shape}")
            if not np.all(np.isfinite(arr)) or arr.min() < 0.0 or arr.max() > 1.0:
                raise InvalidInstanceError(f"{name} entries must lie in [0, 1]")
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    def to_dict(self) -> dict:
        return {
            "n_items": self.n_items,
            "capacity": self.capacity,
            "rewards": [float(x) for x in self.rewards],
            "weights": [float(x) for x in self.weights],
        }

    def digest(self) -> str:
        payload = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(payload.encode()).hexdigest()[:16]

    def __eq__(self, other):
        if not isinstance(other, Instance):
            return NotImplemented
        return (
            self.n_items == other.n_items
            and self.capacity == other.capacity
            and np.array_equal(self.rewards, other.rewards)
            and np.array_equal(self.weights, other.weights)
        )

    def __hash__(self):
        return hash(self.digest())

    def __repr__(self):
        return f"Instance(n_items={self.n_items}, capacity={self.capacity}, digest={self.digest()})"


@dataclass(frozen=True, order=True)
class Assortment:
    """A canonical (sorted, duplicate-free) set of 0-based item indices."""

    items: tuple = ()

    def __post_init__(self):
        items = tuple(sorted(int(i) for i in self.items))
        if any(a == b for a, b in zip(items, items[1:])):
            raise InvalidAssortmentError(f"duplicate items in {items}")
        object.__setattr__(self, "items", items)

    @classmethod
    def from_external(cls, labels: Iterable[int]) -> "Assortment":
        return cls(tuple(int(x) - 1 for x in labels))

    def to_external(self) -> list:
        return [i + 1 for i in self.items]

    def __iter__(self):
        return iter(self.items)

    def __len__(self):
        return len(self.items)

    def __contains__(self, i):
        return i in self.items

    def __str__(self):
        return "{" + ",".join(str(i) for i in self.to_external()) + "}"


EMPTY = Assortment()


def validate_assortment(inst: Instance, s: Assortment) -> None:
    if len(s) > inst.capacity:
        raise InvalidAssortmentError(f"assortment {s} exceeds capacity {inst.capacity}")
    if s.items and (s.items[0] < 0 or s.items[-1] >= inst.n_items):
        raise InvalidAssortmentError(f"assortment {s} has an item outside 1..{inst.n_items}")


def choice_probabilities(inst: Instance, s: Assortment) -> np.ndarray:
    """Return the N+1 choice probabilities; entry 0 is the no-purchase option."""
    validate_assortment(inst, s)
    p = np.zeros(inst.n_items + 1)
    idx = np.fromiter(s.items, dtype=int, count=len(s))
    denom = 1.0 + inst.weights[idx].sum()
    p[0] = 1.0 / denom
    p[idx + 1] = inst.weights[idx] / denom
    return p


def expected_revenue(inst: Instance, s: Assortment, weights: Optional[Sequence[float]] = None) -> float:
    """R(S, w) = sum_{i in S} r_i w_i / (1 + sum_{j in S} w_j).

    ``weights`` overrides the true preference weights, e.g. with a UCB vector.
    """
    validate_assortment(inst, s)
    w = inst.weights if weights is None else weights
    num = 0.0
    den = 1.0
    r = inst.rewards
    for i in s.items:
        num += r[i] * w[i]
        den += w[i]
    return float(num / den)


def switch_deltas(prev: Assortment, nxt: Assortment) -> tuple:
    """(assortment switch indicator, item switch count) between consecutive sets."""
    if prev.items == nxt.items:
        return 0, 0
    return 1, len(set(prev.items).symmetric_difference(nxt.items))
