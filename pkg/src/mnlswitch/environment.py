"""Stochastic MNL customers and the epoch-based offering routine.

Every simulated customer consumes exactly one uniform draw from the run's
stream, so a run of length T' is a prefix of a run of length T > T' with the
same seed. Anytime checkpointing relies on that.
"""
from __future__ import annotations

import bisect
import warnings
import math
from dataclasses import dataclass, field
from typing import Dict, Optional

import numpy as np

from .core import NO_PURCHASE, Assortment, Instance, choice_probabilities, expected_revenue, validate_assortment

RNG_ALGORITHM = "numpy.PCG64/uniform-blocks-4096"
_BLOCK = 4096


class HorizonExhaustedError(RuntimeError):
    pass


class UniformStream:
    """Seeded stream of U[0, 1) draws, refilled in fixed-size blocks."""

    def __init__(self, seed: int):
        self.seed = int(seed)
        self._gen = np.random.Generator(np.random.PCG64(self.seed))
        self._buf = []
        self._pos = 0
        self.consumed = 0

    def next(self) -> float:
        if self._pos == len(self._buf):
            self._buf = self._gen.random(_BLOCK).tolist()
            self._pos = 0
        u = self._buf[self._pos]
        self._pos += 1
        self.consumed += 1
        return u


@dataclass
class SimClock:
    horizon: Optional[int]
    rng_seed: int = 0
    t: int = 0

    @property
    def exhausted(self) -> bool:
        return self.horizon is not None and self.t >= self.horizon

    @property
    def remaining(self) -> float:
        return math.inf if self.horizon is None else self.horizon - self.t


@dataclass
class EpochOutcome:
    assortment: Assortment
    purchases: Dict[int, int]
    epoch_length: int
    truncated: bool
    realized_revenue: float
    t_start: int
    last_choice: int = NO_PURCHASE
    choices: list = field(default_factory=list, repr=False)


class _ChoiceTable:
    """Cumulative thresholds for drawing a choice from one offered set."""

    __slots__ = ("items", "p0", "edges", "rewards")

    def __init__(self, inst: Instance, s: Assortment):
        p = choice_probabilities(inst, s)
        self.items = s.items
        self.p0 = float(p[0])
        self.edges = list(np.cumsum(p[[i + 1 for i in s.items]]) + self.p0) if s.items else []
        self.rewards = [float(inst.rewards[i]) for i in s.items]

    def draw(self, u: float) -> int:
        if u < self.p0:
            return NO_PURCHASE
        j = min(bisect.bisect_right(self.edges, u), len(self.items) - 1)
        return self.items[j]


def _table(inst: Instance, s: Assortment) -> _ChoiceTable:
    cache = inst.__dict__.setdefault("_choice_tables", {})
    tab = cache.get(s.items)
    if tab is None:
        validate_assortment(inst, s)
        tab = cache[s.items] = _ChoiceTable(inst, s)
    return tab


def sample_choice(inst: Instance, s: Assortment, rng: UniformStream) -> int:
    """One customer's choice: an item of ``s`` or ``NO_PURCHASE``."""
    return _table(inst, s).draw(rng.next())


def run_epoch(inst: Instance, s: Assortment, clock: SimClock, rng: UniformStream,
              keep_choices: bool = False) -> EpochOutcome:
    """Offer ``s`` until the first no-purchase, or until the horizon is hit."""
    if clock.exhausted:
        raise HorizonExhaustedError(f"horizon {clock.horizon} reached at t={clock.t}")
    tab = _table(inst, s)
    rewards = inst.__dict__.setdefault("_reward_list", inst.rewards.tolist())
    t_start = clock.t + 1
    budget = clock.remaining
    purchases: Dict[int, int] = {}
    choices = []
    revenue = 0.0
    length = 0
    truncated = False
    while True:
        a = tab.draw(rng.next())
        length += 1
        if keep_choices:
            choices.append(a)
        if a == NO_PURCHASE:
            break
        purchases[a] = purchases.get(a, 0) + 1
        revenue += rewards[a]
        if length >= budget:
            truncated = True
            break
    clock.t += length
    return EpochOutcome(s, purchases, length, truncated, float(revenue), t_start, a, choices)


class Simulation:
    """One seeded run: instance, clock, random stream and trace bound together.

    Policies only talk to the environment through :meth:`explore`.
    """

    def __init__(self, inst: Instance, horizon: int, seed: int = 0, policy: str = "",
                 trace_mode: str = "epoch", optimum=None):
        from .metrics import FULL_TRACE_LIMIT, PolicyTrace
        from .optimizer import solve_theta_star

        if trace_mode == "full" and horizon > FULL_TRACE_LIMIT:
            warnings.warn(f"full traces are disabled above T={FULL_TRACE_LIMIT}; recording epochs only",
                          stacklevel=2)
            trace_mode = "epoch"
        self.inst = inst
        self.optimum = solve_theta_star(inst) if optimum is None else optimum
        self.clock = SimClock(horizon, seed)
        self.rng = UniformStream(seed)
        # regret is measured against the exact revenue of the optimal set, so
        # offering that set costs exactly zero
        self.theta_star = expected_revenue(inst, self.optimum.optimal_set)
        self.trace = PolicyTrace(inst, self.theta_star, policy, seed,
                                 self.optimum.optimal_set, trace_mode)
        self.prev: Optional[Assortment] = None
        self.n_epochs = 0

    @property
    def done(self) -> bool:
        return self.clock.exhausted

    @property
    def t(self) -> int:
        return self.clock.t

    def explore(self, s: Assortment) -> EpochOutcome:
        out = run_epoch(self.inst, s, self.clock, self.rng, keep_choices=self.trace.mode == "full")
        self.trace.record_epoch(out, self.prev)
        self.prev = s
        self.n_epochs += 1
        return out
