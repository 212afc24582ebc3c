"""Deferred-update UCB for a known horizon (FH-DUCB).

Each item's timeline is cut into stages; a stage ends when its epoch count
passes a threshold that grows with the square root of the horizon times the
epochs already seen. After ``tau0`` stages the threshold also scales with
1 / UCB, so items that sell little are left alone for longer.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import List

from ..environment import EpochOutcome, Simulation
from ..optimizer import solve_theta_star
from .base import BasePolicy


def fh_tau0(horizon: int, n_items: int) -> int:
    """ceil(log2 log2 (T / N) + 1), floored at 1 when T / N <= 2."""
    ratio = horizon / n_items
    if ratio <= 2.0:
        return 1
    return max(1, math.ceil(math.log2(math.log2(ratio)) + 1.0))


@dataclass
class FHState:
    n_items: int
    horizon: int
    tau0: int
    stage: List[int] = field(default_factory=list)
    stage_epochs: List[int] = field(default_factory=list)
    prior_epochs: List[int] = field(default_factory=list)
    prior_purchases: List[int] = field(default_factory=list)
    stage_purchases: List[int] = field(default_factory=list)
    ucb: List[float] = field(default_factory=list)
    ucb_at_tau0: List[float] = field(default_factory=list)

    def __post_init__(self):
        n = self.n_items
        self.stage = self.stage or [1] * n
        self.stage_epochs = self.stage_epochs or [0] * n
        self.prior_epochs = self.prior_epochs or [0] * n
        self.prior_purchases = self.prior_purchases or [0] * n
        self.stage_purchases = self.stage_purchases or [0] * n
        self.ucb = self.ucb or [1.0] * n
        # the UCB at stage tau0 is known once stage tau0 starts; NaN before
        self.ucb_at_tau0 = self.ucb_at_tau0 or [1.0 if self.tau0 == 1 else math.nan] * n
        self.log_term = math.log(math.sqrt(n) * float(self.horizon) ** 2 + 1.0)


def fh_condition(state: FHState, i: int) -> bool:
    """Whether item ``i``'s current stage is complete."""
    T, N = state.horizon, state.n_items
    if state.stage[i] < state.tau0:
        return state.stage_epochs[i] >= 1.0 + math.sqrt(T * state.prior_epochs[i] / N)
    if not state.ucb_at_tau0[i] > 1.0 / math.sqrt(N * T):
        return False
    v = state.ucb[i]
    if v <= 0.0:
        return False
    return state.stage_epochs[i] >= 1.0 + math.sqrt(T * state.prior_epochs[i] / (N * v))


def fh_update(state: FHState, i: int) -> None:
    """Close item ``i``'s stage and refresh its UCB with the horizon-wide log term."""
    state.stage[i] += 1
    state.prior_epochs[i] += state.stage_epochs[i]
    state.prior_purchases[i] += state.stage_purchases[i]
    state.stage_epochs[i] = 0
    state.stage_purchases[i] = 0
    n_prior = state.prior_epochs[i]
    mean = state.prior_purchases[i] / n_prior
    L = state.log_term
    cand = mean + math.sqrt(48.0 * mean * L / n_prior) + 48.0 * L / n_prior
    state.ucb[i] = min(state.ucb[i], cand)
    if state.stage[i] == state.tau0:
        state.ucb_at_tau0[i] = state.ucb[i]


class FHDUCB(BasePolicy):
    """Fixed-horizon deferred-update UCB. ``fit`` binds it to one horizon."""

    name = "fh_ducb"
    anytime = False

    def __init__(self, track_ucb=False):
        self.track_ucb = track_ucb

    @property
    def ucb_(self):
        return list(self.state_.ucb)

    @property
    def total_stages_(self) -> int:
        return sum(self.state_.stage)

    def begin(self, sim: Simulation) -> None:
        T, N = sim.clock.horizon, sim.inst.n_items
        if T < N ** 4:
            warnings.warn(f"FH-DUCB guarantees assume T >= N^4 (T={T}, N={N})", stacklevel=3)
        self.state_ = FHState(N, T, fh_tau0(T, N))
        self.n_updates_ = 0
        self.ucb_history_ = []
        self._current = solve_theta_star(sim.inst, self.state_.ucb).optimal_set
        self.n_assortment_computations_ = 1

    def step(self, sim: Simulation) -> EpochOutcome:
        st = self.state_
        fired = [i for i in range(st.n_items) if fh_condition(st, i)]
        if fired:
            for i in fired:
                fh_update(st, i)
                if self.track_ucb:
                    self.ucb_history_.append((sim.n_epochs + 1, i, st.ucb[i]))
            self.n_updates_ += len(fired)
            self._current = solve_theta_star(sim.inst, st.ucb).optimal_set
            self.n_assortment_computations_ += 1
        s = self._current
        out = sim.explore(s)
        for i in s.items:
            st.stage_purchases[i] += out.purchases.get(i, 0)
            st.stage_epochs[i] += 1
        return out
