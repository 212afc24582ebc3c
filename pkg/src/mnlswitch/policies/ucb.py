"""Epoch-based UCB policies: the per-epoch-update baseline and AT-DUCB."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import List

from ..environment import EpochOutcome, Simulation
from ..optimizer import solve_theta_star
from .base import BasePolicy, is_power_of_two


def ucb_radius_atducb(mean: float, n_epochs: int, epoch_index: int, n_items: int) -> float:
    """Candidate UCB: mean + sqrt(48 mean L / T_i) + 48 L / T_i, L = ln(sqrt(N) * epoch + 1).

    Returns the full candidate value, not only the radius.
    """
    if n_epochs < 1:
        raise ValueError("the UCB needs at least one observed epoch (T_i >= 1)")
    log_term = math.log(math.sqrt(n_items) * epoch_index + 1.0)
    return mean + math.sqrt(48.0 * mean * log_term / n_epochs) + 48.0 * log_term / n_epochs


@dataclass
class EstimatorState:
    """Per-item epoch counts, purchase totals, means and (non-increasing) UCBs."""

    n_items: int
    epochs: List[int] = field(default_factory=list)
    purchases: List[int] = field(default_factory=list)
    means: List[float] = field(default_factory=list)
    ucb: List[float] = field(default_factory=list)
    recomputations: List[int] = field(default_factory=list)
    epoch_index: int = 0

    def __post_init__(self):
        n = self.n_items
        self.epochs = self.epochs or [0] * n
        self.purchases = self.purchases or [0] * n
        self.means = self.means or [0.0] * n
        self.ucb = self.ucb or [1.0] * n
        self.recomputations = self.recomputations or [0] * n


class _EpochUCB(BasePolicy):
    deferred = True

    def __init__(self, track_ucb=False):
        self.track_ucb = track_ucb

    @property
    def ucb_(self):
        return list(self.state_.ucb)

    def begin(self, sim: Simulation) -> None:
        self.state_ = EstimatorState(sim.inst.n_items)
        self.n_assortment_computations_ = 0
        self.ucb_history_ = []
        self._current = None

    def step(self, sim: Simulation) -> EpochOutcome:
        st = self.state_
        if self._current is None:
            self._current = solve_theta_star(sim.inst, st.ucb).optimal_set
            self.n_assortment_computations_ += 1
        s = self._current
        out = sim.explore(s)
        st.epoch_index += 1
        changed = False
        n = st.n_items
        for i in s.items:
            st.purchases[i] += out.purchases.get(i, 0)
            st.epochs[i] += 1
            if self.deferred and not is_power_of_two(st.epochs[i]):
                continue
            st.means[i] = st.purchases[i] / st.epochs[i]
            cand = ucb_radius_atducb(st.means[i], st.epochs[i], st.epoch_index, n)
            st.recomputations[i] += 1
            if cand < st.ucb[i]:
                st.ucb[i] = cand
                changed = True
            if self.track_ucb:
                self.ucb_history_.append((st.epoch_index, i, st.ucb[i]))
        if changed:
            self._current = None
        return out


class ATDUCB(_EpochUCB):
    """Anytime deferred-update UCB: item i's UCB is refreshed only when its
    epoch count reaches a power of two."""

    name = "at_ducb"
    deferred = True


class BaselineUCB(_EpochUCB):
    """Reference epoch UCB policy that refreshes every offered item's UCB after
    every epoch. High switching cost; used as a comparator."""

    name = "baseline_ucb"
    deferred = False
