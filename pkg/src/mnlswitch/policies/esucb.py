"""Exponential Stride UCB (ESUCB).

The outer loop keeps an upper estimate ``theta_hat`` of the optimal revenue
and shrinks a stride ``eps`` by 2/3 per iteration. Each iteration runs Check,
which offers sets maximizing the linear objective sum v_hat_i (r_i - theta)
at a fixed theta, so the offered set moves only when a UCB moves.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import List, Optional

from ..environment import Simulation
from ..optimizer import static_linear_argmax
from .base import BasePolicy, is_power_of_two
from .ucb import EstimatorState

DEFAULT_C1 = 44840.0
DEFAULT_C2 = 688.0
DEFAULT_C3 = 21732.0
STRIDE_RATIO = 2.0 / 3.0
INITIAL_STRIDE = 1.0 / 3.0


def default_tmax(n_items: int, horizon: int, delta: float, eps: float, c1: float = DEFAULT_C1) -> float:
    """c1 * N * ln^3(N T / delta) / eps^2."""
    return c1 * n_items * math.log(n_items * horizon / delta) ** 3 / eps ** 2


def scale_for_tmax(n_items: int, horizon: int, delta: Optional[float] = None,
                   fraction: float = 0.125, c1: float = DEFAULT_C1) -> float:
    """Constant scale making the first Check budget equal ``fraction * horizon``."""
    delta = 1.0 / horizon if delta is None else delta
    return fraction * horizon / default_tmax(n_items, horizon, delta, INITIAL_STRIDE, c1)


@dataclass
class CheckRecord:
    tau: int
    theta_l: float
    theta_r: float
    t_max: float
    t_start: int
    steps: int = 0
    result: Optional[bool] = None
    completed: bool = False
    ucb_updates: int = 0
    ucb_changes: int = 0
    item_switches: int = 0
    branch_flips: int = 0
    fixed_branch_switches: int = 0
    fixed_branch_excess: int = 0


@dataclass
class OuterRecord:
    tau: int
    theta_hat: float
    eps: float
    t_max: float


@dataclass
class ESUCBState:
    theta_hat: float = 1.0
    eps: float = INITIAL_STRIDE
    tau: int = 0
    estimator: Optional[EstimatorState] = None
    outer: List[OuterRecord] = field(default_factory=list)
    checks: List[CheckRecord] = field(default_factory=list)


class ESUCB(BasePolicy):
    """Exponential Stride UCB.

    Parameters
    ----------
    delta : float or None
        Confidence parameter; ``None`` means 1/T.
    c1, c2, c3 : float
        Constants of the Check budget, the optimistic revenue average and
        the bonus term.
    constant_scale : float
        Common multiplier applied to c1, c2 and c3.
    tmax_fraction : float or None
        If set, overrides ``constant_scale`` so that the first Check budget
        is this fraction of the horizon.
    reset_counters : bool
        Start each Check from fresh estimators. ``False`` keeps T_i, n_i and
        the UCBs across Check calls.
    check_log : {"natural", "base2"}
        Base of the logarithm in the Check UCB radius.
    """

    name = "esucb"
    anytime = False

    def __init__(self, delta=None, c1=DEFAULT_C1, c2=DEFAULT_C2, c3=DEFAULT_C3, constant_scale=1.0,
                 tmax_fraction=None, reset_counters=True, check_log="natural"):
        self.delta = delta
        self.c1 = c1
        self.c2 = c2
        self.c3 = c3
        self.constant_scale = constant_scale
        self.tmax_fraction = tmax_fraction
        self.reset_counters = reset_counters
        self.check_log = check_log

    @property
    def ucb_(self):
        return list(self.state_.estimator.ucb)

    @property
    def theta_hat_(self) -> float:
        return self.state_.theta_hat

    def _run(self, sim: Simulation) -> None:
        self.begin(sim)
        while not sim.done:
            self.outer_step(sim)

    def begin(self, sim: Simulation) -> None:
        if self.check_log not in ("natural", "base2"):
            raise ValueError(f"check_log must be 'natural' or 'base2', got {self.check_log!r}")
        N, T = sim.inst.n_items, sim.clock.horizon
        self.delta_ = 1.0 / T if self.delta is None else float(self.delta)
        if not 0.0 < self.delta_ < 1.0 + 1e-12:
            raise ValueError(f"delta must lie in (0, 1], got {self.delta_}")
        if self.tmax_fraction is not None:
            self.scale_ = scale_for_tmax(N, T, self.delta_, self.tmax_fraction, self.c1)
        else:
            self.scale_ = float(self.constant_scale)
        self.c1_ = self.c1 * self.scale_
        self.c2_ = self.c2 * self.scale_
        self.c3_ = self.c3 * self.scale_
        self.log3_ = math.log(N * T / self.delta_) ** 3
        log = math.log if self.check_log == "natural" else math.log2
        self.check_log_term_ = log(N * T / self.delta_ + 1.0)
        self.state_ = ESUCBState(estimator=EstimatorState(N))

    def t_max(self, eps: float) -> float:
        return self.c1_ * self.instance_.n_items * self.log3_ / eps ** 2

    def outer_step(self, sim: Simulation) -> Optional[bool]:
        """One outer iteration; returns the Check verdict, or None if the horizon cut it short."""
        st = self.state_
        st.tau += 1
        eps = st.eps
        t_max = self.c1_ * sim.inst.n_items * self.log3_ / eps ** 2
        st.outer.append(OuterRecord(st.tau, st.theta_hat, eps, t_max))
        verdict = self.check(sim, st.theta_hat - 3.0 * eps, st.theta_hat - eps, t_max)
        if verdict is None:
            return None
        if verdict:
            st.theta_hat -= eps
        st.eps = STRIDE_RATIO * eps
        return verdict

    def check(self, sim: Simulation, theta_l: float, theta_r: float, t_max: float) -> Optional[bool]:
        """Test whether revenue ``theta_r`` looks unattainable.

        Returns ``b`` once ``t_max`` steps have elapsed, or ``None`` if the
        horizon ends the run first.
        """
        st = self.state_
        inst = sim.inst
        N, K = inst.n_items, inst.capacity
        rewards = inst.rewards.tolist()
        if self.reset_counters:
            st.estimator = EstimatorState(N)
        est = st.estimator
        rec = CheckRecord(st.tau, theta_l, theta_r, t_max, sim.t + 1)
        st.checks.append(rec)
        bonus = self.c2_ * math.sqrt(N * t_max * self.log3_) + self.c3_ * N * self.log3_
        L = self.check_log_term_
        rho, rho_hat, b, t = 0.0, 1.0, False, 0
        prev = None
        prev_low = None
        changes_before = rec.ucb_changes
        while True:
            low = rho_hat < theta_r
            if low:
                b = True
            s = static_linear_argmax(est.ucb, rewards, theta_l if low else theta_r, K)
            if prev is not None:
                d = len(set(prev.items).symmetric_difference(s.items))
                rec.item_switches += d
                if low != prev_low:
                    rec.branch_flips += 1
                else:
                    # one UCB decrease moves at most one item in and one out
                    rec.fixed_branch_switches += d
                    rec.fixed_branch_excess += max(0, d - 2 * (rec.ucb_changes - changes_before))
            prev, prev_low = s, low
            changes_before = rec.ucb_changes
            out = sim.explore(s)
            t += out.epoch_length
            if not low:
                rho += out.realized_revenue
                rho_hat = (rho + bonus) / t
            if sim.done:
                self._fold(est, s, out, L, rec)
                rec.steps, rec.result = t, b
                return None
            if t >= t_max:
                rec.steps, rec.result, rec.completed = t, b, True
                return b
            self._fold(est, s, out, L, rec)

    def _fold(self, est: EstimatorState, s, out, L: float, rec: CheckRecord) -> None:
        for i in s.items:
            est.purchases[i] += out.purchases.get(i, 0)
            est.epochs[i] += 1
            if is_power_of_two(est.epochs[i]):
                Ti = est.epochs[i]
                mean = est.means[i] = est.purchases[i] / Ti
                cand = mean + math.sqrt(196.0 * mean * L / Ti) + 292.0 * L / Ti
                est.recomputations[i] += 1
                rec.ucb_updates += 1
                if cand < est.ucb[i]:
                    est.ucb[i] = cand
                    rec.ucb_changes += 1


class ESUCBNoReset(ESUCB):
    """ESUCB variant that keeps the per-item counters across Check calls."""

    name = "esucb_noreset"

    def __init__(self, delta=None, c1=DEFAULT_C1, c2=DEFAULT_C2, c3=DEFAULT_C3, constant_scale=1.0,
                 tmax_fraction=None, reset_counters=False, check_log="natural"):
        super().__init__(delta, c1, c2, c3, constant_scale, tmax_fraction, reset_counters, check_log)
