"""Regret and switching-cost accounting.

A trace stores one row per epoch (an epoch offers a single assortment, so
every cumulative quantity is affine inside it) and, in ``full`` mode, one row
per time step. Cumulative regret inside an epoch is always computed as
``base + k * gap`` so that step-level and epoch-level accounting agree to the
last bit.
"""
from __future__ import annotations

import bisect
import csv
import math
import warnings
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np

from .core import EMPTY, NO_PURCHASE, Assortment, Instance, expected_revenue, switch_deltas

CSV_HEADER = ["t", "policy", "seed", "cum_regret", "asst_switches", "item_switches", "choice", "reward"]
TRACE_MODES = ("full", "epoch", "summary")
FULL_TRACE_LIMIT = 10**6


class FitError(ValueError):
    pass


@dataclass
class TraceHeader:
    instance_hash: str
    policy: str
    seed: int
    theta_star: float
    optimal_set: Assortment
    n_items: int
    capacity: int

    def to_dict(self) -> dict:
        return {
            "instance_hash": self.instance_hash,
            "policy": self.policy,
            "seed": self.seed,
            "theta_star": self.theta_star,
            "optimal_set": self.optimal_set.to_external(),
            "n_items": self.n_items,
            "capacity": self.capacity,
        }


class PolicyTrace:
    """Per-run record of offered sets, choices, regret and switch counts."""

    def __init__(self, inst: Instance, theta_star: float, policy: str = "", seed: int = 0,
                 optimal_set: Assortment = EMPTY, mode: str = "epoch"):
        if mode not in TRACE_MODES:
            raise ValueError(f"trace mode must be one of {TRACE_MODES}, got {mode!r}")
        self.inst = inst
        self.mode = mode
        self.header = TraceHeader(inst.digest(), policy, int(seed), float(theta_star), optimal_set,
                                  inst.n_items, inst.capacity)
        self.switch_cap = min(2 * inst.capacity, inst.n_items)
        # epoch columns
        self.starts: List[int] = []
        self.lengths: List[int] = []
        self.sets: List[Assortment] = []
        self.gaps: List[float] = []
        self.bases: List[float] = []
        self.asst: List[int] = []
        self.item: List[int] = []
        self.last_choice: List[int] = []
        self.last_reward: List[float] = []
        self.revenue: List[float] = []
        # step columns, full mode only
        self.steps: Dict[str, list] = {k: [] for k in ("t", "cum_regret", "asst", "item", "choice", "reward")}
        self.t = 0
        self._open = False
        self._gap_cache: Dict[tuple, float] = {}
        self._rewards = inst.rewards.tolist()

    # -- accounting -------------------------------------------------------
    def gap(self, s: Assortment) -> float:
        g = self._gap_cache.get(s.items)
        if g is None:
            g = self._gap_cache[s.items] = self.header.theta_star - expected_revenue(self.inst, s)
        return g

    @property
    def cum_regret(self) -> float:
        if not self.lengths:
            return 0.0
        return self.bases[-1] + self.lengths[-1] * self.gaps[-1]

    @property
    def asst_switches(self) -> int:
        return self.asst[-1] if self.asst else 0

    @property
    def item_switches(self) -> int:
        return self.item[-1] if self.item else 0

    def _open_epoch(self, t: int, s_prev: Optional[Assortment], s_cur: Assortment) -> None:
        da, di = (0, 0) if s_prev is None else switch_deltas(s_prev, s_cur)
        self.bases.append(self.cum_regret)
        self.asst.append(self.asst_switches + da)
        self.item.append(self.item_switches + di)
        self.starts.append(t)
        self.lengths.append(0)
        self.sets.append(s_cur)
        self.gaps.append(self.gap(s_cur))
        self.last_choice.append(NO_PURCHASE)
        self.last_reward.append(0.0)
        self.revenue.append(0.0)
        self._open = True

    def record_step(self, t: int, s_prev: Optional[Assortment], s_cur: Assortment, choice: int) -> None:
        """Append time step ``t``; a no-purchase closes the current epoch."""
        if t != self.t + 1:
            raise ValueError(f"steps must be recorded consecutively: expected t={self.t + 1}, got {t}")
        if not self._open or s_cur != self.sets[-1]:
            self._open_epoch(t, s_prev, s_cur)
        reward = 0.0 if choice == NO_PURCHASE else self._rewards[choice]
        self.lengths[-1] += 1
        self.last_choice[-1] = choice
        self.last_reward[-1] = reward
        self.revenue[-1] += reward
        self.t = t
        if self.mode == "full":
            self._push_step(t, self.bases[-1] + self.lengths[-1] * self.gaps[-1], choice, reward)
        if choice == NO_PURCHASE:
            self._open = False

    def record_epoch(self, outcome, s_prev: Optional[Assortment]) -> None:
        """Bulk equivalent of calling :meth:`record_step` for every step of an epoch."""
        if outcome.t_start != self.t + 1:
            raise ValueError(f"epoch starts at t={outcome.t_start}, expected {self.t + 1}")
        s = outcome.assortment
        self._open_epoch(outcome.t_start, s_prev, s)
        n = outcome.epoch_length
        self.lengths[-1] = n
        self.last_choice[-1] = outcome.last_choice
        self.last_reward[-1] = 0.0 if outcome.last_choice == NO_PURCHASE else self._rewards[outcome.last_choice]
        self.revenue[-1] = outcome.realized_revenue
        self.t = outcome.t_start + n - 1
        self._open = outcome.truncated
        if self.mode == "full":
            if len(outcome.choices) != n:
                raise ValueError("full traces need per-step choices (run_epoch(keep_choices=True))")
            base, g = self.bases[-1], self.gaps[-1]
            for k, a in enumerate(outcome.choices, start=1):
                self._push_step(outcome.t_start + k - 1, base + k * g, a,
                                0.0 if a == NO_PURCHASE else self._rewards[a])

    def _push_step(self, t, cum_regret, choice, reward):
        st = self.steps
        st["t"].append(t)
        st["cum_regret"].append(cum_regret)
        st["asst"].append(self.asst[-1])
        st["item"].append(self.item[-1])
        st["choice"].append(choice)
        st["reward"].append(reward)

    # -- queries ----------------------------------------------------------
    def value_at(self, t: int) -> Tuple[float, int, int]:
        """(cumulative regret, assortment switches, item switches) after step ``t``."""
        if t < 1 or t > self.t:
            raise ValueError(f"t={t} outside recorded range 1..{self.t}")
        j = bisect.bisect_right(self.starts, t) - 1
        k = t - self.starts[j] + 1
        return self.bases[j] + k * self.gaps[j], self.asst[j], self.item[j]

    def final(self) -> Tuple[float, int, int]:
        return (self.cum_regret, self.asst_switches, self.item_switches)

    def epoch_regret_total(self) -> float:
        """Regret re-derived as a sum over epochs of length * gap."""
        return math.fsum(n * g for n, g in zip(self.lengths, self.gaps))

    def switch_relation_holds(self) -> bool:
        """Assortment vs item switch sandwich on every recorded row."""
        cap = self.switch_cap
        return all(a <= i <= cap * a for a, i in zip(self.asst, self.item))

    def rows(self) -> Iterable[list]:
        """CSV body: one row per step (full) or per epoch at its last step (epoch)."""
        h = self.header
        if self.mode == "full":
            st = self.steps
            for t, r, a, i, c, w in zip(st["t"], st["cum_regret"], st["asst"], st["item"],
                                          st["choice"], st["reward"]):
                yield [t, h.policy, h.seed, repr(r), a, i, c + 1, repr(w)]
        elif self.mode == "epoch":
            for j in range(len(self.starts)):
                t = self.starts[j] + self.lengths[j] - 1
                r = self.bases[j] + self.lengths[j] * self.gaps[j]
                yield [t, h.policy, h.seed, repr(r), self.asst[j], self.item[j],
                       self.last_choice[j] + 1, repr(self.last_reward[j])]


def record_step(trace: PolicyTrace, t: int, s_prev: Optional[Assortment], s_cur: Assortment,
                choice: int) -> None:
    trace.record_step(t, s_prev, s_cur, choice)


@dataclass
class CompactTrace:
    """Cumulative values on a grid of time steps, carried forward."""

    header: TraceHeader
    rows: List[Tuple[int, float, int, int]] = field(default_factory=list)

    @property
    def t(self) -> int:
        return self.rows[-1][0] if self.rows else 0

    def value_at(self, t: int) -> Tuple[float, int, int]:
        ts = [r[0] for r in self.rows]
        j = bisect.bisect_right(ts, t) - 1
        if j < 0:
            raise ValueError(f"t={t} precedes the first grid point")
        return self.rows[j][1:]


def downsample(trace, grid: Sequence[int]) -> CompactTrace:
    grid = [int(t) for t in grid]
    if any(b <= a for a, b in zip(grid, grid[1:])):
        raise ValueError("grid must be strictly increasing")
    kept = [t for t in grid if 1 <= t <= trace.t]
    if len(kept) < len(grid):
        warnings.warn(f"downsample grid truncated to the recorded range 1..{trace.t}", stacklevel=2)
    return CompactTrace(trace.header, [(t, *trace.value_at(t)) for t in kept])


def geometric_grid(horizon: int, base: int = 2) -> List[int]:
    grid, t = [], 1
    while t <= horizon:
        grid.append(t)
        t *= base
    if grid[-1] != horizon:
        grid.append(horizon)
    return grid


def write_csv(path, traces: Iterable[PolicyTrace]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(CSV_HEADER)
        for tr in traces:
            w.writerows(tr.rows())


# -- scaling-law fits --------------------------------------------------------

REGRESSORS = {
    "log": lambda T: np.log2(T),
    "loglog": lambda T: np.log2(np.log2(T)),
    "sqrt": lambda T: np.sqrt(T),
    "linear": lambda T: T,
}


@dataclass(frozen=True)
class ScalingFit:
    model: str
    coefficient: float
    intercept: float
    r2: float
    r2_by_model: Dict[str, float]

    def to_dict(self) -> dict:
        return {"model": self.model, "coefficient": self.coefficient, "intercept": self.intercept,
                "r2": self.r2, "r2_by_model": dict(self.r2_by_model)}


def fit_scaling(points: Sequence[Tuple[float, float]]) -> ScalingFit:
    """Least-squares fit of value = a + c * f(T) for each growth model; keep the best r^2."""
    if len(points) < 3:
        raise FitError(f"need at least 3 points, got {len(points)}")
    T = np.array([p[0] for p in points], dtype=float)
    y = np.array([p[1] for p in points], dtype=float)
    if np.any(np.diff(T) <= 0):
        raise FitError("horizons must be strictly increasing")
    if T[0] <= 1:
        raise FitError("horizons must exceed 1 for the log-log regressor")
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    if ss_tot == 0.0:
        raise FitError("values are constant; r^2 is undefined")
    fits = {}
    for name, f in REGRESSORS.items():
        x = f(T)
        A = np.column_stack([np.ones_like(x), x])
        (a, c), *_ = np.linalg.lstsq(A, y, rcond=None)
        resid = y - (a + c * x)
        fits[name] = (float(c), float(a), 1.0 - float(resid @ resid) / ss_tot)
    best = max(fits, key=lambda m: fits[m][2])
    c, a, r2 = fits[best]
    return ScalingFit(best, c, a, r2, {m: v[2] for m, v in fits.items()})


def summarize(values: Sequence[float]) -> dict:
    arr = np.asarray(values, dtype=float)
    std = float(arr.std(ddof=1)) if arr.size > 1 else 0.0
    return {"mean": float(arr.mean()), "std": std}
