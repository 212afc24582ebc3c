"""Exact capacitated assortment optimization under the MNL model.

The revenue-maximizing set is found through the fixed point of

    G(theta) = R(S_theta, w),   S_theta = argmax_{|S| <= K} sum_{i in S} w_i (r_i - theta)

which is unique and equals the optimal revenue. Every argmax breaks ties by
minimizing sum_{i in S} 2**i, so the returned set is a deterministic function
of its inputs.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Optional, Sequence

from .core import Assortment, Instance, expected_revenue

DEFAULT_TOLERANCE = 1e-12
MAX_BISECTION_STEPS = 200
REVENUE_TIE_BAND = 1e-12
MAX_ENUMERATION_ITEMS = 22


class ParameterError(ValueError):
    pass


class EnumerationRefusedError(ValueError):
    pass


@dataclass(frozen=True)
class FixedPointResult:
    theta_star: float
    optimal_set: Assortment
    iterations: int
    residual: float


def tie_key(items) -> int:
    """Sum of 2**i over the set; smaller wins among equal objective values."""
    return sum(1 << i for i in items)


def static_linear_argmax(weights: Sequence[float], rewards: Sequence[float], theta: float,
                         capacity: int) -> Assortment:
    """Maximize sum_{i in S} w_i (r_i - theta) over |S| <= capacity.

    Keeps the items with strictly positive gain, best first, lowest index
    first among equal gains, up to ``capacity`` of them.
    """
    gains = [(-(w * (r - theta)), i) for i, (w, r) in enumerate(zip(weights, rewards))]
    picked = sorted(g for g in gains if g[0] < 0.0)[:capacity]
    return Assortment(tuple(i for _, i in picked))


def _linear_value(weights, rewards, theta, s: Assortment) -> float:
    return sum(weights[i] * (rewards[i] - theta) for i in s.items)


def g_value(inst: Instance, theta: float, weights: Optional[Sequence[float]] = None) -> float:
    """G(theta) = R(S_theta, w); zero when S_theta is empty."""
    w = inst.weights if weights is None else weights
    s = static_linear_argmax(w, inst.rewards, theta, inst.capacity)
    if not s.items:
        return 0.0
    return expected_revenue(inst, s, w)


def solve_theta_star(inst: Instance, weights: Optional[Sequence[float]] = None,
                     tolerance: float = DEFAULT_TOLERANCE) -> FixedPointResult:
    """Bisection on theta in [0, max r] for the fixed point of G.

    For theta below the optimum the best linear value exceeds theta, above
    it the value falls short, so the sign of the probe says which half keeps
    the fixed point.
    """
    if not tolerance > 0:
        raise ParameterError(f"tolerance must be positive, got {tolerance!r}")
    w = [float(x) for x in (inst.weights if weights is None else weights)]
    r = [float(x) for x in inst.rewards]
    k = inst.capacity
    lo, hi = 0.0, max(r)
    steps = 0
    while hi - lo > tolerance and steps < MAX_BISECTION_STEPS:
        mid = 0.5 * (lo + hi)
        s = static_linear_argmax(w, r, mid, k)
        if _linear_value(w, r, mid, s) > mid:
            lo = mid
        else:
            hi = mid
        steps += 1
    theta = 0.5 * (lo + hi)
    # hi never drops below the fixed point, so reading the set there leaves out
    # items whose reward equals the optimum (they add nothing but raise the tie key)
    s = static_linear_argmax(w, r, hi, k)
    g = g_value(inst, theta, w)
    return FixedPointResult(theta_star=theta, optimal_set=s, iterations=steps, residual=abs(g - theta))


def _subsets(n: int, k: int):
    for size in range(k + 1):
        yield from itertools.combinations(range(n), size)


def brute_force_optimum(inst: Instance, weights: Optional[Sequence[float]] = None) -> FixedPointResult:
    """Enumerate every feasible set; the verification oracle for the fixed-point solver."""
    if inst.n_items > MAX_ENUMERATION_ITEMS:
        raise EnumerationRefusedError(
            f"refusing to enumerate subsets of {inst.n_items} items (limit {MAX_ENUMERATION_ITEMS})")
    w = inst.weights if weights is None else weights
    r = inst.rewards

    def revenue(items):
        num = sum(r[i] * w[i] for i in items)
        return float(num / (1.0 + sum(w[i] for i in items)))

    table = [(revenue(c), c) for c in _subsets(inst.n_items, inst.capacity)]
    best = max(v for v, _ in table)
    chosen = min((c for v, c in table if v >= best - REVENUE_TIE_BAND), key=tie_key)
    return FixedPointResult(theta_star=best, optimal_set=Assortment(chosen),
                            iterations=len(table), residual=0.0)


def brute_force_linear_argmax(weights, rewards, theta, capacity) -> Assortment:
    """Enumeration oracle for :func:`static_linear_argmax`."""
    n = len(weights)
    best_val, best_set = None, ()
    for c in _subsets(n, capacity):
        val = sum(weights[i] * (rewards[i] - theta) for i in c)
        if best_val is None or val > best_val or (val == best_val and tie_key(c) < tie_key(best_set)):
            best_val, best_set = val, c
    return Assortment(best_set)
