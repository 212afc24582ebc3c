"""Release gate: exact oracles and statistical checks that must all pass.

Each suite returns ``(passed, total, detail)``; ``run_verify`` prints one line
per suite and reports overall success.
"""
from __future__ import annotations

import contextlib
import math
import sys
import time
import warnings
from typing import Callable, List, Tuple
from unittest import mock

import numpy as np

from .. import optimizer
from ..core import Assortment, Instance, NO_PURCHASE
from ..environment import SimClock, UniformStream, run_epoch, sample_choice
from ..instances import gen_lowerbound_base, gen_uniform_random
from ..optimizer import brute_force_linear_argmax, brute_force_optimum, g_value, solve_theta_star
from ..policies import make_policy

SuiteResult = Tuple[int, int, str]

# upper 1% point of chi-square with 6 degrees of freedom
CHI2_6DF_1PCT = 16.8119


def _reversed_tie_argmax(weights, rewards, theta, capacity) -> Assortment:
    gains = [(-(w * (r - theta)), -i) for i, (w, r) in enumerate(zip(weights, rewards))]
    picked = sorted(g for g in gains if g[0] < 0.0)[:capacity]
    return Assortment(tuple(-i for _, i in picked))


def _oracle_instances(seed: int = 2024) -> List[Instance]:
    rng = np.random.default_rng(seed)
    out = [gen_lowerbound_base(n) for n in range(2, 7)]
    for _ in range(250):
        n = int(rng.integers(1, 9))
        k = int(rng.integers(1, n + 1))
        out.append(Instance(n, k, rng.random(n), rng.random(n)))
    # coarse values make exact ties common
    for _ in range(150):
        n = int(rng.integers(1, 7))
        k = int(rng.integers(1, n + 1))
        out.append(Instance(n, k, rng.choice([0.25, 0.5, 1.0], n), rng.choice([0.25, 0.5, 1.0], n)))
    return out


def suite_oracle() -> SuiteResult:
    insts = _oracle_instances()
    passed = 0
    for inst in insts:
        fast, slow = solve_theta_star(inst), brute_force_optimum(inst)
        passed += abs(fast.theta_star - slow.theta_star) <= 1e-9 and fast.optimal_set == slow.optimal_set
    rng = np.random.default_rng(7)
    probes = 0
    for inst in insts:
        theta = float(rng.choice([0.0, 0.25, 0.5, rng.uniform(-0.2, 1.0)]))
        got = optimizer.static_linear_argmax(inst.weights, inst.rewards, theta, inst.capacity)
        passed += got == brute_force_linear_argmax(inst.weights, inst.rewards, theta, inst.capacity)
        probes += 1
    return passed, len(insts) + probes, "solver and linear argmax against enumeration"


def suite_fixed_point() -> SuiteResult:
    rng = np.random.default_rng(11)
    passed = total = 0
    for _ in range(60):
        n = int(rng.integers(1, 11))
        inst = Instance(n, int(rng.integers(1, n + 1)), rng.random(n), rng.random(n))
        star = solve_theta_star(inst).theta_star
        total += 1
        passed += abs(g_value(inst, star) - star) <= 1e-9
        for theta in rng.uniform(-0.5, 1.5, size=20):
            if abs(theta - star) < 1e-6:
                continue
            total += 1
            g = g_value(inst, theta)
            passed += g > theta if theta < star else g < theta
    return passed, total, "G(theta*) = theta* and the sign of G(theta) - theta"


def suite_geometric() -> SuiteResult:
    checks = []
    v = 0.5
    inst = Instance(1, 1, [1.0], [v])
    s = Assortment((0,))
    clock, rng = SimClock(horizon=None), UniformStream(31)
    counts = np.array([run_epoch(inst, s, clock, rng).purchases.get(0, 0) for _ in range(50_000)])
    se = counts.std(ddof=1) / math.sqrt(counts.size)
    checks.append(abs(counts.mean() - v) <= 3 * se)
    q = v / (1 + v)
    expected = np.array([q ** m * (1 - q) for m in range(6)] + [q ** 6]) * counts.size
    observed = np.array([np.sum(counts == m) for m in range(6)] + [np.sum(counts >= 6)])
    checks.append(float(np.sum((observed - expected) ** 2 / expected)) <= CHI2_6DF_1PCT)
    base = gen_lowerbound_base(4)
    rng = UniformStream(32)
    buys = sum(sample_choice(base, s, rng) != NO_PURCHASE for _ in range(100_000))
    checks.append(abs(buys / 100_000 - 1 / 3) <= 0.01)
    return sum(checks), len(checks), "geometric purchase counts and single-item frequency"


def suite_switch_relation() -> SuiteResult:
    passed = total = 0
    params = {"esucb": {"tmax_fraction": 0.125}, "esucb_noreset": {"tmax_fraction": 0.125}}
    for name in ("baseline_ucb", "at_ducb", "fh_ducb", "esucb", "esucb_noreset"):
        for seed in range(3):
            inst = gen_uniform_random(6, 1 + seed, seed=100 + seed)
            with warnings.catch_warnings():
                warnings.simplefilter("ignore")
                pol = make_policy(name, **params.get(name, {})).fit(inst, 4000, random_state=seed,
                                                                   trace_mode="full")
            tr = pol.trace_
            cap = min(2 * inst.capacity, inst.n_items)
            total += 1
            passed += (tr.switch_relation_holds()
                       and all(a <= i <= cap * a for a, i in zip(tr.steps["asst"], tr.steps["item"]))
                       and math.isclose(tr.cum_regret, tr.epoch_regret_total(), rel_tol=1e-9, abs_tol=1e-9))
    return passed, total, "assortment/item switch sandwich on full traces"


SUITES: List[Tuple[str, Callable[[], SuiteResult]]] = [
    ("oracle", suite_oracle),
    ("fixed_point", suite_fixed_point),
    ("geometric", suite_geometric),
    ("switch_relation", suite_switch_relation),
]


def run_verify(corrupt_tie_break: bool = False, out=None) -> bool:
    out = sys.stdout if out is None else out
    patch = (mock.patch.object(optimizer, "static_linear_argmax", _reversed_tie_argmax)
             if corrupt_tie_break else contextlib.nullcontext())
    ok = True
    start = time.perf_counter()
    with patch:
        for name, suite in SUITES:
            passed, total, detail = suite()
            status = "PASS" if passed == total else "FAIL"
            ok &= passed == total
            print(f"{status} {name}: {passed}/{total} ({detail})", file=out)
    print(f"{'PASS' if ok else 'FAIL'} verify in {time.perf_counter() - start:.1f}s", file=out)
    return ok
