import numpy as np
import pytest
from scipy import stats

from mnlswitch.core import EMPTY, NO_PURCHASE, Assortment, Instance
from mnlswitch.environment import (
    HorizonExhaustedError,
    SimClock,
    Simulation,
    UniformStream,
    run_epoch,
    sample_choice,
)
from mnlswitch.instances import gen_lowerbound_base, gen_uniform_random


def A(*labels):
    return Assortment.from_external(labels)


HALF = Instance(1, 1, [1.0], [0.5])


def test_empty_set_never_buys():
    rng = UniformStream(0)
    assert all(sample_choice(HALF, EMPTY, rng) == NO_PURCHASE for _ in range(1000))


def test_zero_weights_never_buy():
    inst = Instance(3, 3, [1.0, 1.0, 1.0], [0.0, 0.0, 0.0])
    rng = UniformStream(1)
    assert all(sample_choice(inst, A(1, 2, 3), rng) == NO_PURCHASE for _ in range(1000))


def test_single_item_purchase_frequency():
    rng = UniformStream(2)
    draws = [sample_choice(HALF, A(1), rng) for _ in range(100_000)]
    assert abs(np.mean(np.array(draws) == 0) - 1 / 3) <= 0.01


def test_choice_frequencies_match_probabilities():
    inst = Instance(3, 3, [0.8, 0.5, 0.3], [0.5, 0.2, 0.9])
    rng = UniformStream(3)
    draws = np.array([sample_choice(inst, A(1, 2, 3), rng) for _ in range(60_000)])
    counts = [np.sum(draws == c) for c in (NO_PURCHASE, 0, 1, 2)]
    expected = np.array([1.0, 0.5, 0.2, 0.9]) / 2.6 * len(draws)
    assert stats.chisquare(counts, expected).pvalue > 0.01


def test_empty_epoch():
    clock = SimClock(horizon=10)
    out = run_epoch(HALF, EMPTY, clock, UniformStream(0))
    assert (out.epoch_length, out.purchases, out.realized_revenue, out.truncated) == (1, {}, 0.0, False)
    assert clock.t == 1


def geometric_sample(v, n_epochs, seed):
    inst = Instance(1, 1, [1.0], [v])
    clock, rng = SimClock(horizon=None), UniformStream(seed)
    counts, lengths = [], []
    for _ in range(n_epochs):
        out = run_epoch(inst, A(1), clock, rng)
        counts.append(out.purchases.get(0, 0))
        lengths.append(out.epoch_length)
        assert out.epoch_length == 1 + counts[-1]
    return np.array(counts), np.array(lengths)


def test_purchase_counts_are_geometric_with_mean_v():
    counts, _ = geometric_sample(0.5, 100_000, seed=4)
    se = counts.std(ddof=1) / np.sqrt(len(counts))
    assert abs(counts.mean() - 0.5) <= 3 * se
    q = 0.5 / 1.5
    m = np.arange(6)
    pmf = q ** m * (1 - q)
    observed = [np.sum(counts == k) for k in m] + [np.sum(counts >= 6)]
    expected = np.append(pmf, q ** 6) * len(counts)
    assert stats.chisquare(observed, expected).pvalue > 0.01


def test_epoch_length_mean():
    inst = gen_uniform_random(6, 4, seed=9)
    s = Assortment((0, 2, 3, 5))
    clock, rng = SimClock(horizon=None), UniformStream(5)
    lengths = np.array([run_epoch(inst, s, clock, rng).epoch_length for _ in range(100_000)])
    target = 1 + inst.weights[list(s.items)].sum()
    assert abs(lengths.mean() - target) <= 3 * lengths.std(ddof=1) / np.sqrt(len(lengths))


def test_truncated_final_epoch():
    inst = Instance(1, 1, [1.0], [1.0])
    clock = SimClock(horizon=50)
    rng = UniformStream(6)
    while not clock.exhausted:
        t0 = clock.t
        out = run_epoch(inst, A(1), clock, rng)
        if out.truncated:
            assert out.epoch_length == 50 - t0
            assert sum(out.purchases.values()) == out.epoch_length
    assert clock.t == 50


def test_exhausted_clock_raises():
    clock = SimClock(horizon=3, t=3)
    with pytest.raises(HorizonExhaustedError):
        run_epoch(HALF, A(1), clock, UniformStream(0))


def test_stream_is_deterministic_and_prefix_stable():
    a, b = UniformStream(77), UniformStream(77)
    xs = [a.next() for _ in range(10_000)]
    assert xs == [b.next() for _ in range(10_000)]
    assert UniformStream(78).next() != xs[0]


def test_simulation_is_deterministic():
    inst = gen_lowerbound_base(3)
    traces = []
    for _ in range(2):
        sim = Simulation(inst, 500, seed=12, trace_mode="full")
        while not sim.done:
            sim.explore(A(1 + sim.n_epochs % 3))
        traces.append(list(sim.trace.rows()))
    assert traces[0] == traces[1]
