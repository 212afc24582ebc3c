import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mnlswitch.core import (
    EMPTY,
    Assortment,
    Instance,
    InvalidAssortmentError,
    InvalidInstanceError,
    choice_probabilities,
    expected_revenue,
    switch_deltas,
)


def A(*labels):
    return Assortment.from_external(labels)


@st.composite
def instances(draw, max_n=8):
    n = draw(st.integers(1, max_n))
    k = draw(st.integers(1, n))
    unit = st.floats(0.0, 1.0, allow_nan=False)
    r = draw(st.lists(unit, min_size=n, max_size=n))
    v = draw(st.lists(unit, min_size=n, max_size=n))
    return Instance(n, k, r, v)


@st.composite
def instance_and_set(draw):
    inst = draw(instances())
    size = draw(st.integers(0, inst.capacity))
    items = draw(st.lists(st.integers(0, inst.n_items - 1), min_size=size, max_size=size, unique=True))
    return inst, Assortment(tuple(items))


class TestInstance:
    def test_invariants_enforced(self):
        with pytest.raises(InvalidInstanceError):
            Instance(2, 3, [0.1, 0.2], [0.1, 0.2])
        with pytest.raises(InvalidInstanceError):
            Instance(2, 1, [0.1], [0.1, 0.2])
        with pytest.raises(InvalidInstanceError):
            Instance(2, 1, [0.1, 1.5], [0.1, 0.2])
        with pytest.raises(InvalidInstanceError):
            Instance(0, 1, [], [])

    def test_arrays_are_read_only(self):
        inst = Instance(2, 1, [0.1, 0.2], [0.3, 0.4])
        with pytest.raises(ValueError):
            inst.weights[0] = 0.9
        assert inst.no_purchase_weight == 1.0

    def test_equality_and_digest(self):
        a = Instance(2, 1, [0.1, 0.2], [0.3, 0.4])
        b = Instance(2, 1, np.array([0.1, 0.2]), (0.3, 0.4))
        assert a == b and a.digest() == b.digest()


class TestAssortment:
    def test_canonical_form(self):
        assert Assortment((3, 1, 2)) == Assortment((1, 2, 3))
        assert Assortment((3, 1)).items == (1, 3)

    def test_duplicates_rejected(self):
        with pytest.raises(InvalidAssortmentError):
            Assortment((1, 1))

    def test_external_labels_are_one_based(self):
        s = A(1, 3)
        assert s.items == (0, 2)
        assert s.to_external() == [1, 3]
        assert str(s) == "{1,3}"


class TestChoiceProbabilities:
    inst = Instance(3, 3, [0.8, 0.5, 0.3], [0.5, 0.2, 0.9])

    def test_empty_set(self):
        p = choice_probabilities(self.inst, EMPTY)
        assert p[0] == 1.0 and not p[1:].any()

    def test_single_half_weight_item(self):
        inst = Instance(2, 1, [1.0, 1.0], [0.5, 0.5])
        p = choice_probabilities(inst, A(2))
        assert p[2] == pytest.approx(1 / 3, abs=1e-15)
        assert p[0] == pytest.approx(2 / 3, abs=1e-15)

    def test_hand_evaluation(self):
        p = choice_probabilities(self.inst, A(1, 2))
        np.testing.assert_allclose(p, [1 / 1.7, 0.5 / 1.7, 0.2 / 1.7, 0.0], atol=1e-15)

    def test_out_of_range_item(self):
        with pytest.raises(InvalidAssortmentError):
            choice_probabilities(self.inst, A(4))

    def test_over_capacity(self):
        inst = Instance(3, 1, [0.8, 0.5, 0.3], [0.5, 0.2, 0.9])
        with pytest.raises(InvalidAssortmentError):
            choice_probabilities(inst, A(1, 2))

    @given(instance_and_set())
    def test_distribution(self, case):
        inst, s = case
        p = choice_probabilities(inst, s)
        assert (p >= 0).all()
        assert abs(p.sum() - 1.0) <= 1e-12
        outside = [i + 1 for i in range(inst.n_items) if i not in s]
        assert not p[outside].any()


class TestExpectedRevenue:
    def test_empty(self):
        assert expected_revenue(Instance(1, 1, [1.0], [1.0]), EMPTY) == 0.0

    def test_unit_reward_half_weight(self):
        inst = Instance(3, 1, [1.0] * 3, [0.5] * 3)
        for k in (1, 2, 3):
            assert expected_revenue(inst, A(k)) == pytest.approx(1 / 3, abs=1e-15)

    def test_hand_evaluation(self):
        inst = Instance(2, 2, [0.8, 0.5], [0.5, 0.2])
        assert expected_revenue(inst, A(1, 2)) == pytest.approx(0.5 / 1.7, abs=1e-15)
        assert expected_revenue(inst, A(1, 2)) == pytest.approx(0.2941176, abs=1e-7)

    @given(instance_and_set())
    def test_matches_probability_weighted_rewards(self, case):
        inst, s = case
        p = choice_probabilities(inst, s)
        assert abs(expected_revenue(inst, s) - float(inst.rewards @ p[1:])) <= 1e-12
        assert 0.0 <= expected_revenue(inst, s) <= inst.rewards.max() + 1e-15

    @given(instance_and_set())
    def test_zero_override_gives_zero(self, case):
        inst, s = case
        assert expected_revenue(inst, s, np.zeros(inst.n_items)) == 0.0


class TestSwitchDeltas:
    @pytest.mark.parametrize("prev, nxt, expected", [
        ((1, 2), (1, 2), (0, 0)),
        ((1, 2), (2, 3), (1, 2)),
        ((1, 2, 3), (), (1, 3)),
    ])
    def test_examples(self, prev, nxt, expected):
        assert switch_deltas(A(*prev), A(*nxt)) == expected

    @settings(max_examples=200)
    @given(st.integers(1, 8).flatmap(lambda n: st.tuples(
        st.just(n), st.integers(1, n),
        st.sets(st.integers(0, n - 1)), st.sets(st.integers(0, n - 1)))))
    def test_item_vs_assortment_relation(self, case):
        n, k, a, b = case
        a, b = set(itertools.islice(sorted(a), k)), set(itertools.islice(sorted(b), k))
        da, di = switch_deltas(Assortment(tuple(a)), Assortment(tuple(b)))
        assert da <= di <= min(2 * k, n) * da
