import math
import warnings

import numpy as np
import pytest
from sklearn.base import clone

from mnlswitch.core import Assortment, Instance
from mnlswitch.environment import Simulation
from mnlswitch.instances import gen_lowerbound_base, gen_uniform_random
from mnlswitch.policies import (
    ATDUCB,
    ESUCB,
    FHDUCB,
    BaselineUCB,
    ESUCBNoReset,
    FHState,
    default_tmax,
    fh_condition,
    fh_tau0,
    make_policy,
    scale_for_tmax,
    ucb_radius_atducb,
)


def A(*labels):
    return Assortment.from_external(labels)


class TestUCBRadius:
    def test_hand_value(self):
        assert ucb_radius_atducb(0.0, 1, 1, 1) == pytest.approx(48 * math.log(2), rel=1e-15)
        assert ucb_radius_atducb(0.0, 1, 1, 1) == pytest.approx(33.2711, abs=1e-4)

    def test_vanishes_with_many_epochs(self):
        assert ucb_radius_atducb(0.0, 10**15, 1, 1) < 1e-12

    def test_needs_an_epoch(self):
        with pytest.raises(ValueError):
            ucb_radius_atducb(0.3, 0, 1, 4)

    def test_min_rule_keeps_smaller_value(self):
        sim = Simulation(Instance(1, 1, [1.0], [0.5]), 10, seed=0)
        pol = ATDUCB()
        pol.begin(sim)
        pol.state_.ucb[0] = 0.2
        pol.step(sim)
        assert pol.state_.ucb[0] == 0.2


class TestATDUCB:
    def test_first_assortment_uses_uniform_ucbs(self):
        sim = Simulation(gen_lowerbound_base(4), 100, seed=0)
        pol = ATDUCB()
        pol.begin(sim)
        out = pol.step(sim)
        assert out.assortment == A(1)

    def test_updates_fire_at_powers_of_two(self):
        sim = Simulation(Instance(1, 1, [1.0], [0.5]), 10**6, seed=0)
        pol = ATDUCB()
        pol.begin(sim)
        counts = []
        for _ in range(9):
            pol.step(sim)
            counts.append(pol.state_.recomputations[0])
        # T_i = 1..9: refresh at 1, 2, 4, 8
        assert counts == [1, 2, 2, 3, 3, 3, 3, 4, 4]

    def test_update_budget(self):
        T = 2**13
        for seed in range(3):
            pol = ATDUCB().fit(gen_uniform_random(8, 3, seed=seed), T, random_state=seed)
            assert max(pol.state_.recomputations) <= math.floor(math.log2(T)) + 1
            assert pol.n_assortment_computations_ <= 8 * (math.floor(math.log2(T)) + 1) + 1

    def test_ucb_non_increasing(self):
        pol = ATDUCB(track_ucb=True).fit(gen_uniform_random(6, 2, seed=4), 20_000, random_state=1)
        last = {}
        for _, i, v in pol.ucb_history_:
            assert v <= last.get(i, 1.0)
            last[i] = v
        assert all(0.0 <= v <= 1.0 for v in pol.ucb_)

    def test_ucbs_rarely_undershoot(self):
        # the confidence radius should keep each UCB above the true weight
        bad = 0
        for seed in range(200):
            inst = gen_uniform_random(10, 4, seed=10_000 + seed)
            pol = ATDUCB(track_ucb=True).fit(inst, 10_000, random_state=seed)
            bad += any(v < inst.weights[i] for _, i, v in pol.ucb_history_)
        assert bad / 200 <= 0.05

    def test_estimator_api(self):
        pol = ATDUCB(track_ucb=True)
        assert pol.get_params() == {"track_ucb": True}
        twin = clone(pol).set_params(track_ucb=False)
        assert twin.track_ucb is False
        inst = gen_uniform_random(5, 2, seed=1)
        pol.fit(inst, 3000, random_state=2)
        assert isinstance(pol.predict(), Assortment)
        assert pol.score() == -pol.trace_.cum_regret
        with pytest.raises(RuntimeError):
            twin.predict()


class TestBaseline:
    def test_matches_atducb_while_counts_are_powers_of_two(self):
        inst = Instance(1, 1, [1.0], [0.7])
        sims = [Simulation(inst, 10**5, seed=3) for _ in range(2)]
        pols = [ATDUCB(), BaselineUCB()]
        for p, s in zip(pols, sims):
            p.begin(s)
        for epoch in range(1, 6):
            outs = [p.step(s) for p, s in zip(pols, sims)]
            assert outs[0].purchases == outs[1].purchases
            if epoch in (1, 2, 4):
                assert pols[0].state_.ucb == pols[1].state_.ucb

    def test_refreshes_every_epoch(self):
        pol = BaselineUCB().fit(Instance(1, 1, [1.0], [0.5]), 300, random_state=0)
        assert pol.state_.recomputations[0] == pol.n_epochs_


class TestFHCondition:
    def state(self, T, N, **kw):
        st = FHState(N, T, fh_tau0(T, N))
        for name, value in kw.items():
            getattr(st, name)[0] = value
        return st

    def test_tau0(self):
        assert fh_tau0(2**20, 16) == 5
        assert fh_tau0(8, 8) == 1

    def test_early_stage_threshold(self):
        st = self.state(1024, 4, prior_epochs=16, stage_epochs=65)
        assert st.stage[0] < st.tau0
        assert fh_condition(st, 0)
        st.stage_epochs[0] = 64
        assert not fh_condition(st, 0)

    def test_late_stage_needs_large_ucb(self):
        T, N = 1024, 4
        st = self.state(T, N, stage=10, stage_epochs=10**9, prior_epochs=1)
        st.ucb_at_tau0[0] = 1.0 / math.sqrt(N * T)
        assert not fh_condition(st, 0)
        st.ucb_at_tau0[0] = 2.0 / math.sqrt(N * T)
        assert fh_condition(st, 0)

    def test_late_stage_threshold_scales_with_ucb(self):
        T, N = 4096, 4
        st = self.state(T, N, stage=9, prior_epochs=100, ucb=0.25)
        st.ucb_at_tau0[0] = 0.5
        need = 1 + math.sqrt(T * 100 / (N * 0.25))
        st.stage_epochs[0] = math.ceil(need)
        assert fh_condition(st, 0)
        st.stage_epochs[0] = math.ceil(need) - 1
        assert not fh_condition(st, 0)


class TestFHDUCB:
    def test_first_epochs(self):
        inst = gen_uniform_random(5, 2, seed=3)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            sim = Simulation(inst, 10**4, seed=1)
            pol = FHDUCB()
            pol.begin(sim)
        first = pol._current
        pol.step(sim)
        assert pol.n_updates_ == 0 and sim.trace.sets[0] == first
        pol.step(sim)
        # every item offered in epoch 1 closes stage 1
        assert sorted(i for i in range(5) if pol.state_.stage[i] == 2) == list(first.items)

    def test_warns_below_n4(self):
        with pytest.warns(UserWarning, match="N\\^4"):
            FHDUCB().fit(gen_uniform_random(10, 2, seed=0), 1000)

    def test_stage_invariants(self):
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            pol = FHDUCB(track_ucb=True).fit(gen_uniform_random(6, 3, seed=7), 50_000, random_state=3)
        st = pol.state_
        assert all(s >= 1 for s in st.stage)
        last = {}
        for _, i, v in pol.ucb_history_:
            assert v <= last.get(i, 1.0)
            last[i] = v

    def test_fewer_updates_than_atducb(self):
        inst = gen_uniform_random(10, 3, seed=21)
        T = 10**6
        fh = FHDUCB().fit(inst, T, random_state=5)
        at = ATDUCB().fit(inst, T, random_state=5)
        assert fh.total_stages_ < 0.5 * sum(at.state_.recomputations)


class TestESUCB:
    def test_stride_schedule(self):
        pol = ESUCB(tmax_fraction=0.01).fit(gen_uniform_random(4, 2, seed=1), 40_000, random_state=0)
        eps = [r.eps for r in pol.state_.outer]
        assert eps[:3] == pytest.approx([1 / 3, 2 / 9, 4 / 27], rel=1e-15)
        assert all(b == (2.0 / 3.0) * a for a, b in zip(eps, eps[1:]))

    def test_default_tmax_value(self):
        value = 44840 * 5 * math.log(5e8) ** 3 / (1 / 9)
        assert default_tmax(5, 10**4, 1e-4, 1 / 3) == pytest.approx(value, rel=1e-12)
        assert value > 10**4

    def test_full_constants_stay_in_first_check(self):
        pol = ESUCB(delta=1e-4).fit(gen_uniform_random(5, 2, seed=2), 10**4, random_state=0)
        assert len(pol.state_.outer) == 1
        assert pol.state_.checks[0].result is False and not pol.state_.checks[0].completed
        assert pol.state_.outer[0].t_max == pytest.approx(44840 * 5 * math.log(5e8) ** 3 * 9, rel=1e-12)

    def test_first_epoch_uses_upper_branch(self):
        inst = gen_uniform_random(5, 2, seed=2)
        sim = Simulation(inst, 10**4, seed=0)
        pol = ESUCB()
        pol.instance_ = inst
        pol.begin(sim)
        pol.check(sim, 1.0 / 3.0, 2.0 / 3.0, t_max=1)
        from mnlswitch.optimizer import static_linear_argmax
        assert sim.trace.sets[0] == static_linear_argmax([1.0] * 5, inst.rewards, 2.0 / 3.0, 2)

    def test_no_flag_when_revenue_looks_attainable(self):
        # theta_r = 0 can never exceed the optimistic average
        inst = gen_uniform_random(5, 2, seed=2)
        sim = Simulation(inst, 10**4, seed=0)
        pol = ESUCB()
        pol.instance_ = inst
        pol.begin(sim)
        assert pol.check(sim, 0.0, 0.0, t_max=2000) is False

    def test_switches_bounded_by_updates(self):
        for seed in range(5):
            inst = gen_uniform_random(8, 3, seed=seed)
            pol = ESUCB(tmax_fraction=0.125).fit(inst, 2**15, random_state=seed)
            for rec in pol.state_.checks:
                assert rec.branch_flips <= 1
                assert rec.fixed_branch_excess == 0
                assert rec.item_switches <= 2 * rec.ucb_changes + 2 * inst.capacity * rec.branch_flips

    def test_noreset_keeps_counters(self):
        inst = gen_uniform_random(6, 2, seed=3)
        a = ESUCB(tmax_fraction=0.1).fit(inst, 30_000, random_state=1)
        b = ESUCBNoReset(tmax_fraction=0.1).fit(inst, 30_000, random_state=1)
        assert b.reset_counters is False and b.get_params()["reset_counters"] is False
        assert sum(b.state_.estimator.epochs) > sum(a.state_.estimator.epochs)

    def test_scale_for_tmax(self):
        s = scale_for_tmax(10, 2**16, fraction=0.125)
        pol = ESUCB(constant_scale=s).fit(gen_uniform_random(10, 3, seed=0), 2**16)
        assert pol.state_.outer[0].t_max == pytest.approx(2**13, rel=1e-9)

    def test_invalid_log_base(self):
        with pytest.raises(ValueError):
            ESUCB(check_log="ten").fit(gen_uniform_random(3, 1), 100)


def test_make_policy():
    assert isinstance(make_policy("esucb", c3=21036), ESUCB)
    assert make_policy("esucb_noreset").reset_counters is False
    with pytest.raises(ValueError):
        make_policy("thompson")


@pytest.mark.parametrize("name", ["baseline_ucb", "at_ducb", "fh_ducb", "esucb", "esucb_noreset"])
def test_every_policy_respects_switch_relation_and_determinism(name):
    params = {"tmax_fraction": 0.125} if name.startswith("esucb") else {}
    inst = gen_uniform_random(7, 3, seed=11)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        runs = [make_policy(name, **params).fit(inst, 8000, random_state=9, trace_mode="full")
                for _ in range(2)]
    assert runs[0].trace_.switch_relation_holds()
    assert list(runs[0].trace_.rows()) == list(runs[1].trace_.rows())
    assert runs[0].trace_.t == 8000
