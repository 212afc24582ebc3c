from __future__ import annotations

from sklearn.base import BaseEstimator

from ..core import Assortment
from ..environment import Simulation
from ..optimizer import solve_theta_star
from ..validation import check_horizon, check_instance, check_is_fitted, check_seed


def is_power_of_two(n: int) -> bool:
    return n > 0 and n & (n - 1) == 0


class BasePolicy(BaseEstimator):
    """Common estimator surface for the MNL bandit policies.

    ``fit`` plays the policy against a simulated MNL customer stream for
    ``horizon`` steps; the learned state is exposed through attributes with
    a trailing underscore, and ``predict`` returns the assortment the policy
    would offer next.
    """

    name = "base"
    anytime = True

    def fit(self, instance, horizon, random_state=0, trace_mode="epoch", optimum=None):
        inst = check_instance(instance)
        horizon = check_horizon(horizon)
        seed = check_seed(random_state)
        sim = Simulation(inst, horizon, seed, self.name, trace_mode, optimum)
        self.instance_ = inst
        self.horizon_ = horizon
        self._run(sim)
        self.trace_ = sim.trace
        self.n_epochs_ = sim.n_epochs
        return self

    def _run(self, sim: Simulation) -> None:
        self.begin(sim)
        while not sim.done:
            self.step(sim)

    def begin(self, sim: Simulation) -> None:
        raise NotImplementedError

    def step(self, sim: Simulation):
        raise NotImplementedError

    def predict(self, instance=None) -> Assortment:
        """Revenue-maximizing assortment under the current UCB vector."""
        check_is_fitted(self)
        inst = self.instance_ if instance is None else check_instance(instance)
        return solve_theta_star(inst, self.ucb_).optimal_set

    def score(self, instance=None) -> float:
        """Negative cumulative pseudo-regret of the fitted run."""
        check_is_fitted(self)
        return -self.trace_.cum_regret
