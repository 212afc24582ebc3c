"""Bandit policies sharing an epoch-level estimator interface."""
from .base import BasePolicy, is_power_of_two
from .esucb import ESUCB, ESUCBNoReset, default_tmax, scale_for_tmax
from .fhducb import FHDUCB, FHState, fh_condition, fh_tau0, fh_update
from .ucb import ATDUCB, BaselineUCB, EstimatorState, ucb_radius_atducb

POLICIES = {
    "baseline_ucb": BaselineUCB,
    "at_ducb": ATDUCB,
    "fh_ducb": FHDUCB,
    "esucb": ESUCB,
    "esucb_noreset": ESUCBNoReset,
}


def make_policy(name: str, **params) -> BasePolicy:
    try:
        cls = POLICIES[name]
    except KeyError:
        raise ValueError(f"unknown policy {name!r}; choose from {sorted(POLICIES)}") from None
    return cls(**params)


__all__ = [
    "ATDUCB", "BasePolicy", "BaselineUCB", "ESUCB", "ESUCBNoReset", "EstimatorState", "FHDUCB",
    "FHState", "POLICIES", "default_tmax", "fh_condition", "fh_tau0", "fh_update", "is_power_of_two",
    "make_policy", "scale_for_tmax", "ucb_radius_atducb",
]
