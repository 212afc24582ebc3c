"""Low-switching-cost policies for the multinomial-logit bandit."""
from .core import (
    EMPTY,
    NO_PURCHASE,
    Assortment,
    Instance,
    InvalidAssortmentError,
    InvalidInstanceError,
    choice_probabilities,
    expected_revenue,
    switch_deltas,
)
from .environment import EpochOutcome, SimClock, Simulation, UniformStream, run_epoch, sample_choice
from .instances import gen_lowerbound_base, gen_lowerbound_perturbed, gen_uniform_random, load, save
from .metrics import PolicyTrace, downsample, fit_scaling, record_step
from .optimizer import (
    FixedPointResult,
    brute_force_optimum,
    g_value,
    solve_theta_star,
    static_linear_argmax,
)
from .policies import ATDUCB, ESUCB, FHDUCB, BaselineUCB, ESUCBNoReset, make_policy

__version__ = "0.1.0"
