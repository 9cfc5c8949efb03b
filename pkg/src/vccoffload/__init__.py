"""Learning-based task offloading for vehicular cloud computing.

A task vehicle picks one service vehicle per period from a changing
candidate set, learning their offloading delay with bandit policies.
"""
from .bandit import (
    AVUCB,
    UCB1,
    VUCB1,
    ArmState,
    Decision,
    OraclePolicy,
    Policy,
    PolicyConfig,
    RandomPolicy,
    make_policy,
    normalized_load,
    utility,
)
from .engine import (
    Epoch,
    LoadModel,
    Scenario,
    build_environment,
    compute_regret,
    estimate_mu,
    run_batch,
    run_episode,
)
from .scenario_file import parse_scenario

__version__ = "0.1.0"
