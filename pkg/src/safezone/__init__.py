"""Small zones that contain a finite-horizon Markov chain with high probability."""

__version__ = "0.1.0"

from .baselines import BaselineResult, greedy_by_threshold, greedy_each_step, simulation_algorithm
from .exact import (
    SafetyReport,
    escape_probabilities,
    exact_escape_probability,
    hoeffding_sample_size,
    monte_carlo_escape,
    time_marginals,
    visit_probabilities,
)
from .markov import (
    Diagnostic,
    InvalidChainError,
    MarkovChain,
    MdpWithPolicy,
    StateSet,
    induce_chain,
    new_count,
    sample_trajectories,
    sample_trajectory,
    validate_chain,
)
from .oracle import OracleGuardError, OracleResult, brute_force_kstar
from .solver import BudgetExceeded, SolverConfig, SolverRun, amplified_find, find_safezone

__all__ = [
    "BaselineResult", "BudgetExceeded", "Diagnostic", "InvalidChainError", "MarkovChain",
    "MdpWithPolicy", "OracleGuardError", "OracleResult", "SafetyReport", "SolverConfig",
    "SolverRun", "StateSet", "amplified_find", "brute_force_kstar", "escape_probabilities",
    "exact_escape_probability", "find_safezone", "greedy_by_threshold", "greedy_each_step",
    "hoeffding_sample_size", "induce_chain", "monte_carlo_escape", "new_count",
    "sample_trajectories", "sample_trajectory", "simulation_algorithm", "time_marginals",
    "validate_chain", "visit_probabilities",
]
