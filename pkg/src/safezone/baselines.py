"""Naive SafeZone baselines: greedy by threshold, simulation, greedy at each step."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .exact import visit_probabilities
from .markov import MarkovChain, StateSet, require_valid, sample_trajectories

# Slack on probability comparisons; DP marginals carry ~1e-16 rounding and
# several lower-bound instances sit exactly on the threshold.
PROB_TOL = 1e-12


@dataclass
class BaselineResult:
    zone: StateSet
    algorithm: str  # "threshold" | "simulation" | "greedy_each_step"
    parameters: dict = field(default_factory=dict)
    samples_used: int = 0


def greedy_by_threshold(visit_probs, beta: float) -> BaselineResult:
    """All states with ``p(s) >= beta``."""
    if not 0.0 < beta <= 1.0:
        raise ValueError(f"beta must lie in (0, 1], got {beta!r}")
    p = np.asarray(visit_probs, dtype=float)
    zone = StateSet.from_mask((p >= beta - PROB_TOL) & (p > 0.0))
    return BaselineResult(zone, "threshold", {"beta": beta})


def simulation_sample_size(k_star: int, beta: float) -> int:
    """``m = (1/beta) ln(k*/0.005)``, rounded up."""
    if k_star < 1 or not 0.0 < beta <= 1.0:
        raise ValueError("need k_star >= 1 and beta in (0, 1]")
    return max(1, math.ceil(math.log(k_star / 0.005) / beta))


def simulation_algorithm(chain: MarkovChain, m: int, rng: np.random.Generator) -> BaselineResult:
    """``{s0}`` together with every state of ``m`` sampled trajectories."""
    require_valid(chain)
    if m < 0:
        raise ValueError(f"m must be nonnegative, got {m}")
    zone = StateSet(chain.n_states, [chain.start_state])
    if m:
        zone.mask[np.unique(sample_trajectories(chain, rng, m))] = True
        zone = StateSet.from_mask(zone.mask)
    return BaselineResult(zone, "simulation", {"m": m}, samples_used=m)


def step_prefix_lengths(step_dists: np.ndarray, rho: float):
    """Per-step greedy prefixes.

    Returns ``(order, lengths)`` where ``order[t]`` ranks states by
    descending ``step_dists[t]`` (ties, up to 1e-12, by ascending index) and ``lengths[t]``
    is the shortest prefix whose mass reaches ``1 - rho``.
    """
    step_dists = np.asarray(step_dists, dtype=float)
    n = step_dists.shape[1]
    # lexsort sorts by the last key first: probability descending, then index.
    # Probabilities are compared at 12 decimals so rounding noise cannot
    # break a tie that holds in exact arithmetic.
    idx = np.arange(n)
    keys = np.round(step_dists, 12)
    order = np.stack([np.lexsort((idx, -row)) for row in keys])
    cum = np.cumsum(np.take_along_axis(step_dists, order, axis=1), axis=1)
    need = 1.0 - rho - PROB_TOL
    lengths = np.array([min(int(np.searchsorted(c, need, side="left")) + 1, n) for c in cum])
    return order, lengths


def greedy_each_step(chain: MarkovChain, rho: float, visit_probs=None) -> BaselineResult:
    """Per layer, the fewest most-likely states holding mass ``>= 1 - rho``."""
    require_valid(chain)
    if chain.layer_labels is None:
        raise ValueError("greedy_each_step needs a layered chain (layer_labels missing)")
    if not 0.0 < rho < 1.0:
        raise ValueError(f"rho must lie in (0, 1), got {rho!r}")
    p = visit_probabilities(chain) if visit_probs is None else np.asarray(visit_probs, dtype=float)
    labels = chain.layer_labels
    step_dists = np.zeros((chain.horizon + 1, chain.n_states))
    step_dists[labels, np.arange(chain.n_states)] = p
    order, lengths = step_prefix_lengths(step_dists[1:], rho)
    zone = StateSet(chain.n_states, [chain.start_state])
    for row, ln in zip(order, lengths):
        zone.add(row[:ln].tolist())
    return BaselineResult(zone, "greedy_each_step", {"rho": rho})
