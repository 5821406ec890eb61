"""Exact and sampled escape probabilities.

The exact route redirects every transition that leaves the zone into an
absorbing sink state and pushes the start distribution forward ``H`` steps;
the mass sitting in the sink at the end is the escape probability.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .markov import MarkovChain, StateSet, require_valid, sample_trajectories

# Trajectory rows drawn per numpy batch in the Monte-Carlo estimators.
_BATCH_CELLS = 2_000_000


@dataclass(frozen=True)
class SafetyReport:
    value: float
    method: str  # "exact" | "monte_carlo"
    samples_used: int = 0
    epsilon: float | None = None
    lam: float | None = None

    def __post_init__(self):
        if not 0.0 <= self.value <= 1.0:
            raise ValueError(f"escape probability {self.value!r} outside [0, 1]")


def _zone_mask(chain: MarkovChain, zone) -> np.ndarray:
    mask = zone.mask if isinstance(zone, StateSet) else np.asarray(zone, dtype=bool)
    if mask.shape != (chain.n_states,):
        raise ValueError(f"zone over {mask.size} states, chain has {chain.n_states}")
    return mask


def exact_escape_probability(chain: MarkovChain, zone: StateSet) -> SafetyReport:
    """``Pr[tau not subset of zone]`` by the sink-augmented forward DP."""
    require_valid(chain)
    mask = _zone_mask(chain, zone)
    if not mask[chain.start_state]:
        return SafetyReport(1.0, "exact")
    value = float(escape_probabilities(chain, mask[None, :])[0])
    return SafetyReport(min(max(value, 0.0), 1.0), "exact")


def escape_probabilities(chain: MarkovChain, masks: np.ndarray) -> np.ndarray:
    """Exact escape probability for each row of a ``(b, n)`` boolean mask array.

    Rows whose mask excludes the start state get 1.
    """
    P = chain.transition_matrix
    masks = np.asarray(masks, dtype=bool)
    outside = ~masks
    dist = np.zeros(masks.shape, dtype=float)
    dist[:, chain.start_state] = masks[:, chain.start_state]
    sink = 1.0 - masks[:, chain.start_state].astype(float)
    for _ in range(chain.horizon):
        dist = np.asarray(dist @ P)
        sink += np.where(outside, dist, 0.0).sum(axis=1)
        dist[outside] = 0.0
    return sink


def time_marginals(chain: MarkovChain) -> np.ndarray:
    """``(H+1, n)`` array whose row ``t`` is the distribution of ``s_t``."""
    require_valid(chain)
    PT = chain.transition_matrix.T.tocsr()
    out = np.zeros((chain.horizon + 1, chain.n_states))
    out[0, chain.start_state] = 1.0
    for t in range(chain.horizon):
        out[t + 1] = PT @ out[t]
    return out


def visit_probabilities(chain: MarkovChain) -> np.ndarray:
    """``p(s) = Pr[s in tau]`` for every state.

    Computed as the escape probability of ``S \\ {s}``. Layered chains take
    the shortcut ``p(s) = Pr[s_{layer(s)} = s]``.
    """
    require_valid(chain)
    n = chain.n_states
    if chain.layer_labels is not None:
        marg = time_marginals(chain)
        return marg[chain.layer_labels, np.arange(n)]
    reach = reachable_states(chain)
    p = np.zeros(n)
    idx = np.flatnonzero(reach)
    # Batches keep the dense (b, n) work array bounded.
    step = max(1, _BATCH_CELLS // max(n, 1))
    for lo in range(0, idx.size, step):
        chunk = idx[lo:lo + step]
        masks = np.ones((chunk.size, n), dtype=bool)
        masks[np.arange(chunk.size), chunk] = False
        p[chunk] = escape_probabilities(chain, masks)
    return np.clip(p, 0.0, 1.0)


def reachable_states(chain: MarkovChain) -> np.ndarray:
    """Mask of states visited with positive probability within the horizon."""
    seen = np.zeros(chain.n_states, dtype=bool)
    seen[chain.start_state] = True
    frontier = np.array([chain.start_state])
    for _ in range(chain.horizon):
        if frontier.size == 0:
            break
        lo, hi = chain.indptr[frontier], chain.indptr[frontier + 1]
        nxt = np.unique(np.concatenate([chain.targets[a:b] for a, b in zip(lo, hi)]))
        frontier = nxt[~seen[nxt]]
        seen[frontier] = True
    return seen


def hoeffding_sample_size(epsilon: float, lam: float) -> int:
    """``ceil(ln(2/lam) / (2 eps^2))`` trajectories for an ``(eps, lam)`` estimate."""
    if not 0.0 < epsilon < 1.0:
        raise ValueError(f"epsilon must lie in (0, 1), got {epsilon!r}")
    if not 0.0 < lam < 1.0:
        raise ValueError(f"lambda must lie in (0, 1), got {lam!r}")
    return math.ceil(math.log(2.0 / lam) / (2.0 * epsilon * epsilon))


def count_escapes(chain: MarkovChain, zone: StateSet, n: int, rng: np.random.Generator) -> int:
    """Number of escaping trajectories among ``n`` fresh samples."""
    mask = _zone_mask(chain, zone)
    if not mask[chain.start_state]:
        return n
    step = max(1, _BATCH_CELLS // (chain.horizon + 1))
    escaped = 0
    done = 0
    while done < n:
        b = min(step, n - done)
        trajs = sample_trajectories(chain, rng, b)
        escaped += int(np.count_nonzero(~mask[trajs].all(axis=1)))
        done += b
    return escaped


def monte_carlo_escape(
    chain: MarkovChain, zone: StateSet, epsilon: float, lam: float, rng: np.random.Generator
) -> SafetyReport:
    """Escaping fraction of ``hoeffding_sample_size(epsilon, lam)`` trajectories.

    ``Pr[|estimate - Delta| >= epsilon] <= lam`` by Hoeffding's inequality.
    """
    require_valid(chain)
    n = hoeffding_sample_size(epsilon, lam)
    escaped = count_escapes(chain, zone, n, rng)
    return SafetyReport(escaped / n, "monte_carlo", n, epsilon, lam)
