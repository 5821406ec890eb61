"""Exhaustive search for the smallest rho-safe zone."""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations, islice

import numpy as np

from .exact import escape_probabilities, reachable_states
from .markov import MarkovChain, StateSet, require_valid

MAX_REACHABLE = 24
# Some instances put a zone exactly on the safety boundary (Delta == rho).
SAFE_TOL = 1e-12
_CHUNK = 8192


class OracleGuardError(ValueError):
    def __init__(self, reachable: int, limit: int):
        super().__init__(
            f"oracle guard exceeded: {reachable} reachable states > limit of {limit}"
        )
        self.reachable = reachable
        self.limit = limit


@dataclass
class OracleResult:
    k_star: int
    witness: StateSet
    subsets_examined: int
    escape: float


def is_safe(escape: float, rho: float) -> bool:
    return escape <= rho + SAFE_TOL


def brute_force_kstar(
    chain: MarkovChain,
    rho: float,
    max_reachable: int | None = MAX_REACHABLE,
    max_size: int | None = None,
) -> OracleResult | None:
    """Smallest zone with exact escape probability at most ``rho``.

    Candidates always contain the start state and are drawn from states
    reachable within the horizon (others never help). Sizes are tried in
    increasing order and, within a size, in lexicographic order, so the
    witness is the lexicographically first minimal zone.

    With ``max_size`` set, returns ``None`` if no zone of at most that size
    is safe. ``max_reachable=None`` lifts the tractability guard.
    """
    require_valid(chain)
    if rho < 0:
        raise ValueError(f"rho must be nonnegative, got {rho!r}")
    reach = reachable_states(chain)
    n_reach = int(reach.sum())
    if max_reachable is not None and n_reach > max_reachable:
        raise OracleGuardError(n_reach, max_reachable)
    s0 = chain.start_state
    others = [s for s in np.flatnonzero(reach).tolist() if s != s0]
    top = len(others) + 1 if max_size is None else min(max_size, len(others) + 1)
    examined = 0
    for size in range(1, top + 1):
        combos = combinations(others, size - 1)
        while True:
            chunk = list(islice(combos, _CHUNK))
            if not chunk:
                break
            masks = np.zeros((len(chunk), chain.n_states), dtype=bool)
            masks[:, s0] = True
            if size > 1:
                masks[np.arange(len(chunk))[:, None], np.asarray(chunk)] = True
            esc = escape_probabilities(chain, masks)
            hits = np.flatnonzero(esc <= rho + SAFE_TOL)
            if hits.size:
                h = int(hits[0])
                examined += h + 1
                return OracleResult(size, StateSet.from_mask(masks[h]), examined, float(esc[h]))
            examined += len(chunk)
    return None
