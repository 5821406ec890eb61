"""Instance generators: lower-bound families for the baselines and random chains.

States carry names so callers can recover the structural groups:
``"s0"``, ``"A[path,step]"`` and ``"B[i]"`` for the hub families, and
``"L[layer,slot]"`` for the greedy family (slot 1..4 and 5..k+4).
"""

from __future__ import annotations

import math

import numpy as np

from .exact import time_marginals
from .markov import MarkovChain, validate_chain


class ConstructionError(ValueError):
    pass


def _checked(chain: MarkovChain) -> MarkovChain:
    diag = validate_chain(chain)
    if diag is not None:
        raise ConstructionError(f"generated chain is invalid: {diag}")
    return chain


def named(chain: MarkovChain, prefix: str) -> list[int]:
    """Indices of states whose name starts with ``prefix``."""
    return [i for i, name in enumerate(chain.names or ()) if name.startswith(prefix)]


def _hub_with_paths(n_paths: int, path_prob: float, k: int, rho: float, H: int, extra=()) -> MarkovChain:
    n_b = k - 1
    n = 1 + n_paths * H + n_b
    names = ["s0"]
    edges = []
    for i in range(n_paths):
        base = 1 + i * H
        names.extend(f"A[{i},{j}]" for j in range(1, H + 1))
        edges.append((0, base, path_prob))
        for j in range(H - 1):
            edges.append((base + j, base + j + 1, 1.0))
        edges.append((base + H - 1, base + H - 1, 1.0))
    b0 = 1 + n_paths * H
    for i in range(n_b):
        names.append(f"B[{i}]")
        edges.append((0, b0 + i, (1.0 - rho) / n_b))
        edges.append((b0 + i, b0 + i, 1.0))
    return _checked(MarkovChain.from_edges(n, 0, H, edges, names=names))


def gen_threshold_lowerbound(rho: float, H: int, k: int) -> MarkovChain:
    """Hub instance on which greedy-by-threshold with ``beta = rho/k`` keeps every state.

    ``round(rho/beta) = k`` deterministic paths of ``H`` states each are
    entered with probability ``beta`` (total ``rho``); ``k-1`` absorbing
    states are entered with probability ``(1-rho)/(k-1)`` each, so
    ``{s0} + B`` is a ``(rho, k)`` zone.
    """
    if not 0.0 < rho < 0.5:
        raise ValueError(f"rho must lie in (0, 1/2), got {rho!r}")
    if k < 2 or H < 1:
        raise ValueError("need k >= 2 and H >= 1")
    beta = rho / k
    n_paths = round(rho / beta)
    return _hub_with_paths(n_paths, rho / n_paths, k, rho, H)


def simulation_lowerbound_params(rho: float, gamma: float, k: int) -> tuple[float, int]:
    """``(m, r)`` with ``m = (k/rho) ln(k/0.005)`` and ``r = ceil(m^2/gamma)``."""
    m = (k / rho) * math.log(k / 0.005)
    return m, math.ceil(m * m / gamma)


def gen_simulation_lowerbound(rho: float, gamma: float, H: int, k: int) -> MarkovChain:
    """Hub instance with ``r`` rarely repeated paths, each entered with probability ``rho/r``."""
    if not 0.0 < rho < 1.0 or not 0.0 < gamma < 1.0:
        raise ValueError("rho and gamma must lie in (0, 1)")
    if k < 2 or H < 1:
        raise ValueError("need k >= 2 and H >= 1")
    _, r = simulation_lowerbound_params(rho, gamma, k)
    return _hub_with_paths(r, rho / r, k, rho, H)


GREEDY_MARGINAL_TOL = 1e-9


def greedy_lowerbound_marginals(rho: float, H: int) -> dict[int, float]:
    """Target per-slot probability in every layer."""
    k = 3 * H + 1
    out = {1: 1.0 - 2.0 * rho, 2: rho / 2, 3: rho / 2, 4: rho / 2}
    out.update({j: rho / (2 * k) for j in range(5, k + 5)})
    return out


def gen_greedy_lowerbound(rho: float, H: int) -> MarkovChain:
    """Layered instance with two tied ``rho/2`` slots where greedy picks the bad one.

    Each layer has slots 1..k+4 (``k = 3H+1``). Slots {1,2,3} form a group
    that only feeds itself with next-layer weights proportional to
    ``(1-2rho, rho/2, rho/2)``; slots {4..k+4} form a second closed group
    where slot 4 gets half the mass and each low slot ``1/(2k)``. Starting
    from the target marginals at layer 1 this keeps every layer's marginals
    fixed, so ``{s0} + slots{1,2,3}`` escapes with probability exactly
    ``rho``. Within a layer slot 4 is indexed before slot 3; with ties
    broken by index, greedy-at-each-step takes slots {1,2,4}.
    """
    if not 0.0 < rho < 0.25:
        raise ValueError(f"rho must lie in (0, 1/4), got {rho!r}")
    if H < 1:
        raise ValueError("need H >= 1")
    k = 3 * H + 1
    target = greedy_lowerbound_marginals(rho, H)
    slot_order = [1, 2, 4, 3, *range(5, k + 5)]
    width = len(slot_order)

    def index(layer: int, slot: int) -> int:
        return 1 + (layer - 1) * width + slot_order.index(slot)

    n = 1 + H * width
    names = ["s0"] + [f"L[{i},{slot}]" for i in range(1, H + 1) for slot in slot_order]
    labels = [0] + [i for i in range(1, H + 1) for _ in slot_order]
    x_next = {1: (1 - 2 * rho) / (1 - rho), 2: (rho / 2) / (1 - rho), 3: (rho / 2) / (1 - rho)}
    y_next = {4: 0.5, **{j: 1.0 / (2 * k) for j in range(5, k + 5)}}
    edges = [(0, index(1, slot), target[slot]) for slot in slot_order]
    for i in range(1, H + 1):
        for slot in slot_order:
            src = index(i, slot)
            if i == H:
                edges.append((src, src, 1.0))
                continue
            nxt = x_next if slot <= 3 else y_next
            edges.extend((src, index(i + 1, t), p) for t, p in nxt.items())
    chain = _checked(MarkovChain.from_edges(n, 0, H, edges, layer_labels=labels, names=names))
    marg = time_marginals(chain)
    for i in range(1, H + 1):
        for slot in slot_order:
            got = marg[i, index(i, slot)]
            if abs(got - target[slot]) > GREEDY_MARGINAL_TOL:
                raise ConstructionError(
                    f"layer {i} slot {slot}: marginal {got!r} != target {target[slot]!r}"
                )
    return chain


def random_chain(n_states: int, horizon: int, rng: np.random.Generator, out_degree: int = 3,
                 self_loop_prob: float = 0.2) -> MarkovChain:
    """Random sparse chain starting at state 0.

    Each state gets ``1..out_degree`` random targets with Dirichlet weights;
    with probability ``self_loop_prob`` a state is made absorbing instead.
    """
    edges = []
    for s in range(n_states):
        if s and rng.random() < self_loop_prob:
            edges.append((s, s, 1.0))
            continue
        deg = int(rng.integers(1, min(out_degree, n_states) + 1))
        targets = rng.choice(n_states, size=deg, replace=False)
        w = rng.dirichlet(np.ones(deg))
        edges.extend((s, int(t), float(p)) for t, p in zip(targets, w))
    return _checked(MarkovChain.from_edges(n_states, 0, horizon, edges))


def random_layered_chain(widths, rng: np.random.Generator, out_degree: int = 3) -> MarkovChain:
    """Random layered chain; ``widths[i]`` is the size of layer ``i+1``.

    Layer 0 holds only the start state. Last-layer states are absorbing.
    """
    H = len(widths)
    sizes = [1, *widths]
    offsets = np.cumsum([0, *sizes])
    labels = [i for i, w in enumerate(sizes) for _ in range(w)]
    edges = []
    for i in range(H + 1):
        for s in range(offsets[i], offsets[i + 1]):
            if i == H:
                edges.append((s, s, 1.0))
                continue
            nxt = sizes[i + 1]
            deg = int(rng.integers(1, min(out_degree, nxt) + 1))
            targets = offsets[i + 1] + rng.choice(nxt, size=deg, replace=False)
            w = rng.dirichlet(np.ones(deg))
            edges.extend((s, int(t), float(p)) for t, p in zip(targets, w))
    return _checked(MarkovChain.from_edges(int(offsets[-1]), 0, H, edges, layer_labels=labels))
