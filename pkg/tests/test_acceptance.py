"""Acceptance criteria, one test each.

Every test appends a ``PASS``/``FAIL`` line to the terminal summary (and
prints it) before asserting, so a full run lists all thirteen verdicts.
"""

import math
import time

import networkx as nx
import numpy as np
import pytest

from conftest import ACCEPTANCE_LINES, coin_chain
from oracles import escape_by_enumeration
from safezone.baselines import greedy_by_threshold, greedy_each_step
from safezone.exact import exact_escape_probability, monte_carlo_escape, visit_probabilities
from safezone.gridworld import GridConfig, run_benchmark
from safezone.instances import gen_threshold_lowerbound, random_chain, random_layered_chain
from safezone.markov import MarkovChain, StateSet
from safezone.oracle import brute_force_kstar
from safezone.reduction import RegularGraph, has_clique, regular_clique_via_safezone
from safezone.rng import stream
from safezone.solver import SolverConfig, amplified_find, draw_accepted, find_safezone

pytestmark = pytest.mark.acceptance

TOL = 1e-12


def verdict(number: int, ok: bool, detail: str) -> None:
    line = f"[{'PASS' if ok else 'FAIL'}] criterion {number:2d}: {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    assert ok, line


def solver_instances():
    """The three small instances shared by the size and amplification checks."""
    return [
        ("hub(0.3,3,3)", gen_threshold_lowerbound(0.3, 3, 3), 0.1),
        ("random(8,4)", random_chain(8, 4, np.random.default_rng(11)), 0.2),
        ("layered(3,3,3)", random_layered_chain([3, 3, 3], np.random.default_rng(5)), 0.2),
    ]


def test_01_exact_dp_matches_enumeration():
    t0 = time.perf_counter()
    rng = np.random.default_rng(101)
    worst, count = 0.0, 0
    for _ in range(150):
        n, H = int(rng.integers(1, 7)), int(rng.integers(1, 6))
        chain = random_chain(n, H, rng)
        members = [0] + [s for s in range(n) if rng.random() < 0.5]
        got = exact_escape_probability(chain, StateSet(n, members)).value
        worst = max(worst, abs(got - escape_by_enumeration(chain, members)))
        count += 1
    elapsed = time.perf_counter() - t0
    verdict(1, worst <= 1e-12 and elapsed < 5.0,
            f"{count} chains, max |DP - enumeration| = {worst:.2e} (<= 1e-12), {elapsed:.2f}s (< 5s)")


def _chain_with_escape(target: float, kind: int) -> MarkovChain:
    if kind == 0:
        return coin_chain(target)
    if kind == 1:  # three steps, equal per-step leak q with 1 - (1-q)^3 = target
        q = 1.0 - (1.0 - target) ** (1 / 3)
        edges = [(0, 0, 1 - q), (0, 1, q), (1, 1, 1.0)]
        return MarkovChain.from_edges(2, 0, 3, edges)
    edges = [(0, 1, 1 - target), (0, 2, target), (1, 3, 1.0), (2, 4, 1.0), (3, 3, 1.0), (4, 4, 1.0)]
    return MarkovChain.from_edges(5, 0, 2, edges, layer_labels=[0, 1, 1, 2, 2])


def _safe_part(chain: MarkovChain) -> StateSet:
    return StateSet(chain.n_states, [0] if chain.n_states == 2 else [0, 1, 3])


def test_02_estimator_calibration():
    t0 = time.perf_counter()
    rates, exact_ok = [], True
    for kind, delta in enumerate((0.1, 0.3, 0.5)):
        chain = _chain_with_escape(delta, kind)
        zone = _safe_part(chain)
        exact = exact_escape_probability(chain, zone).value
        exact_ok &= abs(exact - delta) <= TOL
        rng = stream(2, "estimator", kind)
        misses = sum(abs(monte_carlo_escape(chain, zone, 0.05, 0.1, rng).value - exact) > 0.05 for _ in range(200))
        rates.append(misses / 200)
    elapsed = time.perf_counter() - t0
    verdict(2, exact_ok and max(rates) <= 0.1 and elapsed < 60,
            f"failure rates {rates} (<= 0.1) at Delta 0.1/0.3/0.5, {elapsed:.1f}s (< 60s)")


def test_03_threshold_bound():
    t0 = time.perf_counter()
    rng = np.random.default_rng(303)
    bad = []
    for i in range(20):
        chain = random_chain(int(rng.integers(4, 11)), int(rng.integers(2, 5)), rng)
        rho = float(rng.choice([0.1, 0.2, 0.3]))
        k = brute_force_kstar(chain, rho).k_star
        beta = rho / k
        zone = greedy_by_threshold(visit_probabilities(chain), beta).zone
        esc = exact_escape_probability(chain, zone).value
        if esc > 2 * rho + TOL or len(zone) > (chain.horizon + 1) / beta:
            bad.append(i)
    elapsed = time.perf_counter() - t0
    verdict(3, not bad and elapsed < 30,
            f"20 chains, violations of Delta <= 2 rho or |F| <= (H+1)/beta: {bad}, {elapsed:.1f}s (< 30s)")


def test_04_threshold_tightness():
    rho, H, k = 0.3, 5, 3
    chain = gen_threshold_lowerbound(rho, H, k)
    zone = greedy_by_threshold(visit_probabilities(chain), rho / k).zone
    res = brute_force_kstar(chain, rho)
    ok = len(zone) == chain.n_states and res.k_star <= k and res.escape <= rho + TOL
    verdict(4, ok, f"threshold keeps {len(zone)}/{chain.n_states} states; oracle k* = {res.k_star} <= {k}")


def test_05_greedy_each_step_bound():
    rng = np.random.default_rng(505)
    bad = []
    for i in range(20):
        widths = [int(w) for w in rng.integers(1, 5, size=int(rng.integers(2, 6)))]
        chain = random_layered_chain(widths, rng)
        rho = float(rng.choice([0.1, 0.2, 0.3]))
        k = brute_force_kstar(chain, rho).k_star
        zone = greedy_each_step(chain, rho).zone
        esc = exact_escape_probability(chain, zone).value
        if len(zone) > k or esc > min(1.0, rho * chain.horizon) + TOL:
            bad.append(i)
    verdict(5, not bad, f"20 layered chains, violations of |F| <= k* or Delta <= min(1, rho H): {bad}")


def test_06_exact_mode_safety_certificate():
    t0 = time.perf_counter()
    rng = np.random.default_rng(606)
    instances = [(c, r) for _, c, r in solver_instances()]
    while len(instances) < 10:
        instances.append((random_chain(int(rng.integers(5, 16)), int(rng.integers(2, 7)), rng),
                          float(rng.choice([0.05, 0.1, 0.2]))))
    eps, worst_gap, runs = 0.05, -1.0, 0
    for idx, (chain, rho) in enumerate(instances):
        cfg = SolverConfig(rho, eps, 0.1, "exact")
        for s in range(20):
            run = find_safezone(chain, cfg, stream(s, "main", idx))
            esc = exact_escape_probability(chain, run.zone).value
            worst_gap = max(worst_gap, esc - (2 * rho + eps))
            runs += 1
    elapsed = time.perf_counter() - t0
    verdict(6, worst_gap <= 0 and elapsed < 60,
            f"{runs} runs on 10 instances, max Delta(F) - (2 rho + eps) = {worst_gap:.3g} (<= 0), {elapsed:.1f}s")


def test_07_expected_size():
    t0 = time.perf_counter()
    parts, ok = [], True
    for idx, (name, chain, rho) in enumerate(solver_instances()):
        k = brute_force_kstar(chain, rho).k_star
        cfg = SolverConfig(rho, 0.05, 0.1, "exact")
        sizes = np.array([len(find_safezone(chain, cfg, stream(s, "main", idx)).zone) for s in range(200)])
        se = sizes.std(ddof=1) / math.sqrt(sizes.size)
        ok &= sizes.mean() <= 2 * k + 3 * se
        parts.append(f"{name}: mean {sizes.mean():.2f} vs 2k*={2 * k}")
    elapsed = time.perf_counter() - t0
    verdict(7, ok and elapsed < 300, "; ".join(parts) + f"; {elapsed:.1f}s")


def test_08_amplification():
    t0 = time.perf_counter()
    parts, ok = [], True
    for idx, (name, chain, rho) in enumerate(solver_instances()):
        k = brute_force_kstar(chain, rho).k_star
        bound = (7 * k) // 3
        cfg = SolverConfig(rho, 0.05, 0.1)
        hits, m = 0, None
        for s in range(100):
            run = amplified_find(chain, cfg, 1 / 3, stream(s, "amplify", idx))
            m = run.amplification["m"]
            hits += len(run.zone) <= bound
        ok &= hits >= 95 and m == 35
        parts.append(f"{name}: {hits}/100 within floor(7k*/3)={bound}")
    elapsed = time.perf_counter() - t0
    verdict(8, ok and elapsed < 1200, "; ".join(parts) + f"; m=35, {elapsed:.1f}s")


def test_09_good_bad_balance():
    t0 = time.perf_counter()
    _, chain, rho = solver_instances()[0]
    f_star = brute_force_kstar(chain, rho).witness
    cfg = SolverConfig(rho, 0.05, 0.1, "exact")
    diffs = []
    seed = 0
    while len(diffs) < 10_000:
        run = find_safezone(chain, cfg, stream(seed, "main", 9), reference_zone=f_star)
        diffs.extend(b - g for g, b in run.gb_tallies)
        seed += 1
    d = np.array(diffs, dtype=float)
    se = d.std(ddof=1) / math.sqrt(d.size)
    elapsed = time.perf_counter() - t0
    verdict(9, d.mean() <= 3 * se and elapsed < 300,
            f"{d.size} iterations over {seed} runs, mean(B) - mean(G) = {d.mean():.3f} <= 3 SE = {3 * se:.3f}")


def test_10_rejection_realizes_q():
    t0 = time.perf_counter()
    # 0 -> 1 (stays), 0 -> 2 -> 3, 0 -> 4 -> 5 -> 6, 0 -> 7 (inside the zone).
    edges = [(0, 1, 0.2), (0, 2, 0.3), (0, 4, 0.4), (0, 7, 0.1),
             (1, 1, 1.0), (2, 3, 1.0), (3, 3, 1.0), (4, 5, 1.0), (5, 6, 1.0), (6, 6, 1.0), (7, 7, 1.0)]
    chain = MarkovChain.from_edges(8, 0, 3, edges)
    zone = StateSet(8, [0, 7])
    first = {1: 0, 2: 1, 4: 2}
    weights = np.array([0.2 / 1, 0.3 / 2, 0.4 / 3])
    q = weights / weights.sum()
    n = 100_000
    rng = stream(10, "main")
    counts = np.zeros(3)
    for _ in range(n):
        traj, nc, _ = draw_accepted(chain, zone, rng)
        counts[first[traj[1]]] += 1
    sigma = np.sqrt(n * q * (1 - q))
    z = np.abs(counts - n * q) / sigma
    elapsed = time.perf_counter() - t0
    verdict(10, bool((z <= 3).all()) and elapsed < 60,
            f"acceptance frequencies {np.round(counts / n, 4).tolist()} vs {np.round(q, 4).tolist()}, "
            f"max |z| = {z.max():.2f} (<= 3), {elapsed:.1f}s")


def _graphs():
    yield "K4", nx.complete_graph(4)
    yield "C5", nx.cycle_graph(5)
    yield "K3,3", nx.complete_bipartite_graph(3, 3)
    yield "Petersen", nx.petersen_graph()
    shapes = [(6, 3), (8, 3), (8, 4), (10, 3), (9, 4), (10, 4), (7, 4), (6, 4), (10, 5), (8, 5)]
    for i in range(20):
        n, d = shapes[i % len(shapes)]
        yield f"random{i}({n},{d})", nx.random_regular_graph(d, n, seed=1100 + i)


def test_11_clique_reduction():
    t0 = time.perf_counter()
    mismatches, checks = [], 0
    for name, g in _graphs():
        graph = RegularGraph.from_edges(g.number_of_nodes(), g.edges())
        omega = max(len(c) for c in nx.find_cliques(g))
        for k in range(2, min(graph.n_vertices, 5) + 1):
            via = regular_clique_via_safezone(graph, k)
            checks += 1
            if via != (omega >= k) or via != has_clique(graph, k):
                mismatches.append((name, k))
    elapsed = time.perf_counter() - t0
    verdict(11, not mismatches and elapsed < 120,
            f"24 graphs, {checks} (graph, k_c) checks, mismatches: {mismatches}, {elapsed:.1f}s (< 120s)")


def test_12_grid_right_then_up():
    t0 = time.perf_counter()
    cfg = GridConfig(N=30, horizon=300, episodes_train=2000, episodes_test=2000)
    res = run_benchmark(cfg, "right-up", [60, 250], range(5), ("find-safezone", "greedy"))
    fsz, greedy = res.mean("find-safezone", 250), res.mean("greedy", 60)
    elapsed = time.perf_counter() - t0
    verdict(12, fsz >= 0.75 and greedy <= 0.05 and elapsed < 600,
            f"find-safezone@250 = {fsz:.4f} (>= 0.75); greedy@60 = {greedy:.4f} (<= 0.05); {elapsed:.1f}s")


def test_13_grid_middle_then_right():
    t0 = time.perf_counter()
    cfg = GridConfig(N=30, horizon=300, episodes_train=2000, episodes_test=2000)
    k = -(-14 * cfg.n_states // 100)  # ceil(0.14 n) without float rounding
    algs = ("find-safezone", "simulation", "greedy")
    res = run_benchmark(cfg, "middle-right", [k], range(5), algs)
    means = {a: res.mean(a, k) for a in algs}
    elapsed = time.perf_counter() - t0
    verdict(13, k == 126 and min(means.values()) >= 0.80 and elapsed < 600,
            f"k={k}: " + ", ".join(f"{a} {v:.4f}" for a, v in means.items()) + f" (all >= 0.80); {elapsed:.1f}s")
