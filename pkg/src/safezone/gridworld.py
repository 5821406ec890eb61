"""Grid-world benchmark: coverage of budgeted zones under two policies.

The agent walks an ``N x N`` grid from ``(0, N//2)`` to the absorbing goal
``(N-1, N//2)``. Every action succeeds with probability 0.9; otherwise the
agent drifts one cell down. Moves off the grid leave that coordinate
unchanged. States are indexed row-major, ``index = y * N + x``, with ``y = 0``
the bottom row.

Each algorithm is given a budget ``k`` and must return at most ``k`` states:

* ``threshold``: the ``k`` states with the highest visit probability.
* ``simulation``: training trajectories are added in order until the next
  one would push the zone past ``k``.
* ``greedy``: greedy-at-each-step on the exact per-step marginals, with the
  smallest ``rho`` whose union still fits in ``k``.
* ``find-safezone``: the rejection-sampling loop over the training set;
  trajectories that would overshoot the budget are skipped, and the loop
  ends after 50 consecutive skips.

A budget of at least ``N*N`` returns the whole grid for every algorithm.
"""

from __future__ import annotations

import csv
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .baselines import step_prefix_lengths
from .exact import time_marginals, visit_probabilities
from .markov import MarkovChain, MdpWithPolicy, StateSet, induce_chain, sample_trajectories
from .rng import stream

ACTIONS = ("up", "down", "right", "left")
UP, DOWN, RIGHT, LEFT = range(4)
ALGORITHMS = ("find-safezone", "greedy", "simulation", "threshold")
POLICIES = ("right-up", "middle-right")
MAX_SKIPS = 50


@dataclass(frozen=True)
class GridConfig:
    N: int = 30
    horizon: int = 300
    intended_prob: float = 0.9
    drift_prob: float = 0.1
    episodes_train: int = 2000
    episodes_test: int = 2000

    def __post_init__(self):
        if self.N < 2:
            raise ValueError("grid side N must be at least 2")
        if abs(self.intended_prob + self.drift_prob - 1.0) > 1e-12:
            raise ValueError("intended_prob + drift_prob must equal 1")

    @property
    def n_states(self) -> int:
        return self.N * self.N

    @property
    def middle(self) -> int:
        return self.N // 2

    def index(self, x: int, y: int) -> int:
        return y * self.N + x

    def coords(self, s: int) -> tuple[int, int]:
        return s % self.N, s // self.N

    @property
    def start_state(self) -> int:
        return self.index(0, self.middle)

    @property
    def goal_state(self) -> int:
        return self.index(self.N - 1, self.middle)


@dataclass(frozen=True)
class GridWorld:
    cfg: GridConfig
    action_transitions: list

    def with_policy(self, policy: np.ndarray) -> MdpWithPolicy:
        cfg = self.cfg
        return MdpWithPolicy(
            cfg.n_states, cfg.start_state, len(ACTIONS), self.action_transitions,
            np.asarray(policy, dtype=float), cfg.horizon,
        )

    def chain(self, policy: np.ndarray) -> MarkovChain:
        return induce_chain(self.with_policy(policy))


def _move(cfg: GridConfig, x: int, y: int, action: int) -> tuple[int, int]:
    dx, dy = {UP: (0, 1), DOWN: (0, -1), RIGHT: (1, 0), LEFT: (-1, 0)}[action]
    return min(max(x + dx, 0), cfg.N - 1), min(max(y + dy, 0), cfg.N - 1)


def build_gridworld(cfg: GridConfig = GridConfig()) -> GridWorld:
    table = []
    for s in range(cfg.n_states):
        x, y = cfg.coords(s)
        rows = []
        for a in range(len(ACTIONS)):
            if s == cfg.goal_state:
                rows.append([(s, 1.0)])
                continue
            out: dict[int, float] = {}
            for (nx, ny), p in ((_move(cfg, x, y, a), cfg.intended_prob),
                                (_move(cfg, x, y, DOWN), cfg.drift_prob)):
                t = cfg.index(nx, ny)
                out[t] = out.get(t, 0.0) + p
            rows.append(sorted(out.items()))
        table.append(rows)
    return GridWorld(cfg, table)


def _deterministic(cfg: GridConfig, choose) -> np.ndarray:
    policy = np.zeros((cfg.n_states, len(ACTIONS)))
    for s in range(cfg.n_states):
        policy[s, choose(*cfg.coords(s))] = 1.0
    return policy


def policy_right_then_up(cfg: GridConfig) -> np.ndarray:
    """Right until the last column, then straight for the goal row."""
    def choose(x, y):
        if x < cfg.N - 1 or y == cfg.middle:
            return RIGHT
        return UP if y < cfg.middle else DOWN
    return _deterministic(cfg, choose)


def policy_middle_then_right(cfg: GridConfig) -> np.ndarray:
    """Back to the middle row first, then right along it."""
    def choose(x, y):
        if y == cfg.middle:
            return RIGHT
        return UP if y < cfg.middle else DOWN
    return _deterministic(cfg, choose)


def make_policy(name: str, cfg: GridConfig) -> np.ndarray:
    if name == "right-up":
        return policy_right_then_up(cfg)
    if name == "middle-right":
        return policy_middle_then_right(cfg)
    raise ValueError(f"unknown policy {name!r}; expected one of {POLICIES}")


def coverage(test_trajectories, zone: StateSet) -> float:
    """Fraction of test trajectories lying entirely inside ``zone``."""
    trajs = np.asarray(test_trajectories)
    if trajs.size == 0:
        raise ValueError("coverage of an empty test set is undefined")
    return float(zone.mask[trajs].all(axis=1).mean())


# ---------------------------------------------------------------- budgeted

def threshold_budgeted(visit_probs, k: int) -> StateSet:
    p = np.asarray(visit_probs, dtype=float)
    order = np.lexsort((np.arange(p.size), -p))
    return StateSet(p.size, order[: min(k, p.size)].tolist())


def simulation_budgeted(train: np.ndarray, n_states: int, start: int, k: int) -> StateSet:
    zone = StateSet(n_states, [start])
    for traj in train:
        fresh = np.unique(traj[~zone.mask[traj]])
        if len(zone) + fresh.size > k:
            break
        zone.add(fresh.tolist())
    return zone


def greedy_budgeted(marginals: np.ndarray, start: int, k: int, iters: int = 60) -> StateSet:
    """Largest greedy-at-each-step union with at most ``k`` states."""
    n = marginals.shape[1]
    order, _ = step_prefix_lengths(marginals, 0.0)
    rank = np.empty_like(order)
    rows = np.arange(order.shape[0])[:, None]
    rank[rows, order] = np.arange(n)[None, :]
    cum = np.cumsum(np.take_along_axis(marginals, order, axis=1), axis=1)

    def union(rho: float) -> np.ndarray:
        need = 1.0 - rho - 1e-12
        # Shortest prefix with mass >= need; empty once need <= 0.
        lengths = np.minimum((cum < need).sum(axis=1) + (need > 0), n)
        mask = (rank < lengths[:, None]).any(axis=0)
        mask[start] = True
        return mask

    lo, hi = 0.0, 1.0  # union(hi) is {s0}; invariant: union(hi) fits
    best = union(hi)
    if union(lo).sum() <= k:
        return StateSet.from_mask(union(lo))
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        m = union(mid)
        if m.sum() <= k:
            hi, best = mid, m
        else:
            lo = mid
    return StateSet.from_mask(best)


def safezone_budgeted(train: np.ndarray, n_states: int, start: int, k: int,
                      rng: np.random.Generator, max_skips: int = MAX_SKIPS) -> StateSet:
    """Finding SafeZone's acceptance loop on the empirical training distribution."""
    pool = np.asarray(train)
    width = max(len(np.unique(row)) for row in pool)
    uniq = np.full((len(pool), width), start, dtype=np.int64)
    for i, row in enumerate(pool):
        u = np.unique(row)
        uniq[i, : u.size] = u
    mask = np.zeros(n_states, dtype=bool)
    mask[start] = True
    size = 1
    newc = (~mask[uniq]).sum(axis=1)
    skips = 0
    while size < k:
        remaining = k - size
        fits = (newc > 0) & (newc <= remaining)
        if not fits.any():
            break
        i = int(rng.integers(len(pool)))
        nc = int(newc[i])
        if nc == 0:
            continue
        if nc > remaining:
            skips += 1
            if skips >= max_skips:
                break
            continue
        if nc > 1 and rng.random() * nc >= 1.0:
            continue
        mask[uniq[i]] = True
        size += nc
        newc = (~mask[uniq]).sum(axis=1)
        skips = 0
    return StateSet.from_mask(mask)


# ---------------------------------------------------------------- benchmark

@dataclass
class CoverageCurve:
    algorithm: str
    points: list[tuple[int, float]] = field(default_factory=list)
    stderr: list[float] = field(default_factory=list)


@dataclass
class BenchmarkResult:
    policy: str
    rows: list[tuple[str, int, int, float]]  # (algorithm, k, seed, coverage)
    curves: list[CoverageCurve]
    relative: list[CoverageCurve]  # coverage minus greedy's, per k

    def curve(self, algorithm: str) -> CoverageCurve:
        return next(c for c in self.curves if c.algorithm == algorithm)

    def mean(self, algorithm: str, k: int) -> float:
        return dict(self.curve(algorithm).points)[k]


def _worker_count() -> int:
    env = os.environ.get("SAFEZONE_THREADS")
    if env:
        return max(1, int(env))
    return os.cpu_count() or 1


class _Prepared:
    """Exact per-policy quantities shared by all seeds."""

    def __init__(self, cfg: GridConfig, policy: np.ndarray):
        self.cfg = cfg
        self.chain = build_gridworld(cfg).chain(policy)
        self.visit = visit_probabilities(self.chain)
        self.marginals = time_marginals(self.chain)


def _cell(prep: _Prepared, seed: int, k_grid, algorithms):
    cfg = prep.cfg
    n, s0 = cfg.n_states, cfg.start_state
    train = sample_trajectories(prep.chain, stream(seed, "train"), cfg.episodes_train)
    test = sample_trajectories(prep.chain, stream(seed, "test-set"), cfg.episodes_test)
    out = []
    for alg in algorithms:
        for k in k_grid:
            if k >= n:
                zone = StateSet.full(n)
            elif alg == "threshold":
                zone = threshold_budgeted(prep.visit, k)
            elif alg == "simulation":
                zone = simulation_budgeted(train, n, s0, k)
            elif alg == "greedy":
                zone = greedy_budgeted(prep.marginals, s0, k)
            elif alg == "find-safezone":
                zone = safezone_budgeted(train, n, s0, k, stream(seed, "main", k))
            else:
                raise ValueError(f"unknown algorithm {alg!r}")
            assert len(zone) <= k
            out.append((alg, k, seed, coverage(test, zone)))
    return out


def run_benchmark(cfg: GridConfig, policy: str, k_grid, seeds, algorithms=ALGORITHMS) -> BenchmarkResult:
    """Coverage of every budgeted algorithm for each ``k`` and seed.

    ``seeds`` is an iterable of integer seeds (an int ``s`` means ``range(s)``).
    """
    if isinstance(seeds, int):
        seeds = range(seeds)
    k_grid = sorted(set(int(k) for k in k_grid))
    if not k_grid or k_grid[0] < 1:
        raise ValueError("k_grid needs positive budgets")
    prep = _Prepared(cfg, make_policy(policy, cfg))
    seeds = list(seeds)
    workers = min(_worker_count(), len(seeds))
    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            chunks = list(pool.map(lambda s: _cell(prep, s, k_grid, algorithms), seeds))
    else:
        chunks = [_cell(prep, s, k_grid, algorithms) for s in seeds]
    rows = sorted((r for chunk in chunks for r in chunk), key=lambda r: (ALGORITHMS.index(r[0]), r[1], r[2]))
    curves, relative = _aggregate(rows, algorithms, k_grid)
    return BenchmarkResult(policy, rows, curves, relative)


def _aggregate(rows, algorithms, k_grid):
    by = {}
    for alg, k, seed, cov in rows:
        by.setdefault((alg, k), {})[seed] = cov
    curves, relative = [], []
    for alg in algorithms:
        curve = CoverageCurve(alg)
        rel = CoverageCurve(alg)
        for k in k_grid:
            vals = np.array(list(by[(alg, k)].values()))
            curve.points.append((k, float(vals.mean())))
            curve.stderr.append(float(vals.std(ddof=1) / math.sqrt(vals.size)) if vals.size > 1 else 0.0)
            if "greedy" in algorithms:
                g = by[("greedy", k)]
                diffs = np.array([by[(alg, k)][s] - g[s] for s in g])
                rel.points.append((k, float(diffs.mean())))
                rel.stderr.append(float(diffs.std(ddof=1) / math.sqrt(diffs.size)) if diffs.size > 1 else 0.0)
        curves.append(curve)
        relative.append(rel)
    return curves, relative


def write_rows_csv(result: BenchmarkResult, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["algorithm", "k", "seed", "coverage"])
        for alg, k, seed, cov in result.rows:
            w.writerow([alg, k, seed, repr(cov)])


def write_aggregate_csv(result: BenchmarkResult, path) -> None:
    rel = {c.algorithm: c for c in result.relative}
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["algorithm", "k", "mean", "stderr", "delta_vs_greedy", "delta_stderr"])
        for curve in result.curves:
            r = rel.get(curve.algorithm)
            for i, ((k, mean), se) in enumerate(zip(curve.points, curve.stderr)):
                d = (r.points[i][1], r.stderr[i]) if r and r.points else ("", "")
                w.writerow([curve.algorithm, k, repr(mean), repr(se),
                            *(repr(v) if v != "" else v for v in d)])
