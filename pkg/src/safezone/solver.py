"""Finding SafeZone: grow a zone by rejection-sampled trajectories.

Each sampled trajectory that escapes the current zone is accepted with
probability ``1 / new_F(tau)``, so accepted trajectories follow
``Q_F(tau) ~ Pr[tau] / new_F(tau)``. After every acceptance the escape
probability of the grown zone is re-estimated (or computed exactly) and the
loop stops once it is at most ``2 rho + epsilon``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .exact import SafetyReport, count_escapes, exact_escape_probability, hoeffding_sample_size
from .markov import MarkovChain, StateSet, Trajectory, new_count, require_valid, sample_trajectory

DEFAULT_MAX_SAMPLES = 10**8


@dataclass(frozen=True)
class SolverConfig:
    rho: float
    epsilon: float
    lam: float
    safety_mode: str = "estimated"  # "estimated" | "exact"
    max_samples: int | None = None

    def __post_init__(self):
        for name in ("rho", "epsilon", "lam"):
            v = getattr(self, name)
            if not 0.0 < v < 1.0:
                raise ValueError(f"{name} must lie in (0, 1), got {v!r}")
        if self.safety_mode not in ("estimated", "exact"):
            raise ValueError(f"unknown safety_mode {self.safety_mode!r}")
        if self.max_samples is not None and self.max_samples < 1:
            raise ValueError("max_samples must be >= 1")

    @property
    def threshold(self) -> float:
        return 2.0 * self.rho + self.epsilon


@dataclass
class SolverRun:
    zone: StateSet
    final_safety: SafetyReport
    accepted: list[tuple[int, int, Trajectory]] = field(default_factory=list)
    j_schedule: list[tuple[int, float, int]] = field(default_factory=list)
    samples_main: int = 0
    samples_estimator: int = 0
    gb_tallies: list[tuple[int, int]] | None = None
    run_index: int = 0
    amplification: dict | None = None

    @property
    def samples_total(self) -> int:
        return self.samples_main + self.samples_estimator


class BudgetExceeded(RuntimeError):
    """The sample budget ran out; ``run`` holds the partial result."""

    def __init__(self, run: SolverRun, budget: int):
        super().__init__(f"sample budget of {budget} trajectories exhausted with |F|={len(run.zone)}")
        self.run = run
        self.budget = budget


def lambda_j(lam: float, j: int) -> float:
    """Per-estimate failure budget ``3 lam / (2 (j pi)^2)``; sums to ``lam/4``."""
    return 3.0 * lam / (2.0 * (j * math.pi) ** 2)


def sample_envelope(k_star: int, rho: float, epsilon: float, lam: float, horizon: int) -> float:
    """High-probability bound on total trajectories drawn by one run."""
    return (
        4.0 * k_star / (lam * epsilon**2) * math.log(86.0 * (math.pi * k_star) ** 2 / lam**3)
        + 4.0 * horizon * k_star / (rho * lam)
    )


def default_budget(cfg: SolverConfig, horizon: int, k_guess: int | None = None) -> int:
    if cfg.max_samples is not None:
        return cfg.max_samples
    if k_guess is None:
        return DEFAULT_MAX_SAMPLES
    return math.ceil(10 * sample_envelope(k_guess, cfg.rho, cfg.epsilon, cfg.lam, horizon))


def est_safety(
    chain: MarkovChain, zone: StateSet, epsilon: float, lam_j: float, rng: np.random.Generator
) -> SafetyReport:
    """Escaping fraction of ``N_j = ceil(ln(2/lam_j) / (2 eps^2))`` fresh trajectories."""
    n = hoeffding_sample_size(epsilon, lam_j)
    return SafetyReport(count_escapes(chain, zone, n, rng) / n, "monte_carlo", n, epsilon, lam_j)


def accept(traj: Trajectory, zone: StateSet, rng: np.random.Generator) -> int:
    """Rejection step; return ``new_F(traj)`` if accepted, else 0.

    ``new_F = 1`` accepts without consuming a draw.
    """
    nc = new_count(traj, zone)
    if nc == 0:
        return 0
    if nc == 1 or rng.random() * nc < 1.0:
        return nc
    return 0


def draw_accepted(chain: MarkovChain, zone: StateSet, rng: np.random.Generator, max_draws: int | None = None):
    """Sample until one trajectory is accepted at fixed ``zone``.

    Returns ``(trajectory, new_count, draws)``, or ``None`` if ``max_draws``
    trajectories were drawn without an acceptance.
    """
    draws = 0
    while max_draws is None or draws < max_draws:
        traj = sample_trajectory(chain, rng)
        draws += 1
        nc = accept(traj, zone, rng)
        if nc:
            return traj, nc, draws
    return None


def find_safezone(
    chain: MarkovChain,
    cfg: SolverConfig,
    rng: np.random.Generator,
    reference_zone: StateSet | None = None,
    k_guess: int | None = None,
) -> SolverRun:
    """Run Finding SafeZone once.

    In exact mode the estimate is replaced by the exact escape probability,
    including the initial value, so a chain whose start state already forms
    a safe zone returns ``{s0}`` without sampling.

    ``reference_zone`` only records how many added states fall inside/outside
    it (``gb_tallies``); it never affects control flow.

    Raises :class:`BudgetExceeded` once more than the sample budget
    (``cfg.max_samples``, or a default derived from ``k_guess``) would be drawn.
    """
    require_valid(chain)
    budget = default_budget(cfg, chain.horizon, k_guess)
    exact = cfg.safety_mode == "exact"
    zone = StateSet(chain.n_states, [chain.start_state])
    ref_mask = None if reference_zone is None else reference_zone.mask
    run = SolverRun(zone, SafetyReport(1.0, "exact" if exact else "monte_carlo"),
                    gb_tallies=None if ref_mask is None else [])
    if exact:
        run.final_safety = exact_escape_probability(chain, zone)
    j = 1
    iteration = 0
    while run.final_safety.value > cfg.threshold:
        if run.samples_total >= budget:
            raise BudgetExceeded(run, budget)
        traj = sample_trajectory(chain, rng)
        run.samples_main += 1
        iteration += 1
        nc = accept(traj, zone, rng)
        if not nc:
            continue
        if ref_mask is not None:
            fresh = {s for s in traj if not zone.mask[s]}
            good = sum(1 for s in fresh if ref_mask[s])
            run.gb_tallies.append((good, nc - good))
        zone.add(traj)
        run.accepted.append((iteration, nc, traj))
        lj = lambda_j(cfg.lam, j)
        n_j = hoeffding_sample_size(cfg.epsilon, lj)
        run.j_schedule.append((j, lj, n_j))
        j += 1
        if exact:
            run.final_safety = exact_escape_probability(chain, zone)
        else:
            run.final_safety = est_safety(chain, zone, cfg.epsilon, lj, rng)
            run.samples_estimator += n_j
    return run


def amplification_runs(delta: float) -> int:
    """``m = ceil(2 ln(300) / delta)`` repeats."""
    if not 0.0 < delta < 1.0:
        raise ValueError(f"delta must lie in (0, 1), got {delta!r}")
    return math.ceil(2.0 * math.log(300.0) / delta)


def amplified_find(
    chain: MarkovChain, cfg: SolverConfig, delta: float, rng: np.random.Generator
) -> SolverRun:
    """Repeat :func:`find_safezone` and keep the smallest zone.

    Each of the ``m`` runs uses ``lam = 0.01 / (3 m)`` in place of
    ``cfg.lam`` and its own child stream of ``rng``. Ties go to fewer
    samples, then the lower run index. Runs that exhaust the sample budget
    are skipped; if every run does, the last error propagates.
    """
    m = amplification_runs(delta)
    run_cfg = replace(cfg, lam=0.01 / (3 * m))
    children = rng.spawn(m)
    best: SolverRun | None = None
    sizes: list[int | None] = []
    last_error: BudgetExceeded | None = None
    for i, child in enumerate(children):
        try:
            run = find_safezone(chain, run_cfg, child)
        except BudgetExceeded as err:
            sizes.append(None)
            last_error = err
            continue
        run.run_index = i
        sizes.append(len(run.zone))
        if best is None or (len(run.zone), run.samples_total) < (len(best.zone), best.samples_total):
            best = run
    if best is None:
        assert last_error is not None
        raise last_error
    best.amplification = {"m": m, "lambda": run_cfg.lam, "delta": delta, "sizes": sizes}
    return best
