"""Finite-horizon Markov chains, zones and trajectory sampling."""

from __future__ import annotations

from bisect import bisect_right
from collections.abc import Iterable, Iterator, Sequence
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from scipy import sparse

ROW_SUM_TOL = 1e-9

Trajectory = tuple[int, ...]


class InvalidChainError(ValueError):
    """Raised when an operation receives a chain that fails validation."""

    def __init__(self, diagnostic: Diagnostic):
        super().__init__(str(diagnostic))
        self.diagnostic = diagnostic


@dataclass(frozen=True)
class Diagnostic:
    """First violated chain invariant."""

    kind: str
    state: int | None = None
    edge: tuple[int, int] | None = None
    detail: str = ""

    def __str__(self) -> str:
        parts = [self.kind]
        if self.state is not None:
            parts.append(f"state {self.state}")
        if self.edge is not None:
            parts.append(f"edge {self.edge[0]}->{self.edge[1]}")
        if self.detail:
            parts.append(self.detail)
        return ": ".join(parts)


@dataclass(frozen=True, eq=False)
class MarkovChain:
    """Markov chain ``<S, P, s0>`` with horizon ``H``.

    Transitions are stored in CSR form: the outgoing edges of state ``s`` are
    ``targets[indptr[s]:indptr[s+1]]`` with probabilities ``probs[...]``,
    sorted by target. Zero-probability edges are dropped on construction.
    Use :meth:`from_edges` or :meth:`from_matrix` rather than the raw
    constructor.
    """

    n_states: int
    start_state: int
    horizon: int
    indptr: np.ndarray
    targets: np.ndarray
    probs: np.ndarray
    layer_labels: np.ndarray | None = None
    names: tuple[str, ...] | None = field(default=None)

    def __post_init__(self):
        for arr in (self.indptr, self.targets, self.probs, self.layer_labels):
            if arr is not None:
                arr.setflags(write=False)

    @classmethod
    def from_edges(
        cls,
        n_states: int,
        start_state: int,
        horizon: int,
        edges: Iterable[tuple[int, int, float]],
        layer_labels: Sequence[int] | None = None,
        names: Sequence[str] | None = None,
    ) -> MarkovChain:
        """Build a chain from ``(src, dst, prob)`` triples.

        Repeated ``(src, dst)`` pairs are summed. Nothing is validated here;
        call :func:`validate_chain` to check the result.
        """
        rows: list[dict[int, float]] = [dict() for _ in range(max(n_states, 0))]
        for src, dst, p in edges:
            src, dst, p = int(src), int(dst), float(p)
            if not 0 <= src < n_states:
                raise ValueError(f"source state {src} out of range [0, {n_states})")
            if p == 0.0:
                continue
            rows[src][dst] = rows[src].get(dst, 0.0) + p
        indptr = np.zeros(max(n_states, 0) + 1, dtype=np.int64)
        targets: list[int] = []
        probs: list[float] = []
        for s, row in enumerate(rows):
            for dst in sorted(row):
                targets.append(dst)
                probs.append(row[dst])
            indptr[s + 1] = len(targets)
        labels = None if layer_labels is None else np.asarray(layer_labels, dtype=np.int64)
        return cls(
            n_states=int(n_states),
            start_state=int(start_state),
            horizon=int(horizon),
            indptr=indptr,
            targets=np.asarray(targets, dtype=np.int64),
            probs=np.asarray(probs, dtype=float),
            layer_labels=labels,
            names=None if names is None else tuple(names),
        )

    @classmethod
    def from_matrix(cls, P, start_state: int, horizon: int, layer_labels=None) -> MarkovChain:
        P = np.asarray(P, dtype=float)
        src, dst = np.nonzero(P)
        return cls.from_edges(
            P.shape[0], start_state, horizon,
            zip(src.tolist(), dst.tolist(), P[src, dst].tolist()),
            layer_labels=layer_labels,
        )

    def row(self, s: int) -> tuple[np.ndarray, np.ndarray]:
        lo, hi = self.indptr[s], self.indptr[s + 1]
        return self.targets[lo:hi], self.probs[lo:hi]

    def edges(self) -> Iterator[tuple[int, int, float]]:
        for s in range(self.n_states):
            t, p = self.row(s)
            for dst, prob in zip(t.tolist(), p.tolist()):
                yield s, dst, prob

    @property
    def n_edges(self) -> int:
        return int(self.targets.size)

    @property
    def is_layered(self) -> bool:
        return self.layer_labels is not None

    @cached_property
    def sources(self) -> np.ndarray:
        return np.repeat(np.arange(self.n_states), np.diff(self.indptr))

    @cached_property
    def transition_matrix(self) -> sparse.csr_matrix:
        """``P`` as a sparse ``n x n`` matrix."""
        return sparse.csr_matrix(
            (self.probs, self.targets, self.indptr), shape=(self.n_states, self.n_states)
        )

    @cached_property
    def diagnostic(self) -> Diagnostic | None:
        return validate_chain(self)

    def renormalized(self) -> MarkovChain:
        """Copy with each nonempty row scaled to sum to exactly 1."""
        sums = np.add.reduceat(self.probs, self.indptr[:-1]) if self.n_edges else np.zeros(0)
        sums = np.where(np.diff(self.indptr) > 0, sums, 1.0)
        probs = self.probs / np.repeat(sums, np.diff(self.indptr))
        return MarkovChain(
            self.n_states, self.start_state, self.horizon, self.indptr.copy(),
            self.targets.copy(), probs, None if self.layer_labels is None else self.layer_labels.copy(),
            self.names,
        )

    # Sampling tables: per-row cumulative probabilities with the last entry
    # pinned to 1.0 so rounding can never fall off the end of a row.
    @cached_property
    def _row_tables(self) -> list[tuple[list[int], list[float]]]:
        tables = []
        for s in range(self.n_states):
            t, p = self.row(s)
            cum = np.cumsum(p)
            if cum.size:
                cum[-1] = 1.0
            tables.append((t.tolist(), cum.tolist()))
        return tables

    @cached_property
    def _global_cum(self) -> np.ndarray:
        cum = np.empty(self.n_edges)
        for s in range(self.n_states):
            lo, hi = self.indptr[s], self.indptr[s + 1]
            if hi > lo:
                c = np.cumsum(self.probs[lo:hi])
                c[-1] = 1.0
                cum[lo:hi] = s + c
        return cum


def require_valid(chain: MarkovChain) -> MarkovChain:
    if chain.diagnostic is not None:
        raise InvalidChainError(chain.diagnostic)
    return chain


def validate_chain(chain: MarkovChain) -> Diagnostic | None:
    """Return ``None`` if every chain invariant holds, else the first violation."""
    n = chain.n_states
    if n < 1:
        return Diagnostic("state count", detail=f"n_states={n}")
    if chain.horizon < 1:
        return Diagnostic("horizon", detail=f"horizon={chain.horizon}")
    if not 0 <= chain.start_state < n:
        return Diagnostic("start state", chain.start_state, detail="out of range")
    for s in range(n):
        t, p = chain.row(s)
        if t.size == 0:
            return Diagnostic("row sum", s, detail="no outgoing transitions")
        out = np.flatnonzero((t < 0) | (t >= n))
        if out.size:
            return Diagnostic("target range", s, (s, int(t[out[0]])))
        out = np.flatnonzero(~((p >= 0.0) & (p <= 1.0)))
        if out.size:
            return Diagnostic("probability range", s, (s, int(t[out[0]])), f"p={p[out[0]]!r}")
        total = float(p.sum())
        if abs(total - 1.0) > ROW_SUM_TOL:
            return Diagnostic("row sum", s, detail=f"sum={total!r}")
    labels = chain.layer_labels
    if labels is not None:
        if labels.shape != (n,):
            return Diagnostic("layer labels", detail=f"expected {n} labels, got {labels.size}")
        bad = np.flatnonzero((labels < 0) | (labels > chain.horizon))
        if bad.size:
            return Diagnostic("layer labels", int(bad[0]), detail=f"layer={labels[bad[0]]}")
        if labels[chain.start_state] != 0:
            return Diagnostic("layer violation", chain.start_state, detail="start state not in layer 0")
        src, dst = chain.sources, chain.targets
        bad = np.flatnonzero(labels[dst] != labels[src] + 1)
        # The last layer may close with arbitrary edges: they lie past the horizon.
        bad = bad[labels[src[bad]] != chain.horizon]
        if bad.size:
            e = int(bad[0])
            return Diagnostic(
                "layer violation", int(src[e]), (int(src[e]), int(dst[e])),
                f"layer {labels[src[e]]} -> {labels[dst[e]]}",
            )
    return None


class StateSet:
    """A subset of ``range(n_states)`` backed by a boolean mask."""

    __slots__ = ("mask", "_size")

    def __init__(self, n_states: int, indices: Iterable[int] = ()):
        self.mask = np.zeros(n_states, dtype=bool)
        idx = np.fromiter((int(i) for i in indices), dtype=np.int64)
        if idx.size and (idx.min() < 0 or idx.max() >= n_states):
            raise ValueError(f"state index out of range [0, {n_states})")
        self.mask[idx] = True
        self._size = int(np.count_nonzero(self.mask))

    @classmethod
    def full(cls, n_states: int) -> StateSet:
        return cls.from_mask(np.ones(n_states, dtype=bool))

    @classmethod
    def from_mask(cls, mask) -> StateSet:
        out = cls(len(mask))
        out.mask[:] = np.asarray(mask, dtype=bool)
        out._size = int(np.count_nonzero(out.mask))
        return out

    @property
    def n_states(self) -> int:
        return self.mask.size

    def add(self, states: Iterable[int]) -> int:
        """Insert ``states``; return how many were new."""
        added = 0
        mask = self.mask
        for s in states:
            if not mask[s]:
                mask[s] = True
                added += 1
        self._size += added
        return added

    def copy(self) -> StateSet:
        return StateSet.from_mask(self.mask.copy())

    def indices(self) -> list[int]:
        return np.flatnonzero(self.mask).tolist()

    def __contains__(self, s) -> bool:
        return bool(self.mask[s])

    def __len__(self) -> int:
        return self._size

    def __iter__(self) -> Iterator[int]:
        return iter(self.indices())

    def __eq__(self, other) -> bool:
        if not isinstance(other, StateSet):
            return NotImplemented
        return self.mask.shape == other.mask.shape and bool(np.array_equal(self.mask, other.mask))

    def __le__(self, other: StateSet) -> bool:
        return not np.any(self.mask & ~other.mask)

    def __repr__(self) -> str:
        return f"StateSet({self.n_states}, {self.indices()})"


def escapes(traj: Sequence[int], zone: StateSet) -> bool:
    """True iff some state of ``traj`` lies outside ``zone``."""
    mask = zone.mask
    return not all(mask[s] for s in traj)


def new_count(traj: Sequence[int], zone: StateSet) -> int:
    """Number of distinct states of ``traj`` outside ``zone``."""
    mask = zone.mask
    return len({s for s in traj if not mask[s]})


def sample_trajectory(chain: MarkovChain, rng: np.random.Generator) -> Trajectory:
    """Draw one trajectory ``(s0, ..., s_H)``; consumes exactly ``H`` uniforms."""
    tables = chain._row_tables
    s = chain.start_state
    out = [s]
    for u in rng.random(chain.horizon).tolist():
        targets, cum = tables[s]
        s = targets[bisect_right(cum, u)]
        out.append(s)
    return tuple(out)


def sample_trajectories(chain: MarkovChain, rng: np.random.Generator, n: int) -> np.ndarray:
    """Draw ``n`` trajectories as an ``(n, H+1)`` integer array."""
    H = chain.horizon
    out = np.empty((n, H + 1), dtype=np.int64)
    out[:, 0] = chain.start_state
    if n == 0:
        return out
    gcum = chain._global_cum
    row_end = chain.indptr[1:] - 1
    s = out[:, 0]
    u = rng.random((H, n))
    for t in range(H):
        pos = np.searchsorted(gcum, s + u[t], side="right")
        pos = np.minimum(pos, row_end[s])
        s = chain.targets[pos]
        out[:, t + 1] = s
    return out


@dataclass(frozen=True, eq=False)
class MdpWithPolicy:
    """An MDP ``<S, s0, P', A>`` together with a stochastic policy.

    ``action_transitions[s][a]`` lists ``(target, prob)`` pairs and
    ``policy[s, a]`` is ``pi(a | s)``.
    """

    n_states: int
    start_state: int
    n_actions: int
    action_transitions: Sequence[Sequence[Sequence[tuple[int, float]]]]
    policy: np.ndarray
    horizon: int
    names: tuple[str, ...] | None = None

    def check(self) -> None:
        policy = np.asarray(self.policy, dtype=float)
        if policy.shape != (self.n_states, self.n_actions):
            raise ValueError(f"policy shape {policy.shape} != {(self.n_states, self.n_actions)}")
        if len(self.action_transitions) != self.n_states:
            raise ValueError("action_transitions must have one entry per state")
        for s in range(self.n_states):
            if np.any(policy[s] < 0) or abs(policy[s].sum() - 1.0) > ROW_SUM_TOL:
                raise ValueError(f"policy row of state {s} is not a distribution")
            if len(self.action_transitions[s]) != self.n_actions:
                raise ValueError(f"state {s} must list {self.n_actions} actions")
            for a, row in enumerate(self.action_transitions[s]):
                total = 0.0
                for dst, p in row:
                    if not 0 <= dst < self.n_states or not 0.0 <= p <= 1.0:
                        raise ValueError(f"bad transition ({s}, {a}) -> {dst} with p={p!r}")
                    total += p
                if abs(total - 1.0) > ROW_SUM_TOL:
                    raise ValueError(f"P'({s}, {a}, .) sums to {total!r}")


def induce_chain(mdp: MdpWithPolicy, layer_labels=None) -> MarkovChain:
    """The chain ``P(s, s') = sum_a P'(s, a, s') pi(a | s)``."""
    mdp.check()
    policy = np.asarray(mdp.policy, dtype=float)
    edges = []
    for s in range(mdp.n_states):
        for a in range(mdp.n_actions):
            w = policy[s, a]
            if w == 0.0:
                continue
            for dst, p in mdp.action_transitions[s][a]:
                edges.append((s, dst, w * p))
    return MarkovChain.from_edges(
        mdp.n_states, mdp.start_state, mdp.horizon, edges,
        layer_labels=layer_labels, names=mdp.names,
    )
