"""RegularClique reduces to SafeZone with horizon 2.

For a ``d``-regular graph, the uniform random walk from ``v`` stays inside a
``k_c``-clique containing ``v`` for two steps with probability at least
``((k_c - 1)/d)^2``, and inside any non-clique ``k_c``-set with strictly
smaller probability. So a clique exists iff some start vertex admits a zone
of size ``k_c`` with escape probability at most ``1 - ((k_c - 1)/d)^2``.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations

from .markov import MarkovChain
from .oracle import MAX_REACHABLE, brute_force_kstar


@dataclass(frozen=True)
class RegularGraph:
    n_vertices: int
    edges: frozenset
    degree: int

    def __post_init__(self):
        deg = [0] * self.n_vertices
        for u, v in self.edges:
            if u == v:
                raise ValueError(f"self-loop at vertex {u}")
            if not (0 <= u < self.n_vertices and 0 <= v < self.n_vertices):
                raise ValueError(f"edge ({u}, {v}) out of range")
            deg[u] += 1
            deg[v] += 1
        bad = [v for v, d in enumerate(deg) if d != self.degree]
        if bad:
            raise ValueError(
                f"graph is not {self.degree}-regular: vertex {bad[0]} has degree {deg[bad[0]]}"
            )

    @classmethod
    def from_edges(cls, n_vertices: int, edges, degree: int | None = None) -> RegularGraph:
        """Normalise ``edges`` to ``(min, max)`` pairs; duplicates are rejected."""
        norm = set()
        for u, v in edges:
            e = (min(int(u), int(v)), max(int(u), int(v)))
            if e in norm:
                raise ValueError(f"duplicate edge {e}")
            norm.add(e)
        if degree is None:
            degree = 2 * len(norm) // n_vertices if n_vertices else 0
        return cls(n_vertices, frozenset(norm), degree)

    def neighbors(self, v: int) -> list[int]:
        return sorted([b for a, b in self.edges if a == v] + [a for a, b in self.edges if b == v])


def reduction_rho(k_c: int, degree: int) -> float:
    return 1.0 - ((k_c - 1) / degree) ** 2


def random_walk_chain(graph: RegularGraph, start: int, horizon: int = 2) -> MarkovChain:
    if graph.degree < 1:
        raise ValueError("random walk needs degree >= 1")
    w = 1.0 / graph.degree
    edges = [(u, v, w) for u in range(graph.n_vertices) for v in graph.neighbors(u)]
    return MarkovChain.from_edges(graph.n_vertices, start, horizon, edges)


def clique_reduction(graph: RegularGraph, k_c: int) -> list[tuple[MarkovChain, float]]:
    """One ``(chain, rho)`` SafeZone instance per start vertex."""
    if not 2 <= k_c <= graph.n_vertices:
        raise ValueError(f"k_c must lie in [2, {graph.n_vertices}], got {k_c}")
    rho = reduction_rho(k_c, graph.degree)
    return [(random_walk_chain(graph, v), rho) for v in range(graph.n_vertices)]


def regular_clique_via_safezone(graph: RegularGraph, k_c: int, max_reachable: int | None = MAX_REACHABLE) -> bool:
    """Decide clique existence with the exhaustive SafeZone oracle."""
    for chain, rho in clique_reduction(graph, k_c):
        if rho < 0:
            # k_c > d + 1: no zone of any size meets a negative escape bound.
            return False
        if brute_force_kstar(chain, rho, max_reachable=max_reachable, max_size=k_c) is not None:
            return True
    return False


def has_clique(graph: RegularGraph, k: int) -> bool:
    """Direct enumeration of ``k``-subsets."""
    adj = graph.edges
    for sub in combinations(range(graph.n_vertices), k):
        if all((a, b) in adj for a, b in combinations(sub, 2)):
            return True
    return False
