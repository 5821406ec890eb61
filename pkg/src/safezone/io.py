"""Text formats for chains, zones, trajectories and graphs.

Chain file (version 1)::

    safezone-chain v1
    n_states 3
    start 0
    horizon 2
    layers 0 1 2          # optional, one label per state
    names s0 a b          # optional, one whitespace-free name per state
    transitions
    0 1 0.5
    0 2 0.5
    1 1 1.0
    2 2 1.0

``#`` starts a comment. Probabilities are written with ``repr`` so a
write/read round trip is exact.

Zone file: whitespace-separated state indices. Trajectory file: one
trajectory per line. Graph file: a first line ``n d`` followed by one
``u v`` edge per line.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

from .markov import MarkovChain, StateSet
from .reduction import RegularGraph

CHAIN_MAGIC = "safezone-chain"
CHAIN_VERSION = "v1"


class FormatError(ValueError):
    pass


def _lines(text: str):
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if line:
            yield lineno, line


def format_chain(chain: MarkovChain) -> str:
    out = [f"{CHAIN_MAGIC} {CHAIN_VERSION}",
           f"n_states {chain.n_states}",
           f"start {chain.start_state}",
           f"horizon {chain.horizon}"]
    if chain.layer_labels is not None:
        out.append("layers " + " ".join(map(str, chain.layer_labels.tolist())))
    if chain.names is not None:
        out.append("names " + " ".join(chain.names))
    out.append("transitions")
    out.extend(f"{s} {t} {p!r}" for s, t, p in chain.edges())
    return "\n".join(out) + "\n"


def parse_chain(text: str) -> MarkovChain:
    lines = _lines(text)
    try:
        _, head = next(lines)
    except StopIteration:
        raise FormatError("empty chain file") from None
    if head.split() != [CHAIN_MAGIC, CHAIN_VERSION]:
        raise FormatError(f"expected header '{CHAIN_MAGIC} {CHAIN_VERSION}', got {head!r}")
    fields: dict[str, list[str]] = {}
    edges = []
    in_edges = False
    for lineno, line in lines:
        parts = line.split()
        if in_edges:
            if len(parts) != 3:
                raise FormatError(f"line {lineno}: expected 'src dst prob'")
            try:
                edges.append((int(parts[0]), int(parts[1]), float(parts[2])))
            except ValueError:
                raise FormatError(f"line {lineno}: bad transition {line!r}") from None
            continue
        key = parts[0]
        if key == "transitions":
            in_edges = True
        elif key in ("n_states", "start", "horizon", "layers", "names"):
            fields[key] = parts[1:]
        else:
            raise FormatError(f"line {lineno}: unknown key {key!r}")
    for key in ("n_states", "start", "horizon"):
        if key not in fields or len(fields[key]) != 1:
            raise FormatError(f"missing or malformed '{key}'")
    try:
        n = int(fields["n_states"][0])
        layers = [int(v) for v in fields["layers"]] if "layers" in fields else None
        return MarkovChain.from_edges(
            n, int(fields["start"][0]), int(fields["horizon"][0]), edges,
            layer_labels=layers, names=fields.get("names"),
        )
    except ValueError as err:
        raise FormatError(str(err)) from None


def read_chain(path) -> MarkovChain:
    return parse_chain(Path(path).read_text())


def write_chain(chain: MarkovChain, path) -> None:
    Path(path).write_text(format_chain(chain))


def read_zone(path, n_states: int) -> StateSet:
    tokens = " ".join(line for _, line in _lines(Path(path).read_text())).split()
    try:
        return StateSet(n_states, [int(t) for t in tokens])
    except ValueError as err:
        raise FormatError(f"zone file {path}: {err}") from None


def write_zone(zone: StateSet, path) -> None:
    Path(path).write_text(" ".join(map(str, zone.indices())) + "\n")


def write_trajectories(trajs, path) -> None:
    with open(path, "w") as fh:
        for row in trajs:
            fh.write(" ".join(map(str, row)) + "\n")


def read_trajectories(path) -> np.ndarray:
    rows = [[int(t) for t in line.split()] for _, line in _lines(Path(path).read_text())]
    return np.asarray(rows, dtype=np.int64)


def parse_graph(text: str) -> RegularGraph:
    lines = list(_lines(text))
    if not lines:
        raise FormatError("empty graph file")
    head = lines[0][1].split()
    if len(head) != 2:
        raise FormatError("graph header must be 'n d'")
    n, d = int(head[0]), int(head[1])
    edges = []
    for lineno, line in lines[1:]:
        parts = line.split()
        if len(parts) != 2:
            raise FormatError(f"line {lineno}: expected 'u v'")
        edges.append((int(parts[0]), int(parts[1])))
    return RegularGraph.from_edges(n, edges, degree=d)


def read_graph(path) -> RegularGraph:
    return parse_graph(Path(path).read_text())


def format_graph(graph: RegularGraph) -> str:
    lines = [f"{graph.n_vertices} {graph.degree}"]
    lines.extend(f"{u} {v}" for u, v in sorted(graph.edges))
    return "\n".join(lines) + "\n"
