import numpy as np
import pytest

from safezone.markov import MarkovChain

ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def coin_chain(p: float) -> MarkovChain:
    """Two states, H=1; leaves state 0 with probability ``p``."""
    edges = [(0, 1, p), (0, 0, 1 - p), (1, 1, 1.0)]
    return MarkovChain.from_edges(2, 0, 1, edges)


def path_chain(H: int) -> MarkovChain:
    """Deterministic walk 0 -> 1 -> ... -> H."""
    edges = [(i, i + 1, 1.0) for i in range(H)] + [(H, H, 1.0)]
    return MarkovChain.from_edges(H + 1, 0, H, edges)
