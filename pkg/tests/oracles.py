"""Independent reference computations used by the tests.

Nothing here calls the package's dynamic programs: trajectories are
enumerated explicitly from the edge list.
"""

from itertools import combinations


def successor_table(chain):
    table = {s: [] for s in range(chain.n_states)}
    for s, t, p in chain.edges():
        table[s].append((t, p))
    return table


def enumerate_trajectories(chain):
    """Every positive-probability trajectory with its probability."""
    table = successor_table(chain)
    out = []

    def walk(path, prob):
        if len(path) == chain.horizon + 1:
            out.append((tuple(path), prob))
            return
        for t, p in table[path[-1]]:
            walk(path + [t], prob * p)

    walk([chain.start_state], 1.0)
    return out


def escape_by_enumeration(chain, members):
    members = set(members)
    return sum(p for path, p in enumerate_trajectories(chain) if not set(path) <= members)


def visits_by_enumeration(chain):
    p = [0.0] * chain.n_states
    for path, prob in enumerate_trajectories(chain):
        for s in set(path):
            p[s] += prob
    return p


def kstar_by_powerset(chain, rho, tol=1e-12):
    """Smallest zone containing the start state, over all subsets of S."""
    paths = enumerate_trajectories(chain)
    s0 = chain.start_state
    rest = [s for s in range(chain.n_states) if s != s0]
    for size in range(0, len(rest) + 1):
        for extra in combinations(rest, size):
            members = {s0, *extra}
            esc = sum(p for path, p in paths if not set(path) <= members)
            if esc <= rho + tol:
                return size + 1, members
    raise AssertionError("the full state set is always safe")
