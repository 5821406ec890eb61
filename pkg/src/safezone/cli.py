"""Command-line front end: ``safezone <subcommand> ...``.

Exit status is 0 on success, 1 on a usage error and 2 on a domain error.
Errors go to stderr as a single line ``safezone-error[usage]: ...`` or
``safezone-error[domain]: ...``. Whenever a subcommand writes a file it
also writes ``<file>.manifest.json`` describing the run.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import platform
import sys
import time
from dataclasses import asdict, dataclass, field
from datetime import datetime, timezone
from pathlib import Path

import numpy as np
import scipy

from . import __version__
from .baselines import greedy_by_threshold, greedy_each_step, simulation_algorithm
from .exact import exact_escape_probability, monte_carlo_escape, visit_probabilities
from .gridworld import ALGORITHMS, POLICIES, GridConfig, run_benchmark, write_aggregate_csv, write_rows_csv
from .instances import gen_greedy_lowerbound, gen_simulation_lowerbound, gen_threshold_lowerbound
from .io import read_chain, read_graph, read_zone, write_chain, write_zone
from .markov import require_valid, validate_chain
from .oracle import MAX_REACHABLE, brute_force_kstar
from .reduction import has_clique, reduction_rho, regular_clique_via_safezone
from .rng import stream
from .solver import BudgetExceeded, SolverConfig, amplified_find, find_safezone

EXIT_OK, EXIT_USAGE, EXIT_DOMAIN = 0, 1, 2


class UsageError(Exception):
    pass


class DomainError(Exception):
    pass


@dataclass
class RunManifest:
    argv: list[str]
    config: dict
    seeds: list[int]
    versions: dict
    input_digests: dict
    started_at: str
    elapsed_seconds: float = 0.0
    outputs: list[str] = field(default_factory=list)

    def write(self, output_path) -> Path:
        path = Path(f"{output_path}.manifest.json")
        path.write_text(json.dumps(asdict(self), indent=2, sort_keys=True) + "\n")
        return path


def _sha256(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def _versions() -> dict:
    return {"safezone": __version__, "python": platform.python_version(),
            "numpy": np.__version__, "scipy": scipy.__version__}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(message)


def _num(x) -> str:
    return repr(float(x))


def _emit(obj) -> None:
    print(json.dumps(obj, sort_keys=True))


def _unit(name):
    def parse(text):
        try:
            v = float(text)
        except ValueError:
            raise argparse.ArgumentTypeError(f"{name} must be a number, got {text!r}") from None
        return v
    return parse


def _int_list(text: str) -> list[int]:
    try:
        return [int(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


# ---------------------------------------------------------------- commands


def cmd_validate(args):
    chain = read_chain(args.chain)
    diag = validate_chain(chain)
    if diag is not None:
        raise DomainError(f"invalid chain: {diag}")
    print(f"ok n_states={chain.n_states} horizon={chain.horizon} edges={chain.n_edges}")


def _chain_and_zone(args):
    chain = require_valid(read_chain(args.chain))
    return chain, read_zone(args.zone, chain.n_states)


def cmd_exact_safety(args):
    chain, zone = _chain_and_zone(args)
    print(_num(exact_escape_probability(chain, zone).value))


def cmd_mc_safety(args):
    chain, zone = _chain_and_zone(args)
    rep = monte_carlo_escape(chain, zone, args.epsilon, args.lam, stream(args.seed, "estimator"))
    _emit({"estimate": rep.value, "samples": rep.samples_used, "epsilon": rep.epsilon, "lambda": rep.lam})


def cmd_solve(args, manifest):
    chain = require_valid(read_chain(args.chain))
    alg = args.algorithm
    need = {"threshold": ("beta",), "simulation": ("m",), "greedy-step": ("rho",),
            "find-safezone": ("rho", "epsilon", "lam")}[alg]
    missing = [n for n in need if getattr(args, n) is None]
    if missing:
        flag = {"lam": "lambda"}.get(missing[0], missing[0])
        raise UsageError(f"--algorithm {alg} requires --{flag}")
    report: dict = {"algorithm": alg}
    if alg == "threshold":
        res = greedy_by_threshold(visit_probabilities(chain), args.beta)
        zone, report["beta"] = res.zone, args.beta
    elif alg == "simulation":
        res = simulation_algorithm(chain, args.m, stream(args.seed, "main"))
        zone, report["samples"] = res.zone, res.samples_used
    elif alg == "greedy-step":
        zone = greedy_each_step(chain, args.rho).zone
    else:
        cfg = SolverConfig(args.rho, args.epsilon, args.lam,
                           "exact" if args.exact_safety else "estimated", args.max_samples)
        rng = stream(args.seed, "main")
        try:
            run = (amplified_find(chain, cfg, args.delta, rng) if args.delta is not None
                   else find_safezone(chain, cfg, rng, k_guess=args.k_guess))
        except BudgetExceeded as err:
            raise DomainError(str(err)) from None
        zone = run.zone
        report.update(
            safety=run.final_safety.value, safety_method=run.final_safety.method,
            samples_main=run.samples_main, samples_estimator=run.samples_estimator,
            accepted=len(run.accepted), threshold=cfg.threshold,
        )
        if run.amplification is not None:
            report["amplification"] = run.amplification
            report["run_index"] = run.run_index
    report["size"] = len(zone)
    report["zone"] = zone.indices()
    if args.out:
        write_zone(zone, args.out)
        manifest.outputs.append(str(args.out))
    if args.report:
        Path(args.report).write_text(json.dumps(report, indent=2, sort_keys=True) + "\n")
        manifest.outputs.append(str(args.report))
    _emit(report)


def cmd_oracle(args):
    chain = require_valid(read_chain(args.chain))
    limit = None if args.max_reachable == 0 else args.max_reachable
    res = brute_force_kstar(chain, args.rho, max_reachable=limit)
    _emit({"k_star": res.k_star, "witness": res.witness.indices(),
           "escape": res.escape, "subsets_examined": res.subsets_examined})


def cmd_gen_instance(args, manifest):
    fam = args.family
    if fam == "threshold":
        if args.k is None:
            raise UsageError("--family threshold requires --k")
        chain = gen_threshold_lowerbound(args.rho, args.horizon, args.k)
    elif fam == "simulation":
        if args.k is None or args.gamma is None:
            raise UsageError("--family simulation requires --k and --gamma")
        chain = gen_simulation_lowerbound(args.rho, args.gamma, args.horizon, args.k)
    else:
        chain = gen_greedy_lowerbound(args.rho, args.horizon)
    write_chain(chain, args.out)
    manifest.outputs.append(str(args.out))
    _emit({"family": fam, "n_states": chain.n_states, "out": str(args.out)})


def cmd_reduce_clique(args):
    graph = read_graph(args.graph)
    answer = regular_clique_via_safezone(graph, args.kc, max_reachable=args.max_reachable or None)
    out = {"clique": answer, "k_c": args.kc, "degree": graph.degree,
           "rho": reduction_rho(args.kc, graph.degree)}
    if args.check:
        out["enumeration"] = has_clique(graph, args.kc)
    _emit(out)


def cmd_gridworld_bench(args, manifest):
    cfg = GridConfig(N=args.n, horizon=args.horizon, episodes_train=args.episodes_train,
                     episodes_test=args.episodes_test)
    k_grid = args.k_grid or [round(f * cfg.n_states) for f in (0.05, 0.1, 0.2, 0.3, 0.5, 1.0)]
    result = run_benchmark(cfg, args.policy, k_grid, range(args.seeds), tuple(args.algorithms))
    write_rows_csv(result, args.out)
    agg = Path(args.out).with_suffix(".agg.csv")
    write_aggregate_csv(result, agg)
    manifest.outputs += [str(args.out), str(agg)]
    manifest.seeds = list(range(args.seeds))
    _emit({"rows": len(result.rows), "out": str(args.out), "aggregate": str(agg)})


# ----------------------------------------------------------------- parser


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="safezone", description="Small high-probability zones of finite-horizon Markov chains.")
    p.add_argument("--version", action="version", version=f"safezone {__version__}")
    sub = p.add_subparsers(dest="command", metavar="COMMAND", parser_class=_Parser)

    def add(name, help_):
        return sub.add_parser(name, help=help_, description=help_)

    p.subcommands = sub.choices

    v = add("validate", "check that a chain file is a valid finite-horizon chain")
    v.add_argument("--chain", required=True)

    for name, help_ in (("exact-safety", "exact escape probability of a zone"),
                        ("mc-safety", "Monte Carlo escape estimate of a zone")):
        c = add(name, help_)
        c.add_argument("--chain", required=True)
        c.add_argument("--zone", required=True)
        if name == "mc-safety":
            c.add_argument("--epsilon", type=_unit("epsilon"), required=True)
            c.add_argument("--lambda", dest="lam", type=_unit("lambda"), required=True)
            c.add_argument("--seed", type=int, default=0)

    s = add("solve", "compute a zone with one of the algorithms")
    s.add_argument("--chain", required=True)
    s.add_argument("--algorithm", required=True, choices=("threshold", "simulation", "greedy-step", "find-safezone"))
    s.add_argument("--beta", type=_unit("beta"))
    s.add_argument("--m", type=int)
    s.add_argument("--rho", type=_unit("rho"))
    s.add_argument("--epsilon", type=_unit("epsilon"))
    s.add_argument("--lambda", dest="lam", type=_unit("lambda"))
    s.add_argument("--exact-safety", action="store_true", help="replace estimates by exact escape probabilities")
    s.add_argument("--delta", type=_unit("delta"), help="amplify over ceil(2 ln 300 / delta) runs")
    s.add_argument("--max-samples", type=int)
    s.add_argument("--k-guess", type=int, help="optimum size guess used for the default sample budget")
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--out", help="write the zone here")
    s.add_argument("--report", help="write a JSON report here")

    o = add("oracle", "exhaustive minimum safe zone for small chains")
    o.add_argument("--chain", required=True)
    o.add_argument("--rho", type=_unit("rho"), required=True)
    o.add_argument("--max-reachable", type=int, default=MAX_REACHABLE, help="0 disables the guard")

    g = add("gen-instance", "write a lower-bound instance")
    g.add_argument("--family", required=True, choices=("threshold", "simulation", "greedy"))
    g.add_argument("--rho", type=_unit("rho"), required=True)
    g.add_argument("--horizon", "-H", type=int, required=True)
    g.add_argument("--k", type=int)
    g.add_argument("--gamma", type=_unit("gamma"))
    g.add_argument("--out", required=True)

    r = add("reduce-clique", "decide RegularClique through the SafeZone oracle")
    r.add_argument("--graph", required=True)
    r.add_argument("--kc", type=int, required=True)
    r.add_argument("--max-reachable", type=int, default=MAX_REACHABLE, help="0 disables the guard")
    r.add_argument("--check", action="store_true", help="also run direct clique enumeration")

    b = add("gridworld-bench", "coverage-vs-budget curves on the grid world")
    b.add_argument("--n", type=int, default=30)
    b.add_argument("--policy", required=True, choices=POLICIES)
    b.add_argument("--k-grid", type=_int_list)
    b.add_argument("--seeds", type=int, default=10)
    b.add_argument("--horizon", type=int, default=300)
    b.add_argument("--episodes-train", type=int, default=2000)
    b.add_argument("--episodes-test", type=int, default=2000)
    b.add_argument("--algorithms", type=lambda t: t.split(","), default=list(ALGORITHMS))
    b.add_argument("--out", required=True)
    return p


_COMMANDS = {
    "validate": (cmd_validate, False), "exact-safety": (cmd_exact_safety, False),
    "mc-safety": (cmd_mc_safety, False), "solve": (cmd_solve, True),
    "oracle": (cmd_oracle, False), "gen-instance": (cmd_gen_instance, True),
    "reduce-clique": (cmd_reduce_clique, False), "gridworld-bench": (cmd_gridworld_bench, True),
}
_INPUT_FLAGS = ("chain", "zone", "graph")


def dispatch(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    args = None
    try:
        args = parser.parse_args(argv)
        if args.command is None:
            parser.print_usage(sys.stderr)
            raise UsageError("a subcommand is required")
        if getattr(args, "algorithms", None):
            bad = [a for a in args.algorithms if a not in ALGORITHMS]
            if bad:
                raise UsageError(f"unknown algorithm {bad[0]!r}; choose from {', '.join(ALGORITHMS)}")
        func, writes = _COMMANDS[args.command]
        config = dict(vars(args))
        manifest = RunManifest(
            argv=argv, config=config,
            seeds=[args.seed] if getattr(args, "seed", None) is not None else [],
            versions=_versions(),
            input_digests={},
            started_at=datetime.now(timezone.utc).isoformat(),
        )
        for flag in _INPUT_FLAGS:
            path = getattr(args, flag, None)
            if path is not None and Path(path).is_file():
                manifest.input_digests[path] = _sha256(path)
        t0 = time.perf_counter()
        func(args, manifest) if writes else func(args)
        manifest.elapsed_seconds = time.perf_counter() - t0
        if manifest.outputs:
            manifest.write(manifest.outputs[0])
        return EXIT_OK
    except UsageError as err:
        if args is not None and args.command in parser.subcommands:
            parser.subcommands[args.command].print_usage(sys.stderr)
        print(f"safezone-error[usage]: {err}", file=sys.stderr)
        return EXIT_USAGE
    except (DomainError, ValueError, RuntimeError, OSError) as err:
        msg = " ".join(str(err).split())
        print(f"safezone-error[domain]: {msg}", file=sys.stderr)
        return EXIT_DOMAIN


def main() -> None:
    sys.exit(dispatch())
