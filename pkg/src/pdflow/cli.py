"""Command-line front end.

Three commands: ``solve`` runs the projected saddle-point flow on a problem
file, ``connectivity`` runs the distributed connectivity maximization on a
graph file, and ``examples`` replays the built-in presets.  Results land in
CSV files; numbers are written with full round-trip precision.

Exit codes: 0 converged, 1 stopped at the step budget, 2 bad input,
3 divergence (dt too large).
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import connectivity as distnet
from . import presets
from .flow import (
    DivergenceError,
    FlowState,
    Objective,
    ProblemSpec,
    SolverConfig,
    SolveResult,
    solve,
)
from .graphs import Graph, parse_graph
from .sets import Ball, Box, FreeSpace, NonnegativeOrthant, Product, SimpleSet

EXIT_CONVERGED = 0
EXIT_STEP_BUDGET = 1
EXIT_INPUT = 2
EXIT_DIVERGED = 3


@dataclass
class RunSummary:
    converged: bool
    steps: int
    residual: float
    objective: float
    wall_time: float
    outputs: list
    lambda2: float | None = None


def _fmt(x) -> str:
    # repr of a Python float round-trips exactly
    return repr(float(x))


# ---------------------------------------------------------------- problem files

def _parse_bound(value, side: str) -> float:
    if value is None:
        return -np.inf if side == "lower" else np.inf
    if isinstance(value, str):
        s = value.strip().lower()
        if s in ("inf", "+inf", "infinity"):
            return np.inf
        if s in ("-inf", "-infinity"):
            return -np.inf
        raise ValueError(f"bad bound {value!r}; use a number, 'inf', '-inf' or null")
    return float(value)


def parse_set_descriptor(desc) -> SimpleSet:
    """Build a simple set from its JSON descriptor."""
    if not isinstance(desc, dict) or "type" not in desc:
        raise ValueError("set descriptor must be an object with a 'type' key")
    kind = desc["type"]
    if kind == "free":
        return FreeSpace(int(desc["dim"]))
    if kind == "nonnegative":
        return NonnegativeOrthant(int(desc["dim"]))
    if kind == "box":
        lower = [_parse_bound(v, "lower") for v in desc["lower"]]
        upper = [_parse_bound(v, "upper") for v in desc["upper"]]
        return Box(lower, upper)
    if kind == "ball":
        return Ball(center=desc["center"], radius=desc["radius"])
    if kind == "product":
        return Product(parse_set_descriptor(c) for c in desc["components"])
    raise ValueError(f"unknown set type {kind!r}")


def parse_objective_descriptor(desc) -> Objective:
    if not isinstance(desc, dict) or "type" not in desc:
        raise ValueError("objective must be an object with a 'type' key")
    kind = desc["type"]
    if kind == "linear":
        return Objective.linear(desc["c"])
    if kind == "quadratic":
        if "Q" not in desc:
            raise ValueError("quadratic objective requires a 'Q' matrix")
        return Objective.quadratic(desc["Q"], desc["c"])
    raise ValueError(f"unknown objective type {kind!r}")


def load_problem(path: Path) -> ProblemSpec:
    """Load and validate a JSON problem file."""
    try:
        document = json.loads(path.read_text())
    except json.JSONDecodeError as err:
        raise ValueError(f"{path}: {err}") from err
    if not isinstance(document, dict):
        raise ValueError(f"{path}: top level must be an object")
    try:
        objective = parse_objective_descriptor(document["objective"])
        simple_set = parse_set_descriptor(document["set"])
        n = simple_set.dim
        A = np.asarray(document.get("A", []), dtype=float).reshape(-1, n)
        b = np.asarray(document.get("b", []), dtype=float).reshape(-1)
        rho = float(document.get("rho", 1.0))
        return ProblemSpec(objective=objective, A=A, b=b, set=simple_set, rho=rho)
    except KeyError as err:
        raise ValueError(f"{path}: missing key {err}") from err
    except (TypeError, ValueError) as err:
        raise ValueError(f"{path}: {err}") from err


# ---------------------------------------------------------------- CSV output

def write_trajectory_csv(path: Path, problem: ProblemSpec, result: SolveResult) -> None:
    n, m = problem.dim, problem.num_constraints
    header = (
        ["t"]
        + [f"x_{i}" for i in range(1, n + 1)]
        + [f"v_{i}" for i in range(1, m + 1)]
        + ["objective", "residual"]
    )
    lines = [",".join(header)]
    for point in result.trajectory:
        row = (
            [_fmt(point.t)]
            + [_fmt(c) for c in point.x]
            + [_fmt(c) for c in point.v]
            + [_fmt(point.objective), _fmt(point.residual)]
        )
        lines.append(",".join(row))
    path.write_text("\n".join(lines) + "\n", newline="\n")


def _contribution_columns(graph: Graph) -> list:
    return [
        f"w_{i}_{k}" for i in range(1, graph.n + 1) for k in graph.incident_edges(i)
    ]


def write_history_csv(path: Path, graph: Graph, history) -> None:
    header = ["round", "objective", "lambda2", "residual"] + _contribution_columns(graph)
    lines = [",".join(header)]
    for point in history:
        row = (
            [str(point.round), _fmt(point.objective), _fmt(point.lambda2), _fmt(point.residual)]
            + [_fmt(c) for c in point.contributions]
        )
        lines.append(",".join(row))
    path.write_text("\n".join(lines) + "\n", newline="\n")


def write_weights_csv(path: Path, network: distnet.NetworkState) -> None:
    graph = network.graph
    lines = ["edge,node_a,node_b,contribution_a,contribution_b,total"]
    for k, (i, j) in enumerate(graph.edges, start=1):
        wa = network.nodes[i - 1].w[k]
        wb = network.nodes[j - 1].w[k]
        lines.append(f"{k},{i},{j},{_fmt(wa)},{_fmt(wb)},{_fmt(wa + wb)}")
    path.write_text("\n".join(lines) + "\n", newline="\n")


# ---------------------------------------------------------------- commands

def _print_summary(summary: RunSummary) -> None:
    print(f"converged:      {'yes' if summary.converged else 'no'}")
    print(f"steps:          {summary.steps}")
    print(f"final residual: {summary.residual:.6e}")
    print(f"objective:      {summary.objective:.10g}")
    if summary.lambda2 is not None:
        print(f"lambda2:        {summary.lambda2:.10g}")
    print(f"wall time:      {summary.wall_time:.2f} s")
    for out in summary.outputs:
        print(f"wrote:          {out}")


def _solve_config(args, defaults: SolverConfig) -> SolverConfig:
    return SolverConfig(
        dt=args.dt if args.dt is not None else defaults.dt,
        max_steps=args.steps if args.steps is not None else defaults.max_steps,
        tol=args.tol if args.tol is not None else defaults.tol,
        integrator=args.integrator if getattr(args, "integrator", None) else defaults.integrator,
        record_stride=args.record_stride if args.record_stride is not None else defaults.record_stride,
    )


def _run_solve(problem: ProblemSpec, config: SolverConfig, seed, out_dir: Path, stem: str) -> RunSummary:
    n, m = problem.dim, problem.num_constraints
    if seed is None:
        init = FlowState(x=np.zeros(n), v=np.zeros(m))
    else:
        rng = np.random.default_rng(seed)
        init = FlowState(x=rng.standard_normal(n), v=rng.standard_normal(m))
    start = time.perf_counter()
    result = solve(problem, config, init)
    elapsed = time.perf_counter() - start
    out_dir.mkdir(parents=True, exist_ok=True)
    csv_path = out_dir / f"{stem}_trajectory.csv"
    write_trajectory_csv(csv_path, problem, result)
    summary = RunSummary(
        converged=result.converged,
        steps=result.steps_taken,
        residual=result.residual,
        objective=float(problem.objective.evaluate(result.final.x)),
        wall_time=elapsed,
        outputs=[csv_path],
    )
    _print_summary(summary)
    return summary


def _run_connectivity(
    graph: Graph, eps: float, config: SolverConfig, seed, threads: int, out_dir: Path, stem: str
) -> RunSummary:
    if seed is None:
        init = distnet.initial_network(graph, eps)
    else:
        init = distnet.random_network(graph, eps, np.random.default_rng(seed))
    start = time.perf_counter()
    network, history = distnet.simulate(graph, eps, config, init=init, threads=threads)
    elapsed = time.perf_counter() - start
    final = history[-1]
    out_dir.mkdir(parents=True, exist_ok=True)
    history_path = out_dir / f"{stem}_history.csv"
    weights_path = out_dir / f"{stem}_weights.csv"
    write_history_csv(history_path, graph, history)
    write_weights_csv(weights_path, network)
    summary = RunSummary(
        converged=final.residual <= config.tol,
        steps=final.round,
        residual=final.residual,
        objective=final.objective,
        lambda2=final.lambda2,
        wall_time=elapsed,
        outputs=[history_path, weights_path],
    )
    _print_summary(summary)
    return summary


def cmd_solve(args) -> int:
    problem = load_problem(args.problem)
    config = _solve_config(args, presets.lp_config())
    summary = _run_solve(problem, config, args.seed, args.output, args.problem.stem)
    return EXIT_CONVERGED if summary.converged else EXIT_STEP_BUDGET


def cmd_connectivity(args) -> int:
    try:
        text = args.graph.read_text()
    except OSError as err:
        raise ValueError(str(err)) from err
    graph = parse_graph(text)
    config = _solve_config(args, presets.connectivity_config())
    eps = args.epsilon if args.epsilon is not None else presets.CONNECTIVITY_EPS
    summary = _run_connectivity(
        graph, eps, config, args.seed, args.threads, args.output, args.graph.stem
    )
    return EXIT_CONVERGED if summary.converged else EXIT_STEP_BUDGET


def cmd_examples(args) -> int:
    name = args.name
    if name in ("example1", "example2"):
        problem = presets.example1_problem() if name == "example1" else presets.example2_problem()
        config = _solve_config(args, presets.lp_config())
        summary = _run_solve(problem, config, args.seed, args.output, name)
        return EXIT_CONVERGED if summary.converged else EXIT_STEP_BUDGET
    if name == "example3":
        graph = presets.example3_graph()
        config = presets.connectivity_config()
        default_eps = presets.CONNECTIVITY_EPS
    else:
        graph = presets.example4_graph()
        config = presets.connectivity_config(
            dt=presets.EXAMPLE4_DT, tol=presets.EXAMPLE4_TOL
        )
        default_eps = presets.EXAMPLE4_EPS
    config = _solve_config(args, config)
    eps = args.epsilon if args.epsilon is not None else default_eps
    summary = _run_connectivity(
        graph, eps, config, args.seed, args.threads, args.output, name
    )
    return EXIT_CONVERGED if summary.converged else EXIT_STEP_BUDGET


# ---------------------------------------------------------------- entry point

def _add_run_flags(parser, with_integrator=False, with_epsilon=False, with_threads=False):
    parser.add_argument("--dt", type=float, default=None, help="integration step size")
    parser.add_argument("--steps", type=int, default=None, help="maximum number of steps")
    parser.add_argument("--tol", type=float, default=None, help="residual stopping tolerance")
    parser.add_argument("--record-stride", type=int, default=None, help="record every Nth step")
    parser.add_argument("--seed", type=int, default=None, help="random initialization seed")
    parser.add_argument("--output", type=Path, default=Path("."), help="output directory")
    if with_integrator:
        parser.add_argument("--integrator", choices=["euler", "heun", "rk4"], default=None)
    if with_epsilon:
        parser.add_argument("--epsilon", type=float, default=None, help="eigenvalue smoothing parameter")
    if with_threads:
        parser.add_argument("--threads", type=int, default=1, help="intra-round worker threads")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="pdflow",
        description="Projected primal-dual gradient flow solver and distributed "
        "algebraic-connectivity maximization.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_solve = sub.add_parser("solve", help="solve a problem file with the projected flow")
    p_solve.add_argument("problem", type=Path, help="JSON problem file")
    _add_run_flags(p_solve, with_integrator=True)
    p_solve.set_defaults(func=cmd_solve)

    p_conn = sub.add_parser("connectivity", help="maximize a graph's algebraic connectivity")
    p_conn.add_argument("graph", type=Path, help="edge-list graph file")
    _add_run_flags(p_conn, with_epsilon=True, with_threads=True)
    p_conn.set_defaults(func=cmd_connectivity)

    p_ex = sub.add_parser("examples", help="run a built-in example")
    p_ex.add_argument("name", choices=["example1", "example2", "example3", "example4"])
    _add_run_flags(p_ex, with_integrator=True, with_epsilon=True, with_threads=True)
    p_ex.set_defaults(func=cmd_examples)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except DivergenceError as err:
        print(f"error: divergence: {err}", file=sys.stderr)
        print("hint: reduce --dt", file=sys.stderr)
        return EXIT_DIVERGED
    except (OSError, ValueError) as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
