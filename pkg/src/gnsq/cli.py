"""Command-line entry points: run, compare, check, plan and estimate."""

from __future__ import annotations

import argparse
import csv
import json
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from . import checks
from .config import RunConfig, load_config
from .diagnostics import ProblemConstants, estimate_constants
from .errors import GnsqError, MismatchedProblem
from .instances import load_problem
from .planner import (
    budget_linear_stochastic,
    budget_sublinear_stochastic,
    budget_two_batch,
)
from .trace import RunState

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_NOT_CONVERGED = 2
EXIT_CHECK_FAILED = 2

SUMMARY_FIELDS = ("seed", "status", "final_f1hat", "iterations", "total_probes", "oracle_calls", "wall_s", "reason")
FORMULAS = ("21", "25", "28", "31")


def oracle_calls(state: RunState, m: int) -> int:
    """Component evaluations spent on sampled batches, counting full-batch steps as m."""
    separate = state.flags.get("separate_tilde", False)
    total = 0
    for rec, det in zip(state.trace, state.details):
        total += m if rec.batch_indices is None else len(rec.batch_indices)
        if separate and "tilde_indices" in det:
            total += len(det["tilde_indices"])
    return total


def _timed_runs(cfg: RunConfig) -> list[tuple[int, RunState, float]]:
    p = cfg.build_problem()

    def one(seed: int) -> tuple[int, RunState, float]:
        started = time.perf_counter()
        state = cfg.execute(seed, p)
        return seed, state, time.perf_counter() - started

    with ThreadPoolExecutor() as pool:
        return list(pool.map(one, cfg.seeds))


def _summary_row(seed: int, state: RunState, wall: float, m: int) -> dict:
    return {
        "seed": seed,
        "status": state.status,
        "final_f1hat": repr(state.last_f1),
        "iterations": state.k,
        "total_probes": state.total_probes,
        "oracle_calls": oracle_calls(state, m),
        "wall_s": f"{wall:.6f}",
        "reason": state.reason,
    }


def _write_csv(path: Path, rows: list[dict], columns: Sequence[str]) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as handle:
        writer = csv.DictWriter(handle, fieldnames=list(columns))
        writer.writeheader()
        writer.writerows(rows)


def command_run(args: argparse.Namespace) -> int:
    cfg = load_config(args.config)
    m = cfg.build_problem().m
    results = _timed_runs(cfg)
    cfg.output.mkdir(parents=True, exist_ok=True)
    rows = []
    for seed, state, wall in results:
        (cfg.output / f"seed_{seed}.jsonl").write_text(state.jsonl(), encoding="utf-8")
        rows.append(_summary_row(seed, state, wall, m))
        if cfg.report_every:
            for rec in state.trace[:: cfg.report_every]:
                print(f"seed={seed} k={rec.k} f1hat={rec.f1hat:.6e} event={rec.event.value}")
    _write_csv(cfg.output / "summary.csv", rows, SUMMARY_FIELDS)
    for row in rows:
        print(f"seed={row['seed']} status={row['status']} iterations={row['iterations']} f1hat={float(row['final_f1hat']):.3e}")
    return EXIT_OK if all(state.converged for _, state, _ in results) else EXIT_NOT_CONVERGED


def command_compare(args: argparse.Namespace) -> int:
    first = load_config(args.config_a)
    second = load_config(args.config_b)
    problem_a, problem_b = first.build_problem(), second.build_problem()
    if problem_a.name != problem_b.name or (problem_a.m, problem_a.n) != (problem_b.m, problem_b.n):
        raise MismatchedProblem(f"configs use different problems: {problem_a.name} vs {problem_b.name}")
    if first.problem_spec != second.problem_spec:
        raise MismatchedProblem("configs use different problem parameters")
    if first.seeds != second.seeds:
        raise MismatchedProblem("configs use different seeds")
    if not np.array_equal(first.start_point(problem_a), second.start_point(problem_b)):
        raise MismatchedProblem("configs use different starting points")
    runs_a, runs_b = _timed_runs(first), _timed_runs(second)
    rows = []
    for (seed, state_a, _), (_, state_b, _) in zip(runs_a, runs_b):
        rows.append(
            {
                "seed": seed,
                "iterations_a": state_a.k,
                "iterations_b": state_b.k,
                "final_f1hat_a": repr(state_a.last_f1),
                "final_f1hat_b": repr(state_b.last_f1),
                "oracle_calls_a": oracle_calls(state_a, problem_a.m),
                "oracle_calls_b": oracle_calls(state_b, problem_b.m),
            }
        )
    columns = tuple(rows[0])
    print("  ".join(columns))
    for row in rows:
        print("  ".join(str(row[c]) for c in columns))
    target = Path(args.csv) if args.csv else first.output / "compare.csv"
    _write_csv(target, rows, columns)
    return EXIT_OK


def command_check(args: argparse.Namespace) -> int:
    results = checks.run_suite(args.suite, seed=args.seed, radius=args.radius)
    for result in results:
        print(result.line())
    if args.json:
        payload = json.dumps([result.to_dict() for result in results], indent=2)
        if args.json == "-":
            print(payload)
        else:
            Path(args.json).write_text(payload + "\n", encoding="utf-8")
    return EXIT_OK if all(r.passed for r in results) else EXIT_CHECK_FAILED


def _read_constants(path: str) -> ProblemConstants:
    try:
        with open(path, encoding="utf-8") as handle:
            return ProblemConstants.from_dict(json.load(handle))
    except OSError as exc:
        raise GnsqError(f"cannot read constants {path}: {exc.strerror}") from exc
    except json.JSONDecodeError as exc:
        raise GnsqError(f"{path}: invalid JSON: {exc.msg}") from exc


def command_plan(args: argparse.Namespace) -> int:
    c = _read_constants(args.constants)
    if args.formula in ("21", "25"):
        planner = budget_sublinear_stochastic if args.formula == "21" else budget_linear_stochastic
        k, b = planner(c, args.E0, args.eps, args.r, eta=args.eta, gamma=args.gamma, L=args.L or 1.0)
        result = {"formula": args.formula, "iterations": k, "batch_size": b}
    else:
        if args.tau_tilde is None:
            raise GnsqError("formulas 28 and 31 need --tau-tilde")
        k, L, b = budget_two_batch(
            c,
            args.E0,
            args.eps,
            tuple(args.shares),
            args.tau_tilde,
            T_tilde=args.T_tilde,
            gamma=args.gamma,
            pl=args.formula == "31",
            L=args.L,
        )
        result = {"formula": args.formula, "iterations": k, "curvature_floor": L, "batch_size": b}
    print(json.dumps(result))
    return EXIT_OK


def command_estimate(args: argparse.Namespace) -> int:
    p = load_problem(args.problem)
    if args.x0 is None:
        x0 = np.zeros(p.n)
    elif len(args.x0) == 1:
        x0 = np.full(p.n, args.x0[0])
    else:
        x0 = np.array(args.x0, dtype=float)
    c = estimate_constants(
        p, x0, cloud_size=args.cloud_size, radius=args.radius, seed=args.seed, batch_size=args.batch_size
    )
    print(json.dumps(c.to_dict(), indent=2))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="gnsq", description="Gauss-Newton type solvers for nonlinear least squares.")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run one config over all its seeds")
    run.add_argument("config")
    run.set_defaults(handler=command_run)

    compare = sub.add_parser("compare", help="paired summary of two configs on the same problem and seeds")
    compare.add_argument("config_a")
    compare.add_argument("config_b")
    compare.add_argument("--csv", help="CSV path; defaults to compare.csv in the first config's output")
    compare.set_defaults(handler=command_compare)

    check = sub.add_parser("check", help="run the property suites")
    check.add_argument("--suite", choices=(checks.LEMMAS, checks.CERTIFICATES, checks.ALL), default=checks.ALL)
    check.add_argument("--seed", type=int, default=None)
    check.add_argument("--radius", type=float, default=None, help="model-decrease radius; defaults to the latest step length")
    check.add_argument("--json", default=None, metavar="PATH", help="write the certificate report as JSON ('-' for stdout)")
    check.set_defaults(handler=command_check)

    plan = sub.add_parser("plan", help="iteration and batch budgets")
    plan.add_argument("--formula", choices=FORMULAS, required=True)
    plan.add_argument("--constants", required=True, help="JSON file with problem constants")
    plan.add_argument("--eps", type=float, required=True)
    plan.add_argument("--E0", type=float, default=1.0, help="expected initial squared batch residual")
    plan.add_argument("--r", type=float, default=0.5, help="accuracy share for formulas 21 and 25")
    plan.add_argument("--shares", type=float, nargs=3, default=(0.5, 0.25, 0.25), metavar=("R1", "R2", "R3"))
    plan.add_argument("--eta", type=float, default=1.0)
    plan.add_argument("--gamma", type=float, default=None)
    plan.add_argument("--L", type=float, default=None)
    plan.add_argument("--tau-tilde", dest="tau_tilde", type=float, default=None)
    plan.add_argument("--T-tilde", dest="T_tilde", type=float, default=None)
    plan.set_defaults(handler=command_plan)

    estimate = sub.add_parser("estimate", help="report estimated problem constants")
    estimate.add_argument("problem", help="problem JSON")
    estimate.add_argument("--x0", type=float, nargs="+", default=None)
    estimate.add_argument("--radius", type=float, default=1.0)
    estimate.add_argument("--cloud-size", dest="cloud_size", type=int, default=64)
    estimate.add_argument("--batch-size", dest="batch_size", type=int, default=None)
    estimate.add_argument("--seed", type=int, default=0)
    estimate.set_defaults(handler=command_estimate)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    if getattr(args, "gamma", None) is None and args.command == "plan":
        args.gamma = 2.0 if args.formula in ("21", "25") else 1.0
    try:
        return args.handler(args)
    except (GnsqError, ValueError, OSError) as exc:
        print(f"gnsq: error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
