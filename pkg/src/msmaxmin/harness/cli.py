"""Command-line entry point: ``msmaxmin {run,gen,verify,sweep,c0}``.

Exit codes: 0 ok, 1 usage, 2 validation, 3 oracle violation.
"""
from __future__ import annotations

import argparse
import json
import sys
from dataclasses import replace
from pathlib import Path

from ..engine import EngineConfig, SolverFailure, compute_c0, competitive_ratio, run
from ..model import ValidationError
from ..solvers import available_solvers, get_solver
from .experiments import REPORT_COLUMNS, run_verification, sweep
from .generators import GeneratorParams, gen_adversarial_flipflop, gen_random
from .io import allocation_rows, dumps_csv, dumps_horizon, dumps_trace, load_horizon

EXIT_OK, EXIT_USAGE, EXIT_VALIDATION, EXIT_ORACLE = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _emit(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="msmaxmin", description="w-lookahead multistage online maxmin allocation")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)

    p = sub.add_parser("run", help="run the online engine on a horizon file")
    p.add_argument("instance")
    p.add_argument("--lookahead", "-w", type=int, default=1)
    p.add_argument("--delta", type=int, default=None, help="override the file's stability reward")
    p.add_argument("--solver", choices=available_solvers(), default="exact")
    p.add_argument("--rho", default=None, help="assumed approximation factor (required for greedy)")
    p.add_argument("--format", choices=("json", "csv"), default="json")
    p.add_argument("--out")

    p = sub.add_parser("gen", help="write a random horizon file")
    p.add_argument("--n", type=int, default=3)
    p.add_argument("--m", type=int, default=4)
    p.add_argument("--tau", type=int, default=8)
    p.add_argument("--lookahead", "-w", type=int, default=1)
    p.add_argument("--delta", type=int, default=1)
    p.add_argument("--value-max", type=int, default=5)
    p.add_argument("--density", type=float, default=0.5)
    p.add_argument("--churn", type=float, default=0.3)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--flipflop", action="store_true", help="adversarial alternating restriction lists")
    p.add_argument("--out")

    p = sub.add_parser("verify", help="randomized oracle suite")
    p.add_argument("--trials", type=int, default=500)
    p.add_argument("--seed", type=int, default=0)

    p = sub.add_parser("sweep", help="empirical ratios over seeds, deltas and lookaheads")
    p.add_argument("--n", type=int, default=3)
    p.add_argument("--m", type=int, default=3)
    p.add_argument("--tau", type=int, default=8)
    p.add_argument("--lookahead", "-w", type=int, nargs="+", default=[1, 2, 3])
    p.add_argument("--delta", type=int, nargs="+", default=[0, 1, 5])
    p.add_argument("--value-max", type=int, default=5)
    p.add_argument("--density", type=float, default=0.6)
    p.add_argument("--churn", type=float, default=0.3)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--trials", type=int, default=20)
    p.add_argument("--solver", choices=available_solvers(), default="exact")
    p.add_argument("--rho", default=None)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--format", choices=("json", "csv"), default="json")
    p.add_argument("--out")

    p = sub.add_parser("c0", help="print c0 and the competitive ratio")
    p.add_argument("--rho", default="1")
    p.add_argument("--lookahead", "-w", type=int, default=1)
    return parser


def _cmd_run(args) -> int:
    horizon = load_horizon(args.instance)
    if args.delta is not None:
        horizon = replace(horizon, delta=args.delta)
    solver = get_solver(args.solver)
    config = EngineConfig.for_solver(args.lookahead, solver, args.rho)
    trace = run(horizon, solver, config)
    if args.format == "json":
        _emit(dumps_trace(trace), args.out)
    else:
        _emit(dumps_csv(allocation_rows(trace), ["t", "entity", "player", "branch"]), args.out)
    return EXIT_OK


def _cmd_gen(args) -> int:
    if args.flipflop:
        horizon = gen_adversarial_flipflop(args.n, args.m, args.tau, args.delta)
    else:
        horizon = gen_random(GeneratorParams(
            n=args.n, m=args.m, tau=args.tau, w=args.lookahead, delta=args.delta, value_max=args.value_max,
            availability_density=args.density, churn=args.churn, seed=args.seed,
        ))
    _emit(dumps_horizon(horizon), args.out)
    return EXIT_OK


def _cmd_verify(args) -> int:
    result = run_verification(args.trials, args.seed)
    if result.ok:
        print(f"ok: {result.trials} trials, checks passed {json.dumps(result.checks, sort_keys=True)}")
        return EXIT_OK
    bad = result.counterexample
    print(f"VIOLATION in {bad['check']} at trial {result.trials}: {bad['detail']}")
    print(f"params: {json.dumps(bad['params'], sort_keys=True)}")
    sys.stdout.write(bad["horizon"])
    return EXIT_ORACLE


def _cmd_sweep(args) -> int:
    base = GeneratorParams(
        n=args.n, m=args.m, tau=args.tau, value_max=args.value_max,
        availability_density=args.density, churn=args.churn, seed=args.seed,
    )
    seeds = [args.seed + k for k in range(args.trials)]
    report = sweep(base, seeds, args.delta, args.lookahead, args.solver, args.rho, workers=args.workers)
    if args.format == "json":
        text = json.dumps({"rows": report.as_dicts(), "summary": report.summary()}, sort_keys=True, indent=1) + "\n"
    else:
        text = dumps_csv(report.as_dicts(), REPORT_COLUMNS)
    _emit(text, args.out)
    return EXIT_ORACLE if report.summary()["bound_violations"] else EXIT_OK


def _cmd_c0(args) -> int:
    c0 = compute_c0(args.rho, args.lookahead)
    ratio = competitive_ratio(args.rho, args.lookahead)
    print(f"c0 = {c0:.10f}")
    print(f"ratio = {ratio:.10f}")
    return EXIT_OK


COMMANDS = {"run": _cmd_run, "gen": _cmd_gen, "verify": _cmd_verify, "sweep": _cmd_sweep, "c0": _cmd_c0}


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        if args.command is None:
            raise UsageError("msmaxmin: a subcommand is required (run, gen, verify, sweep, c0)")
        return COMMANDS[args.command](args)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_USAGE
    except (ValidationError, ValueError, OSError, SolverFailure) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION


if __name__ == "__main__":
    sys.exit(main())
