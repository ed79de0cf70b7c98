"""Command-line entry point.

Exit codes: 0 success, 1 bad arguments or input, 2 an invariant check failed.
"""
from __future__ import annotations

import argparse
import math
import sys

import numpy as np

from . import bench
from .baselines import BaselineConfig, aht_solve, eht_fista_solve, iht_solve
from .problem import load_problem
from .prox import brute_force_prox_batch, prox_batch, random_prox_instances
from .solver import (ConfigError, SolverConfig, default_gamma, descent_violations,
                     finite_length_check, solve, square_summability_check, write_trace_csv)

EXIT_OK, EXIT_USAGE, EXIT_INVARIANT = 0, 1, 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


def _cmd_solve(args) -> int:
    try:
        problem = load_problem(args.problem)
    except (OSError, ValueError, KeyError) as exc:
        raise UsageError(f"cannot load {args.problem}: {exc}") from exc
    n = problem.dimension
    x0 = np.zeros(n) if args.x0 is None else np.full(n, args.x0)
    Lf = problem.lipschitz
    if args.solver in ("alg1", "alg1e0"):
        eps = 0.0 if args.solver == "alg1e0" else args.epsilon
        factor = 2.0 if args.solver == "alg1e0" else 1.0
        gamma = args.gamma if args.gamma is not None else default_gamma(args.h, args.beta, Lf, factor)
        eps_bar = args.eps_bar if args.eps_bar is not None else 2.0 * args.epsilon
        try:
            cfg = SolverConfig(eps, args.beta, args.h, gamma, eps_bar, args.max_iter)
            res = solve(problem, cfg, x0, solver_name="Alg1" if eps > 0 else "Alg1_eps=0")
        except ConfigError as exc:
            raise UsageError(str(exc)) from exc
        bad = bool(descent_violations(res, cfg))
        if res.trace and eps > 0:
            bad |= not finite_length_check(res, cfg).ok
        if res.trace and eps == 0:
            bad |= not square_summability_check(res, cfg, Lf).ok
    else:
        L = args.L if args.L is not None else {"iht": 6.0, "aht": 6.0, "fista": 2.0}[args.solver] * Lf
        eps_bar = args.eps_bar if args.eps_bar is not None else 2.0 * args.epsilon
        try:
            bc = BaselineConfig(L, 1.0, args.max_iter, eps_bar)
        except ValueError as exc:
            raise UsageError(str(exc)) from exc
        fn = {"iht": iht_solve, "aht": aht_solve, "fista": eht_fista_solve}[args.solver]
        res = fn(problem, bc, x0)
        bad = False
    if args.trace:
        write_trace_csv(args.trace, res, with_solver=True)
    print(f"solver: {res.solver}")
    print(f"status: {res.status}")
    print(f"iterations: {res.iterations}")
    print(f"objective: {res.final_objective!r}")
    print(f"path_length_1: {res.path_length_1!r}")
    print("x: " + " ".join("%.17g" % v for v in res.x_final))
    if res.status == "infeasible":
        raise UsageError("starting point is outside the box")
    if bad:
        print("invariant violation detected", file=sys.stderr)
        return EXIT_INVARIANT
    return EXIT_OK


def _cmd_example(args) -> int:
    overrides = {"m": args.m, "n": args.n, "spar": args.spar, "m_test": getattr(args, "m_test", None)}
    try:
        rows = bench.run_experiment(args.example, args.trials, args.out, seed=args.seed,
                                    overrides=overrides, full_scale=args.full_scale,
                                    max_iter=args.max_iter)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    by_solver = {}
    for r in rows:
        by_solver.setdefault(r["solver"], []).append(r)
    for name, rs in by_solver.items():
        its = np.mean([r["iterations"] for r in rs])
        conv = sum(r["status"] == "converged" for r in rs)
        print(f"{name}: converged {conv}/{len(rs)}, mean iterations {its:.1f}, "
              f"mean spa_rat {np.mean([r['spa_rat'] for r in rs]):.4f}")
    print(f"wrote {args.out}")
    return EXIT_OK


def _cmd_prox_check(args) -> int:
    if args.instances < 1 or args.grid_step <= 0:
        raise UsageError("--instances must be positive and --grid-step must be > 0")
    rng = np.random.default_rng(args.seed)
    worst_up, worst_down, bad = -math.inf, -math.inf, 0
    chunk = 100_000
    rows = []
    done = 0
    while done < args.instances:
        size = min(chunk, args.instances - done)
        inst = random_prox_instances(size, rng)
        keys = ("x", "z", "a", "b1", "b2", "h", "lo", "hi")
        _, phi, _ = prox_batch(*(inst[k] for k in keys))
        _, phi_o, _ = brute_force_prox_batch(*(inst[k] for k in keys), grid_step=args.grid_step)
        up = phi - phi_o
        down = phi_o - phi
        bad += int(np.count_nonzero(up > 1e-12))
        bad += int(np.count_nonzero(down > 0.5 * args.grid_step ** 2 + 1e-12))
        worst_up = max(worst_up, float(up.max()))
        worst_down = max(worst_down, float(down.max()))
        rows.append((done, size, float(up.max()), float(down.max())))
        done += size
    if args.out:
        bench._write_csv(args.out, ("offset", "instances", "max_prox_minus_oracle",
                                    "max_oracle_minus_prox"), rows)
    print(f"instances: {args.instances}")
    print(f"max phi(prox) - phi(oracle): {worst_up!r}")
    print(f"max phi(oracle) - phi(prox): {worst_down!r}")
    print(f"violations: {bad}")
    return EXIT_INVARIANT if bad else EXIT_OK


def _cmd_profile(args) -> int:
    try:
        rows = bench.read_metrics_csv(args.metrics)
        solvers, t, rho = bench.profile_from_metrics(rows)
    except (OSError, KeyError, ValueError) as exc:
        raise UsageError(f"cannot build profile from {args.metrics}: {exc}") from exc
    bench.write_profile_csv(args.out, solvers, t, rho)
    print(f"wrote {args.out}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="ehtl0", description="Hard thresholding solvers and benchmarks.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("solve", help="solve a problem stored as JSON")
    s.add_argument("problem")
    s.add_argument("--solver", choices=["alg1", "alg1e0", "iht", "fista", "aht"], default="alg1")
    s.add_argument("--epsilon", type=float, default=1e-3)
    s.add_argument("--beta", type=float, default=0.01)
    s.add_argument("--h", type=float, default=10.0)
    s.add_argument("--gamma", type=float, default=None,
                   help="default: 1/h + (2 beta + h) L_f (doubled for alg1e0)")
    s.add_argument("--eps-bar", type=float, default=None, help="default: 2 * epsilon")
    s.add_argument("--L", type=float, default=None, help="baseline step constant")
    s.add_argument("--x0", type=float, default=None, help="constant starting value (default 0)")
    s.add_argument("--max-iter", type=int, default=3000)
    s.add_argument("--trace", default=None, help="write the iteration trace to this CSV")
    s.set_defaults(func=_cmd_solve)

    for ex in (1, 2, 3):
        e = sub.add_parser(f"example{ex}", help=f"run the example {ex} benchmark")
        e.add_argument("--m", type=int, default=None)
        e.add_argument("--n", type=int, default=None)
        e.add_argument("--spar", type=float, default=None)
        if ex == 3:
            e.add_argument("--m-test", type=int, default=None)
        e.add_argument("--trials", type=int, default=1 if ex == 1 else 20)
        e.add_argument("--seed", type=int, default=0)
        e.add_argument("--max-iter", type=int, default=3000)
        e.add_argument("--out", default=f"example{ex}_out")
        e.add_argument("--full-scale", action="store_true")
        e.set_defaults(func=_cmd_example, example=ex)

    c = sub.add_parser("prox-check", help="compare the prox against the grid oracle")
    c.add_argument("--instances", type=int, default=100_000)
    c.add_argument("--grid-step", type=float, default=1e-4)
    c.add_argument("--seed", type=int, default=0)
    c.add_argument("--out", default=None)
    c.set_defaults(func=_cmd_prox_check)

    f = sub.add_parser("profile", help="performance profile from a metrics CSV")
    f.add_argument("metrics")
    f.add_argument("--out", required=True)
    f.set_defaults(func=_cmd_profile)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"ehtl0: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
