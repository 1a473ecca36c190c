"""Command-line entry point: ``rankreg {synth,solve,compare,verify}``.

Exit codes: 0 success, 1 verification failure, 2 usage or input error.
"""
from __future__ import annotations

import argparse
import sys
from pathlib import Path

from . import io, suites
from .exceptions import DegenerateProblemError, InputError, RankRegError
from .objective import ESTIMATORS, default_x0, lipschitz_bound, step_size
from .solvers import ALGORITHMS, SolverConfig, solve
from .spectral import reconstruct

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _step_arg(text):
    if text == "auto":
        return text
    try:
        v = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError("expected 'auto' or a positive number")
    if not v > 0:
        raise argparse.ArgumentTypeError("step size must be positive")
    return v


def build_parser():
    # --seed is accepted before or after the subcommand
    seed_parent = argparse.ArgumentParser(add_help=False)
    seed_parent.add_argument("--seed", type=int, default=argparse.SUPPRESS,
                             help="global random seed (default 0)")

    p = _Parser(prog="rankreg",
                description="Rank-regularized least squares via proximal "
                            "gradient methods.")
    p.add_argument("--seed", type=int, default=0,
                   help="global random seed (default 0)")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    sp = sub.add_parser("synth", parents=[seed_parent],
                        help="write a synthetic problem bundle")
    st = suites.STANDARD
    sp.add_argument("--d", type=int, default=st["d"])
    sp.add_argument("--n", type=int, default=st["n"])
    sp.add_argument("--k", type=int, default=st["k"])
    sp.add_argument("--true-rank", type=int, default=st["true_rank"])
    sp.add_argument("--noise-sigma", type=float, default=st["noise_sigma"])
    sp.add_argument("--lambda", dest="lam", type=float, default=st["lam"])
    sp.add_argument("--out", required=True, help="bundle directory")

    def solver_opts(q):
        q.add_argument("--step", type=_step_arg, default="auto",
                       help="'auto' or a fixed step size")
        q.add_argument("--estimator", choices=ESTIMATORS, default="column-norm",
                       help="gradient-bound estimator for the auto step")
        q.add_argument("--max-iters", type=int, default=10000,
                       help="iteration cap (default 10000)")
        q.add_argument("--tol", type=float, default=None,
                       help="fixed-point residual tolerance "
                            "(default 1e-9 * max(1, ||Y||_F))")

    sp = sub.add_parser("solve", parents=[seed_parent], help="run one solver")
    sp.add_argument("problem_path", help="bundle directory or manifest")
    sp.add_argument("--algo", choices=ALGORITHMS, default="pgd")
    solver_opts(sp)
    sp.add_argument("--trace-out", required=True, help="trace CSV path")
    sp.add_argument("--x-out", required=True, help="final X as CSV")

    sp = sub.add_parser("compare", parents=[seed_parent],
                        help="run all solvers and write traces plus a chart")
    sp.add_argument("problem_path")
    sp.add_argument("--out-dir", required=True)
    solver_opts(sp)

    sp = sub.add_parser("verify", parents=[seed_parent],
                        help="run a verification suite")
    sp.add_argument("suite", choices=sorted(suites.SUITES))
    sp.add_argument("--out", default=None,
                    help="report path (default <suite>_report.json)")
    sp.add_argument("--problem", default=None,
                    help="bundle for the lemmas/rates suites "
                         "(default: fresh synthetic bundles)")
    sp.add_argument("--bundles", type=int, default=None,
                    help="synthetic bundles for lemmas/rates")
    sp.add_argument("--d", type=int, default=4, help="theorem1: rows of D")
    sp.add_argument("--a", type=float, default=10.0,
                    help="theorem1: deviation parameter a")
    sp.add_argument("--lambda", dest="lam", type=float, default=1.0,
                    help="theorem1: regularization weight")
    sp.add_argument("--x0", type=float, default=25.0,
                    help="theorem1: F(X0) = ||Y||_F^2 with X0 = 0")
    sp.add_argument("--trials", type=int, default=500,
                    help="theorem1: Monte Carlo trials (>= 100)")
    return p


def _plan(P, X0, args):
    if args.step != "auto":
        return step_size(P, X0, "manual", args.step, args.estimator)
    try:
        return step_size(P, X0, "auto", estimator=args.estimator)
    except DegenerateProblemError:
        # F(X0) = 0: X0 already minimizes F and the 2 lam / G^2 term is
        # unbounded, so the step condition reduces to s <= 1 / L
        L = lipschitz_bound(P)
        print("note: F(X0) = 0, using s = 1/L", file=sys.stderr)
        return step_size(P, X0, "manual", 1.0 / L, args.estimator)


def _config(alg, plan, args):
    return SolverConfig(alg, plan, max_iters=args.max_iters, tol=args.tol)


def _summary(alg, tr):
    last = tr.records[-1]
    return (f"{alg}: objective={last.objective!r} rank={last.rank} "
            f"iterations={last.iter} terminated_by={tr.terminated_by}")


def cmd_synth(args):
    b = io.make_synthetic(args.d, args.n, args.k, args.true_rank,
                          args.noise_sigma, args.lam, args.seed)
    path = io.write_bundle(args.out, b)
    print(f"wrote {path}")
    return EXIT_OK


def cmd_solve(args):
    P = io.read_bundle(args.problem_path).problem()
    X0 = default_x0(P)
    plan = _plan(P, X0, args)
    X, tr = solve(P, X0, _config(args.algo, plan, args))
    io.write_trace(args.trace_out, tr)
    io.write_matrix(args.x_out, reconstruct(X))
    print(_summary(args.algo, tr))
    return EXIT_OK


def cmd_compare(args):
    P = io.read_bundle(args.problem_path).problem()
    X0 = default_x0(P)
    plan = _plan(P, X0, args)
    out = Path(args.out_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise InputError(f"cannot create {out}: {exc}") from exc
    traces = {}
    for alg in ALGORITHMS:
        _, tr = solve(P, X0, _config(alg, plan, args))
        traces[alg] = tr
        io.write_trace(out / f"trace_{alg}.csv", tr)
        print(_summary(alg, tr))
    io.write_combined(out / "combined.csv", traces)
    io.write_svg(out / "objective.svg",
                 {alg: tr.objectives().tolist() for alg, tr in traces.items()})
    finals = [tr.records[-1].objective for tr in traces.values()]
    spread = max(finals) - min(finals)
    hit = {alg: suites.iterations_to_reach(tr) for alg, tr in traces.items()}
    print(f"final objective spread={spread!r}; iterations to within 1e-6 of "
          f"final: " + ", ".join(f"{a}={n}" for a, n in hit.items()))
    return EXIT_OK


def cmd_verify(args):
    kw = {"seed": args.seed}
    if args.suite in ("lemmas", "rates"):
        if args.problem is not None:
            kw["bundle"] = io.read_bundle(args.problem)
        if args.bundles is not None:
            kw["bundles"] = args.bundles
    elif args.suite == "theorem1":
        kw.update(d=args.d, a=args.a, lam=args.lam, x0=args.x0,
                  trials=args.trials)
    report = suites.run_suite(args.suite, **kw)
    path = args.out or f"{args.suite}_report.json"
    io.write_report(path, report)
    n_fail = sum(1 for c in report["checks"]
                 if not (c["passed"] or c.get("vacuous", False)))
    status = "PASS" if report["passed"] else "FAIL"
    print(f"{args.suite}: {status} ({len(report['checks'])} checks, "
          f"{n_fail} failed); report {path}")
    return EXIT_OK if report["passed"] else EXIT_FAIL


COMMANDS = {"synth": cmd_synth, "solve": cmd_solve, "compare": cmd_compare,
            "verify": cmd_verify}


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except (InputError, DegenerateProblemError) as exc:
        print(f"rankreg: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except RankRegError as exc:
        print(f"rankreg: error: {exc}", file=sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
