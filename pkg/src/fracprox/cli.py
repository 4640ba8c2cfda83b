"""Command-line front end: ``solve``, ``sweep`` and ``prox-plot``.

Exit status is 0 on success, 2 for a bad flag or unreadable input and 3 when
a solver fails at run time.
"""
from __future__ import annotations

import argparse
import csv
import logging
import math
import os
import sys
from pathlib import Path

import numpy as np

from .bench import SOLVER_NAMES, SolverSpec, make_instance, relative_error, solve, sweep_success_rate
from .errors import FracProxError
from .model import StoppingRule, default_mu, load_instance
from .penalty import ScalarObjectiveSpec
from .prox import emit_f_curve, h

EXIT_OK, EXIT_CONFIG, EXIT_SOLVER = 0, 2, 3

# flag name -> solver parameter, per solver
_SOLVER_FLAGS = {
    "ifpta-s1": {"lam": "lam", "a": "a"},
    "ifpta-s2": {"a": "a", "epsilon": "epsilon"},
    "cifpta-s1": {"lam": "lam", "a": "a", "tau": "tau"},
    "cifpta-s2": {"tau": "tau", "zeta": "zeta", "c": "c"},
    "ista": {"lam": "lam"},
}
_FLAG = {"lam": "--lambda", "a": "--a", "epsilon": "--epsilon", "tau": "--tau", "zeta": "--zeta", "c": "--c"}

log = logging.getLogger("fracprox")


class ConfigError(Exception):
    def __init__(self, flag, message):
        super().__init__(f"{flag}: {message}")
        self.flag = flag


def _seed(value):
    if value is not None:
        return value
    env = os.environ.get("FRACPROX_SEED")
    if env is None:
        return 0
    try:
        return int(env)
    except ValueError:
        raise ConfigError("--seed", f"FRACPROX_SEED={env!r} is not an integer") from None


def _positive(flag, v):
    if not (math.isfinite(v) and v > 0):
        raise ConfigError(flag, f"must be a positive number, got {v}")


def _parse_grid(text, n):
    parts = text.split(":")
    try:
        nums = [int(p) for p in parts]
    except ValueError:
        raise ConfigError("--r", f"expected lo:step:hi with integers, got {text!r}") from None
    if len(nums) == 1:
        lo, step, hi = nums[0], 1, nums[0]
    elif len(nums) == 3:
        lo, step, hi = nums
    else:
        raise ConfigError("--r", f"expected lo:step:hi, got {text!r}")
    if step < 1 or lo > hi:
        raise ConfigError("--r", f"empty or ill-formed grid {text!r}")
    grid = list(range(lo, hi + 1, step))
    if grid[0] < 1 or grid[-1] > n - 1:
        raise ConfigError("--r", f"sparsity levels must lie in [1, n-1] = [1, {n - 1}]")
    return grid


def _parse_range(text):
    parts = text.split(":")
    try:
        lo, hi = (float(p) for p in parts)
    except ValueError:
        raise ConfigError("--range", f"expected lo:hi, got {text!r}") from None
    if not (math.isfinite(lo) and math.isfinite(hi) and lo < hi):
        raise ConfigError("--range", f"need finite lo < hi, got {text!r}")
    return lo, hi


def _solver_params(name, args, mu):
    """Collect overrides for ``name`` and check them against preconditions."""
    flags = _SOLVER_FLAGS[name]
    params = {}
    for key, flag in _FLAG.items():
        v = getattr(args, key)
        if v is None:
            continue
        if key not in flags:
            raise ConfigError(flag, f"not used by solver {name}")
        params[key] = v
    if "lam" in params:
        if name == "ista":
            if not params["lam"] >= 0:
                raise ConfigError("--lambda", f"must be nonnegative, got {params['lam']}")
        else:
            _positive("--lambda", params["lam"])
    if "a" in params:
        _positive("--a", params["a"])
    if "epsilon" in params and not 0 < params["epsilon"] < 1:
        raise ConfigError("--epsilon", f"must lie in (0, 1), got {params['epsilon']}")
    if "tau" in params and not 0 < params["tau"] <= 1:
        raise ConfigError("--tau", f"must lie in (0, 1], got {params['tau']}")
    if "zeta" in params:
        _positive("--zeta", params["zeta"])
    if "c" in params and not 0 <= params["c"] < 1:
        raise ConfigError("--c", f"must lie in [0, 1), got {params['c']}")
    spec = SolverSpec(name, params)
    if name == "cifpta-s1" and mu is not None:
        prm = spec.resolved()
        if prm["a"] is not None:
            bound = 1 / math.sqrt(prm["lam"] * mu)
            if prm["a"] > bound * (1 + 1e-12):
                raise ConfigError(
                    "--a",
                    f"a={prm['a']:g} violates the convexity bound a <= 1/sqrt(lambda*mu) = {bound:g}",
                )
    return spec


def _load_problem(args):
    if args.instance is not None and args.random is not None:
        raise ConfigError("--instance", "give either --instance or --random, not both")
    if args.instance is not None:
        path = Path(args.instance)
        if not path.is_file():
            raise ConfigError("--instance", f"no such file: {path}")
        try:
            return load_instance(path), None, args.r
        except (FracProxError, ValueError, UnicodeDecodeError) as exc:
            raise ConfigError("--instance", str(exc)) from None
    vals = args.random if args.random is not None else ["32", "128", "4", "1"]
    if len(vals) not in (4, 5):
        raise ConfigError("--random", "expected m n r alpha [seed]")
    try:
        m, n, r = (int(v) for v in vals[:3])
        alpha = float(vals[3])
        seed = int(vals[4]) if len(vals) == 5 else _seed(args.seed)
    except ValueError:
        raise ConfigError("--random", f"malformed values {' '.join(vals)}") from None
    if not (1 <= m <= n and 1 <= r <= n - 1 and alpha >= 0):
        raise ConfigError("--random", "need 1 <= m <= n, 1 <= r <= n-1, alpha >= 0")
    p, xbar = make_instance(m, n, r, alpha, seed)
    return p, xbar, args.r if args.r is not None else r


def cmd_solve(args):
    p, xbar, r = _load_problem(args)
    if args.mu == "auto":
        mu = default_mu(p)
    else:
        try:
            mu = float(args.mu)
        except ValueError:
            raise ConfigError("--mu", f"expected 'auto' or a number, got {args.mu!r}") from None
        if not (math.isfinite(mu) and 0 < mu and mu * p.spectral_norm_sq <= 1 + 1e-12):
            raise ConfigError("--mu", f"must lie in (0, 1/||A||^2] = (0, {1 / p.spectral_norm_sq:g}]")
    spec = _solver_params(args.solver, args, mu)
    if args.solver in ("ifpta-s2", "cifpta-s2"):
        if r is None:
            raise ConfigError("--r", f"solver {args.solver} needs the sparsity estimate --r")
        if not 1 <= r <= p.n - 1:
            raise ConfigError("--r", f"must lie in [1, n-1] = [1, {p.n - 1}], got {r}")
    if not args.tol >= 0:
        raise ConfigError("--tol", f"must be nonnegative, got {args.tol}")
    if args.max_iters < 1:
        raise ConfigError("--max-iters", f"must be >= 1, got {args.max_iters}")
    stop = StoppingRule(args.tol, args.max_iters)
    try:
        run = solve(spec, p, r if r is not None else 1, mu, stop, seed=_seed(args.seed))
    except FracProxError as exc:
        print(f"solver error: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    Path(args.output).write_text(run.to_json() + "\n", encoding="utf-8")
    line = f"solver={args.solver} iterations={run.iterations} stop_reason={run.stop_reason.value}"
    if xbar is not None:
        line += f" RE={relative_error(run.final_iterate, xbar):.6e}"
    print(line)
    return EXIT_OK


def cmd_sweep(args):
    if args.small:
        m, n = args.m or 32, args.n or 128
        grid_text = args.r or "2:2:20"
    else:
        m, n = args.m or 128, args.n or 512
        grid_text = args.r or "10:5:70"
    if not 1 <= m <= n:
        raise ConfigError("--m", f"need 1 <= m <= n, got m={m}, n={n}")
    if not (math.isfinite(args.alpha) and args.alpha >= 0):
        raise ConfigError("--alpha", f"must be nonnegative, got {args.alpha}")
    grid = _parse_grid(grid_text, n)
    if args.trials < 1:
        raise ConfigError("--trials", f"must be >= 1, got {args.trials}")
    names = [s.strip() for s in args.solvers.split(",") if s.strip()]
    if not names:
        raise ConfigError("--solvers", "empty solver list")
    for name in names:
        if name not in SOLVER_NAMES:
            raise ConfigError("--solvers", f"unknown solver {name!r}; choose from {', '.join(SOLVER_NAMES)}")
    if len(set(names)) != len(names):
        raise ConfigError("--solvers", "duplicate solver names")
    _positive("--success-threshold", args.success_threshold)
    jobs = args.jobs
    if jobs is None:
        jobs = len(os.sched_getaffinity(0)) if hasattr(os, "sched_getaffinity") else os.cpu_count() or 1
    if jobs < 1:
        raise ConfigError("--jobs", f"must be >= 1, got {jobs}")
    try:
        report = sweep_success_rate(
            m, n, grid, args.alpha, names, args.trials, _seed(args.seed),
            jobs=jobs,
            success_threshold=args.success_threshold,
            relative=args.relative,
            dump_dir=args.dump_traces,
        )
    except FracProxError as exc:
        print(f"solver error: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    report.write(args.csv, args.json)
    width = max(len(nm) for nm in names)
    print(f"{'r':>{width}} " + " ".join(f"{r:>5d}" for r in grid))
    for name, rates in report.per_solver.items():
        print(f"{name:>{width}} " + " ".join(f"{v:5.2f}" for v in rates))
    return EXIT_OK


def cmd_prox_plot(args):
    _positive("--lambda", args.lam)
    _positive("--a", args.a)
    if not math.isfinite(args.gamma):
        raise ConfigError("--gamma", f"must be finite, got {args.gamma}")
    lo, hi = _parse_range(args.range)
    if args.points < 2:
        raise ConfigError("--points", f"must be >= 2, got {args.points}")
    if args.mode == "f":
        rows = emit_f_curve(ScalarObjectiveSpec(args.gamma, args.lam, args.a), lo, hi, args.points)
        header = ["beta", "f"]
    else:
        gam = np.linspace(lo, hi, args.points)
        rows = [(g_, h(g_, args.lam, args.a)) for g_ in gam]
        header = ["gamma", "h"]
    out = sys.stdout if args.output == "-" else open(args.output, "w", encoding="utf-8", newline="")
    try:
        w = csv.writer(out, lineterminator="\n")
        w.writerow(header)
        for x, y in rows:
            w.writerow([repr(float(x)), repr(float(y))])
    finally:
        if out is not sys.stdout:
            out.close()
    return EXIT_OK


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_CONFIG)


def build_parser():
    parser = _Parser(prog="fracprox", description="Sparse recovery with fraction-penalty thresholding.")
    parser.add_argument("-v", "--verbose", action="store_true", help="log solver warnings and debug info")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("solve", help="run one solver on one instance")
    s.add_argument("--instance", help="instance file: 'm n' line, m matrix rows, then b")
    s.add_argument("--random", nargs="+", metavar="V", help="synthesize an instance: m n r alpha [seed]")
    s.add_argument("--seed", type=int, help="random seed (fallback: $FRACPROX_SEED, then 0)")
    s.add_argument("--solver", choices=SOLVER_NAMES, default="cifpta-s2")
    s.add_argument("--lambda", dest="lam", type=float)
    s.add_argument("--a", type=float)
    s.add_argument("--mu", default="auto", help="'auto' (0.99/||A||^2) or a step size")
    s.add_argument("--epsilon", type=float)
    s.add_argument("--tau", type=float)
    s.add_argument("--zeta", type=float)
    s.add_argument("--c", type=float)
    s.add_argument("--r", type=int, help="sparsity estimate for adaptive solvers")
    s.add_argument("--tol", type=float, default=1e-15, help="relative-change tolerance")
    s.add_argument("--max-iters", type=int, default=3000)
    s.add_argument("--output", default="run.json", help="where to write the run as JSON")
    s.set_defaults(func=cmd_solve)

    w = sub.add_parser("sweep", help="success rate against sparsity")
    w.add_argument("--m", type=int)
    w.add_argument("--n", type=int)
    w.add_argument("--alpha", type=float, default=1.0)
    w.add_argument("--r", help="sparsity grid lo:step:hi (inclusive)")
    w.add_argument("--trials", type=int, default=30)
    w.add_argument("--solvers", default="cifpta-s2,ifpta-s2,ista")
    w.add_argument("--seed", type=int)
    w.add_argument("--jobs", type=int, help="worker processes (default: available cores)")
    w.add_argument("--csv", default="sweep.csv")
    w.add_argument("--json", default="sweep.json")
    w.add_argument("--small", action="store_true", help="m=32, n=128, r=2:2:20 unless overridden")
    w.add_argument("--success-threshold", type=float, default=1e-4)
    w.add_argument("--relative", action="store_true", help="divide the error by ||xbar||")
    w.add_argument("--dump-traces", metavar="DIR", help="write every run as JSON into DIR")
    w.set_defaults(func=cmd_sweep)

    c = sub.add_parser("prox-plot", help="sample f(beta) or the thresholding map as CSV")
    c.add_argument("--lambda", dest="lam", type=float, required=True)
    c.add_argument("--a", type=float, required=True)
    c.add_argument("--gamma", type=float, default=0.0)
    c.add_argument("--range", default="-2:2", help="lo:hi")
    c.add_argument("--points", type=int, default=400)
    c.add_argument("--mode", choices=("f", "prox"), default="f")
    c.add_argument("--output", default="-", help="CSV path, '-' for stdout")
    c.set_defaults(func=cmd_prox_plot)
    return parser


def _glue_ranges(argv):
    # "--range -2:2" would otherwise be read as an unknown option
    out, it = [], iter(argv)
    for tok in it:
        if tok == "--range":
            nxt = next(it, None)
            out.append(tok if nxt is None else f"--range={nxt}")
        else:
            out.append(tok)
    return out


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(_glue_ranges(sys.argv[1:] if argv is None else list(argv)))
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"fracprox {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"fracprox {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
