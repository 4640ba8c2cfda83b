"""Random recovery experiments and success-rate sweeps.

Instances follow the usual compressed-sensing protocol: an i.i.d. standard
Gaussian ``A``, an ``r``-sparse ground truth whose nonzeros are
``sign * 10**(alpha * u)`` with ``u ~ U[0, 1]``, and ``b = A x``.

Random streams come from numpy's Philox4x64-10 counter-based bit generator,
keyed through :class:`numpy.random.SeedSequence`, so results are identical
across platforms for a given seed.
"""
from __future__ import annotations

import csv
import io
import json
import math
import os
import zlib
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .errors import DimensionMismatch, SparsityOutOfRange
from .model import ProblemInstance, SolverRun, StoppingRule, default_mu, new_problem
from .solvers import (
    AdaptiveConfigCIFPTA,
    AdaptiveConfigIFPTA,
    cifpta_interval,
    ifpta_interval,
    lambda_bar,
    run_cifpta_s1,
    run_cifpta_s2,
    run_ifpta_s1,
    run_ifpta_s2,
    run_ista_soft,
)

__all__ = [
    "SOLVER_NAMES",
    "SparseSignal",
    "SolverSpec",
    "SweepReport",
    "TrialResult",
    "make_rng",
    "gen_gaussian_matrix",
    "gen_sparse_signal",
    "relative_error",
    "make_instance",
    "solve",
    "run_trial",
    "trial_seed",
    "sweep_success_rate",
    "adaptive_diagnostics",
]

SUCCESS_THRESHOLD = 1e-4
DESCENT_SLACK = 1e-12

SOLVER_NAMES = ("ifpta-s1", "ifpta-s2", "cifpta-s1", "cifpta-s2", "ista")

_DEFAULTS = {
    # lam=None: midpoint of the recommended range (||b||^2, lambda_bar)
    "ifpta-s1": {"lam": None, "a": 2.0},
    "ifpta-s2": {"a": 2.0, "epsilon": 0.01},
    # a=None: a = tau / sqrt(lam mu)
    "cifpta-s1": {"lam": 100.0, "a": None, "tau": 0.1},
    "cifpta-s2": {"tau": 0.5, "zeta": 1e-4, "c": 0.5, "a_hat_range": (1, 100)},
    "ista": {"lam": 1e-3},
}


def make_rng(*key) -> np.random.Generator:
    """Philox generator keyed by a tuple of nonnegative integers."""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([int(k) for k in key])))


def _name_key(name: str) -> int:
    return zlib.crc32(name.encode("utf-8"))


def gen_gaussian_matrix(m, n, seed) -> np.ndarray:
    """``m x n`` matrix of i.i.d. N(0, 1) entries, deterministic per seed."""
    if m < 1 or n < 1:
        raise DimensionMismatch(f"m and n must be positive, got {m}, {n}")
    return make_rng(seed, 0).standard_normal((m, n))


@dataclass(frozen=True, eq=False)
class SparseSignal:
    values: np.ndarray
    support: tuple
    alpha: float
    seed: int

    @property
    def r(self) -> int:
        return len(self.support)


def gen_sparse_signal(n, r, alpha, seed) -> SparseSignal:
    """Ground truth with ``r`` nonzeros at a uniformly random support.

    The support comes from a partial Fisher-Yates shuffle of ``0..n-1``.
    """
    if not 1 <= r <= n:
        raise SparsityOutOfRange(f"sparsity r={r} must satisfy 1 <= r <= n={n}")
    if not alpha >= 0:
        raise ValueError(f"alpha must be nonnegative, got {alpha}")
    rng = make_rng(seed, 1)
    idx = np.arange(n)
    for i in range(r):
        j = int(rng.integers(i, n))
        idx[i], idx[j] = idx[j], idx[i]
    support = np.sort(idx[:r])
    signs = np.where(rng.integers(0, 2, size=r) == 1, 1.0, -1.0)
    mags = 10.0 ** (alpha * rng.random(r))
    values = np.zeros(n)
    values[support] = signs * mags
    values.setflags(write=False)
    return SparseSignal(values, tuple(int(i) for i in support), float(alpha), int(seed))


def relative_error(x, xbar, relative=False) -> float:
    """``||x - xbar||_2``. Despite the name this is an absolute distance;
    ``relative=True`` divides by ``||xbar||_2``."""
    target = xbar.values if isinstance(xbar, SparseSignal) else np.asarray(xbar, dtype=float)
    x = np.asarray(x, dtype=float)
    if x.shape != target.shape:
        raise DimensionMismatch(f"shapes differ: {x.shape} vs {target.shape}")
    err = float(np.linalg.norm(x - target))
    if relative:
        err /= max(float(np.linalg.norm(target)), np.finfo(float).tiny)
    return err


@dataclass(frozen=True)
class SolverSpec:
    """A solver name plus parameter overrides on top of the defaults."""

    name: str
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.name not in SOLVER_NAMES:
            raise ValueError(f"unknown solver {self.name!r}; expected one of {', '.join(SOLVER_NAMES)}")
        unknown = set(self.params) - set(_DEFAULTS[self.name])
        if unknown:
            raise ValueError(f"{self.name}: unknown parameter(s) {', '.join(sorted(unknown))}")

    def resolved(self) -> dict:
        out = dict(_DEFAULTS[self.name])
        out.update(self.params)
        return out

    def to_dict(self) -> dict:
        d = self.resolved()
        if "a_hat_range" in d:
            d["a_hat_range"] = list(d["a_hat_range"])
        return {"name": self.name, "params": d}


def _as_spec(spec) -> SolverSpec:
    return spec if isinstance(spec, SolverSpec) else SolverSpec(str(spec))


def solve(spec, p: ProblemInstance, r: int, mu=None, stop=None, seed=0, x0=None) -> SolverRun:
    """Run a named solver on ``p``; ``r`` is the assumed sparsity for
    adaptive solvers and ``seed`` keys their random fallback draws."""
    spec = _as_spec(spec)
    prm = spec.resolved()
    mu = default_mu(p) if mu is None else mu
    if spec.name == "ifpta-s1":
        lam = prm["lam"]
        if lam is None:
            lam = 0.5 * (float(p.observation @ p.observation) + lambda_bar(p, prm["a"]))
        return run_ifpta_s1(p, lam, prm["a"], mu, stop, x0)
    if spec.name == "ifpta-s2":
        cfg = AdaptiveConfigIFPTA(r, a=prm["a"], epsilon=prm["epsilon"])
        return run_ifpta_s2(p, cfg, mu, stop, x0)
    if spec.name == "cifpta-s1":
        lam = prm["lam"]
        a = prm["a"] if prm["a"] is not None else prm["tau"] / math.sqrt(lam * mu)
        return run_cifpta_s1(p, lam, a, mu, stop, x0)
    if spec.name == "cifpta-s2":
        rng_seed = int(np.random.SeedSequence([int(seed), 2, _name_key(spec.name)]).generate_state(1)[0])
        cfg = AdaptiveConfigCIFPTA(
            r,
            tau=prm["tau"],
            zeta=prm["zeta"],
            c=prm["c"],
            a_hat_range=tuple(prm["a_hat_range"]),
            rng_seed=rng_seed,
        )
        return run_cifpta_s2(p, cfg, mu, stop, x0)
    return run_ista_soft(p, prm["lam"], mu, stop, x0)


def make_instance(m, n, r, alpha, seed):
    """``(problem, ground_truth)`` for one seeded trial."""
    A = gen_gaussian_matrix(m, n, seed)
    xbar = gen_sparse_signal(n, r, alpha, seed)
    return new_problem(A, A @ xbar.values), xbar


@dataclass
class TrialResult:
    re: float
    run: SolverRun
    xbar: SparseSignal
    problem: ProblemInstance


def run_trial(m, n, r, alpha, solver_spec, seed, stop=None, relative=False) -> TrialResult:
    """One seeded recovery trial from ``x0 = 0`` with ``mu = 0.99/||A||^2``.

    The instance depends on ``seed`` only, so different solvers given the same
    seed see the same ``(A, xbar, b)``.
    """
    if not 1 <= r <= n:
        raise SparsityOutOfRange(f"sparsity r={r} must satisfy 1 <= r <= n={n}")
    p, xbar = make_instance(m, n, r, alpha, seed)
    stop = stop or StoppingRule(1e-15, 3000)
    run = solve(solver_spec, p, r, default_mu(p), stop, seed=seed)
    return TrialResult(relative_error(run.final_iterate, xbar, relative), run, xbar, p)


def trial_seed(base_seed, r, trial) -> int:
    """Instance seed for cell ``(r, trial)``; independent of the solver."""
    return int(np.random.SeedSequence([int(base_seed), int(r), int(trial)]).generate_state(1)[0])


def adaptive_diagnostics(spec, run: SolverRun, mu, r) -> dict:
    """Count per-iteration rule violations in a finished run.

    ``interval``: iterations with ``v_r > v_{r+1}`` whose ``lam`` falls outside the
    half-open interval that separates the r-th and (r+1)-th magnitudes.
    ``support``: such iterations leaving more than ``r`` nonzeros.
    ``descent``: steps whose objective rose by more than ``DESCENT_SLACK``.
    """
    spec = _as_spec(spec)
    prm = spec.resolved()
    out = {"iterations": run.iterations, "checked": 0, "interval": 0, "support": 0, "descent": 0}
    out["descent"] = sum(
        1 for after, before in zip(run.objective_trace, run.objective_before_trace)
        if after > before + DESCENT_SLACK
    )
    if not run.rank_trace:
        return out
    for (lam, a), (v_r, v_r1), nnz in zip(run.param_trace, run.rank_trace, run.support_trace):
        if not v_r > v_r1:
            continue
        out["checked"] += 1
        if spec.name == "ifpta-s2":
            lo, hi = ifpta_interval(v_r, v_r1, prm["a"], mu)
        else:
            lo, hi = cifpta_interval(v_r, v_r1, prm["tau"], mu)
        if not lo <= lam < hi:
            out["interval"] += 1
        if nnz > r:
            out["support"] += 1
    return out


@dataclass
class SweepReport:
    grid: list
    per_solver: dict
    trials: int
    config_digest: dict
    diagnostics: dict = field(default_factory=dict)
    errors: dict = field(default_factory=dict)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["solver", "r", "success_rate", "trials"])
        for name, rates in self.per_solver.items():
            for r, rate in zip(self.grid, rates):
                w.writerow([name, r, repr(float(rate)), self.trials])
        return buf.getvalue()

    def to_dict(self) -> dict:
        return {
            "grid": list(self.grid),
            "per_solver": {k: [float(v) for v in vs] for k, vs in self.per_solver.items()},
            "trials": self.trials,
            "config_digest": self.config_digest,
            "diagnostics": self.diagnostics,
            "errors": self.errors,
        }

    def to_json(self, **kwargs) -> str:
        return json.dumps(self.to_dict(), **kwargs)

    def write(self, csv_path=None, json_path=None) -> None:
        if csv_path is not None:
            Path(csv_path).write_text(self.to_csv(), encoding="utf-8")
        if json_path is not None:
            Path(json_path).write_text(self.to_json(indent=2, sort_keys=True) + "\n", encoding="utf-8")


def _cell(args):
    m, n, r, alpha, spec, seed, threshold, relative, dump_dir, tag = args
    res = run_trial(m, n, r, alpha, spec, seed, relative=relative)
    diag = adaptive_diagnostics(spec, res.run, default_mu(res.problem), r)
    if dump_dir is not None:
        Path(dump_dir, f"{tag}.json").write_text(res.run.to_json(), encoding="utf-8")
    return res.re, diag


def sweep_success_rate(
    m,
    n,
    r_grid,
    alpha,
    solver_specs,
    trials,
    base_seed,
    jobs=1,
    success_threshold=SUCCESS_THRESHOLD,
    relative=False,
    dump_dir=None,
) -> SweepReport:
    """Success rate of each solver at each sparsity level.

    Every (solver, r) cell runs ``trials`` trials; trial ``i`` at sparsity
    ``r`` uses the instance seeded by ``trial_seed(base_seed, r, i)`` for all
    solvers, so comparisons between solvers are paired.
    """
    r_grid = [int(r) for r in r_grid]
    if not r_grid:
        raise ValueError("r_grid must be non-empty")
    if any(b <= a for a, b in zip(r_grid, r_grid[1:])):
        raise ValueError("r_grid must be strictly increasing")
    if trials < 1:
        raise ValueError(f"trials must be >= 1, got {trials}")
    for r in r_grid:
        if not 1 <= r <= n - 1:
            raise SparsityOutOfRange(f"sparsity r={r} must satisfy 1 <= r <= n-1={n - 1}")
    specs = [_as_spec(s) for s in solver_specs]
    names = [s.name for s in specs]
    if len(set(names)) != len(names):
        raise ValueError("solver list contains duplicates")
    if dump_dir is not None:
        os.makedirs(dump_dir, exist_ok=True)

    keys, tasks = [], []
    for spec in specs:
        for r in r_grid:
            for i in range(trials):
                seed = trial_seed(base_seed, r, i)
                tag = f"{spec.name}_r{r}_t{i}"
                keys.append((spec.name, r, i))
                tasks.append((m, n, r, alpha, spec, seed, success_threshold, relative, dump_dir, tag))

    if jobs is None or jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_cell, tasks, chunksize=4))
    else:
        results = [_cell(t) for t in tasks]
    by_key = dict(zip(keys, results))

    per_solver, diagnostics, errors = {}, {}, {}
    for spec in specs:
        rates, errs = [], []
        totals = {"iterations": 0, "checked": 0, "interval": 0, "support": 0, "descent": 0}
        for r in r_grid:
            cell = [by_key[(spec.name, r, i)] for i in range(trials)]
            rates.append(sum(1 for re, _ in cell if re <= success_threshold) / trials)
            errs.append([float(re) for re, _ in cell])
            for _, diag in cell:
                for k in totals:
                    totals[k] += diag[k]
        per_solver[spec.name] = rates
        diagnostics[spec.name] = totals
        errors[spec.name] = errs

    digest = {
        "m": m,
        "n": n,
        "alpha": alpha,
        "r_grid": r_grid,
        "trials": trials,
        "base_seed": base_seed,
        "mu_policy": "0.99/||A||_2^2",
        "stopping": asdict(StoppingRule(1e-15, 3000)),
        "success_threshold": success_threshold,
        "relative_error": relative,
        "rng": "numpy Philox4x64-10 via SeedSequence([base_seed, r, trial])",
        "solvers": [s.to_dict() for s in specs],
    }
    return SweepReport(r_grid, per_solver, trials, digest, diagnostics, errors)
