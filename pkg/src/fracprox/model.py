"""Problem definition, parameter records and solver traces.

The recovery problem is: find a sparse ``x`` with ``A x = b`` where ``A`` is a
dense ``m x n`` real matrix with ``m <= n``. Everything else in the package
consumes a :class:`ProblemInstance`.
"""
from __future__ import annotations

import enum
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import (
    DegenerateMatrix,
    DimensionMismatch,
    NonFiniteInput,
    StepSizeOutOfRange,
)

__all__ = [
    "ProblemInstance",
    "FractionPenaltyParams",
    "StoppingRule",
    "StopReason",
    "SolverRun",
    "new_problem",
    "default_mu",
    "spectral_norm_sq",
    "check_step_size",
    "load_instance",
    "save_instance",
]

# Relative slack when comparing mu against 1/||A||^2.
_MU_SLACK = 1e-12


def spectral_norm_sq(matrix, tol=1e-10, max_iters=5000):
    """Largest eigenvalue of ``A A^T`` (equivalently ``A^T A``) by power iteration.

    The start vector is the normalized all-ones vector. If the iteration ends
    on an eigenvalue that is provably not the largest (below the lower bound
    ``||A||_F^2 / min(m, n)``), it restarts once from a fixed-seed Gaussian
    vector; the all-ones vector can be orthogonal to the top eigenvector.

    Stops when the eigen-residual ``||G v - theta v||`` drops below
    ``tol * theta``.
    """
    A = np.asarray(matrix, dtype=float)
    m, n = A.shape
    gram = A @ A.T if m <= n else A.T @ A
    k = gram.shape[0]
    fro_sq = float(np.sum(A * A))
    if fro_sq == 0.0:
        return 0.0
    lower_bound = fro_sq / min(m, n)

    def iterate(v):
        v = v / np.linalg.norm(v)
        theta = 0.0
        for _ in range(max_iters):
            w = gram @ v
            theta = float(v @ w)
            resid = np.linalg.norm(w - theta * v)
            nrm = np.linalg.norm(w)
            if nrm == 0.0:
                return 0.0
            if resid <= tol * abs(theta):
                break
            v = w / nrm
        return theta

    theta = iterate(np.ones(k))
    if theta < lower_bound * (1 - 1e-12):
        rng = np.random.Generator(np.random.Philox(0))
        theta = max(theta, iterate(rng.standard_normal(k)))
    return theta


@dataclass(frozen=True, eq=False)
class ProblemInstance:
    """Measurement matrix, observation vector and cached ``||A||_2^2``.

    Build instances with :func:`new_problem`; the arrays are made read-only so
    an instance can be shared freely between runs.
    """

    matrix: np.ndarray
    observation: np.ndarray
    spectral_norm_sq: float

    @property
    def m(self) -> int:
        return self.matrix.shape[0]

    @property
    def n(self) -> int:
        return self.matrix.shape[1]

    @property
    def shape(self):
        return self.matrix.shape


def new_problem(matrix, observation) -> ProblemInstance:
    """Validate ``(A, b)`` and compute the spectral norm once."""
    A = np.array(matrix, dtype=float, copy=True)
    b = np.array(observation, dtype=float, copy=True).reshape(-1)
    if A.ndim != 2:
        raise DimensionMismatch(f"matrix must be 2-D, got shape {A.shape}")
    m, n = A.shape
    if m < 1 or n < 1:
        raise DimensionMismatch(f"matrix must be non-empty, got shape {A.shape}")
    if m > n:
        raise DimensionMismatch(f"expected an underdetermined system (m <= n), got m={m}, n={n}")
    if b.shape[0] != m:
        raise DimensionMismatch(f"observation has length {b.shape[0]}, expected {m}")
    if not (np.all(np.isfinite(A)) and np.all(np.isfinite(b))):
        raise NonFiniteInput("matrix and observation must be finite")
    if not np.any(A):
        raise DegenerateMatrix("matrix is identically zero")
    A.setflags(write=False)
    b.setflags(write=False)
    return ProblemInstance(A, b, spectral_norm_sq(A))


def default_mu(p: ProblemInstance) -> float:
    """``0.99 / ||A||_2^2``."""
    if p.spectral_norm_sq <= 0:
        raise DegenerateMatrix("spectral norm is zero")
    return 0.99 / p.spectral_norm_sq


def check_step_size(p: ProblemInstance, mu: float) -> None:
    """Raise :class:`StepSizeOutOfRange` unless ``0 < mu <= 1/||A||^2``."""
    if not (np.isfinite(mu) and mu > 0):
        raise StepSizeOutOfRange(f"mu must be positive and finite, got {mu}")
    if mu * p.spectral_norm_sq > 1 + _MU_SLACK:
        raise StepSizeOutOfRange(
            f"mu={mu:g} exceeds 1/||A||^2={1 / p.spectral_norm_sq:g}"
        )


@dataclass(frozen=True)
class FractionPenaltyParams:
    lam: float
    a: float
    mu: float

    def __post_init__(self):
        for name in ("lam", "a", "mu"):
            v = getattr(self, name)
            if not (np.isfinite(v) and v > 0):
                raise ValueError(f"{name} must be positive, got {v}")

    def check_against(self, p: ProblemInstance) -> None:
        check_step_size(p, self.mu)


@dataclass(frozen=True)
class StoppingRule:
    """Stop when ``||x+ - x|| / max(||x||, 1) <= rel_change_tol`` or after
    ``max_iters`` iterations."""

    rel_change_tol: float = 1e-15
    max_iters: int = 3000

    def __post_init__(self):
        if not self.rel_change_tol >= 0:
            raise ValueError(f"rel_change_tol must be >= 0, got {self.rel_change_tol}")
        if int(self.max_iters) != self.max_iters or self.max_iters < 1:
            raise ValueError(f"max_iters must be a positive integer, got {self.max_iters}")


class StopReason(str, enum.Enum):
    CONVERGED = "Converged"
    MAX_ITERS = "MaxIters"


@dataclass
class SolverRun:
    """Trace of one solver execution.

    ``objective_trace[k]`` is the objective at ``x^{k+1}`` and
    ``objective_before_trace[k]`` the objective at ``x^k``, both evaluated with
    the parameters ``param_trace[k]`` used in iteration ``k``. For fixed
    parameter schemes the two traces are shifted copies of each other.
    """

    final_iterate: np.ndarray
    objective_trace: list = field(default_factory=list)
    step_trace: list = field(default_factory=list)
    param_trace: list = field(default_factory=list)
    stop_reason: StopReason = StopReason.MAX_ITERS
    iterations: int = 0
    objective_before_trace: list = field(default_factory=list)
    rank_trace: list = field(default_factory=list)
    support_trace: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "final_iterate": [float(v) for v in self.final_iterate],
            "objective_trace": [float(v) for v in self.objective_trace],
            "step_trace": [float(v) for v in self.step_trace],
            "param_trace": [[float(lam), float(a)] for lam, a in self.param_trace],
            "stop_reason": self.stop_reason.value,
            "iterations": int(self.iterations),
            "objective_before_trace": [float(v) for v in self.objective_before_trace],
            "rank_trace": [[float(u), float(w)] for u, w in self.rank_trace],
            "support_trace": [int(v) for v in self.support_trace],
        }

    def to_json(self, **kwargs) -> str:
        return json.dumps(self.to_dict(), **kwargs)

    @classmethod
    def from_dict(cls, d: dict) -> "SolverRun":
        return cls(
            final_iterate=np.asarray(d["final_iterate"], dtype=float),
            objective_trace=list(d["objective_trace"]),
            step_trace=list(d["step_trace"]),
            param_trace=[tuple(pair) for pair in d["param_trace"]],
            stop_reason=StopReason(d["stop_reason"]),
            iterations=int(d["iterations"]),
            objective_before_trace=list(d.get("objective_before_trace", [])),
            rank_trace=[tuple(pair) for pair in d.get("rank_trace", [])],
            support_trace=list(d.get("support_trace", [])),
        )


def load_instance(path) -> ProblemInstance:
    """Read the plain-text instance format.

    First line ``m n``, then ``m`` lines of ``n`` matrix entries, then one line
    with the ``m`` observation entries.
    """
    lines = [ln for ln in Path(path).read_text(encoding="utf-8").splitlines() if ln.strip()]
    if not lines:
        raise DimensionMismatch(f"{path}: empty instance file")
    try:
        m, n = (int(tok) for tok in lines[0].split())
    except ValueError as exc:
        raise DimensionMismatch(f"{path}: first line must be 'm n'") from exc
    if len(lines) != m + 2:
        raise DimensionMismatch(f"{path}: expected {m + 2} non-empty lines, found {len(lines)}")
    try:
        rows = [[float(tok) for tok in ln.split()] for ln in lines[1 : m + 1]]
        b = [float(tok) for tok in lines[m + 1].split()]
    except ValueError as exc:
        raise NonFiniteInput(f"{path}: malformed number ({exc})") from exc
    if any(len(row) != n for row in rows):
        raise DimensionMismatch(f"{path}: every matrix row must have {n} entries")
    return new_problem(np.array(rows), np.array(b))


def save_instance(path, p: ProblemInstance) -> None:
    out = [f"{p.m} {p.n}"]
    out += [" ".join(repr(float(v)) for v in row) for row in p.matrix]
    out.append(" ".join(repr(float(v)) for v in p.observation))
    Path(path).write_text("\n".join(out) + "\n", encoding="utf-8")
