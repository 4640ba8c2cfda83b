"""Iterative fraction-penalty thresholding solvers.

All solvers share one loop::

    x^{k+1} = prox(B_mu(x^k)),      B_mu(z) = z + mu A^T (b - A z)

and differ only in how the weight ``lam``, the shape ``a`` and the threshold
are chosen at each iteration:

* ``ifpta-s1``  fixed ``(lam, a)``, two-branch threshold.
* ``ifpta-s2``  ``lam`` adapted from the sorted magnitudes of ``B_mu(x^k)``.
* ``cifpta-s1`` fixed ``(lam, a)`` inside the convex regime ``a <= 1/sqrt(lam mu)``.
* ``cifpta-s2`` both ``lam`` and ``a`` adapted, always convex.
* ``ista``      soft thresholding, an l1 baseline.
"""
from __future__ import annotations

import enum
import logging
import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import (
    ConvexityViolated,
    DegenerateObservation,
    DimensionMismatch,
    NonFiniteInput,
    NonFiniteIterate,
    SparsityOutOfRange,
)
from .model import (
    ProblemInstance,
    SolverRun,
    StoppingRule,
    StopReason,
    check_step_size,
    default_mu,
)
from .prox import threshold, threshold_prox

__all__ = [
    "Branch",
    "AdaptiveConfigIFPTA",
    "AdaptiveConfigCIFPTA",
    "gradient_step_B",
    "nonincreasing_rearrangement",
    "lambda_bar",
    "adaptive_lambda_ifpta",
    "adaptive_params_cifpta",
    "ifpta_interval",
    "cifpta_interval",
    "run_ifpta_s1",
    "run_ifpta_s2",
    "run_cifpta_s1",
    "run_cifpta_s2",
    "run_ista_soft",
    "fixed_point_residual",
]

log = logging.getLogger(__name__)

_CONVEX_SLACK = 1e-12


class Branch(str, enum.Enum):
    BRANCH1 = "Branch1"
    BRANCH2 = "Branch2"


@dataclass(frozen=True)
class AdaptiveConfigIFPTA:
    """Adaptive-``lam`` settings; defaults are the ones used in the experiments."""

    sparsity_r: int
    a: float = 2.0
    epsilon: float = 0.01

    def __post_init__(self):
        if not (np.isfinite(self.a) and self.a > 0):
            raise ValueError(f"a must be positive, got {self.a}")
        if not 0 < self.epsilon < 1:
            raise ValueError(f"epsilon must lie in (0, 1), got {self.epsilon}")
        if int(self.sparsity_r) != self.sparsity_r or self.sparsity_r < 1:
            raise SparsityOutOfRange(f"sparsity_r must be a positive integer, got {self.sparsity_r}")


@dataclass(frozen=True)
class AdaptiveConfigCIFPTA:
    """Adaptive-``(lam, a)`` settings for the convex scheme.

    ``a_hat_range`` is the inclusive integer range the fallback shape is drawn
    from whenever the adaptive ``lam`` collapses to zero.
    """

    sparsity_r: int
    tau: float = 0.5
    zeta: float = 1e-4
    c: float = 0.5
    a_hat_range: tuple = (1, 100)
    rng_seed: int = 0

    def __post_init__(self):
        if not 0 < self.tau <= 1:
            raise ValueError(f"tau must lie in (0, 1], got {self.tau}")
        if not (np.isfinite(self.zeta) and self.zeta > 0):
            raise ValueError(f"zeta must be positive, got {self.zeta}")
        if not 0 <= self.c < 1:
            raise ValueError(f"c must lie in [0, 1), got {self.c}")
        lo, hi = self.a_hat_range
        if not (int(lo) == lo and int(hi) == hi and 1 <= lo <= hi):
            raise ValueError(f"a_hat_range must be positive integers lo <= hi, got {self.a_hat_range}")
        if int(self.sparsity_r) != self.sparsity_r or self.sparsity_r < 1:
            raise SparsityOutOfRange(f"sparsity_r must be a positive integer, got {self.sparsity_r}")


def gradient_step_B(p: ProblemInstance, z, mu):
    """``z + mu * A^T (b - A z)``."""
    z = np.asarray(z, dtype=float).reshape(-1)
    if z.shape[0] != p.n:
        raise DimensionMismatch(f"z has length {z.shape[0]}, expected {p.n}")
    if not mu > 0:
        raise ValueError(f"mu must be positive, got {mu}")
    return z + mu * (p.matrix.T @ (p.observation - p.matrix @ z))


def nonincreasing_rearrangement(x):
    """Absolute values sorted in descending order."""
    return np.sort(np.abs(np.asarray(x, dtype=float)))[::-1]


def _rank_pair(v, r):
    """``(|v|_r, |v|_{r+1})``, the r-th and (r+1)-th largest magnitudes (1-based)."""
    n = v.shape[0]
    if not 1 <= r <= n - 1:
        raise SparsityOutOfRange(f"sparsity r={r} must satisfy 1 <= r <= n-1={n - 1}")
    s = np.partition(np.abs(v), (n - r - 1, n - r))
    return float(s[n - r]), float(s[n - r - 1])


def lambda_bar(p: ProblemInstance, a) -> float:
    """Upper end of the fixed-``lam`` range recommended for ``ifpta-s1``."""
    if not a > 0:
        raise ValueError(f"a must be positive, got {a}")
    b = p.observation
    bsq = float(b @ b)
    if bsq == 0:
        raise DegenerateObservation("observation is zero")
    atb = float(np.max(np.abs(p.matrix.T @ b)))
    return bsq + (atb + math.sqrt(atb + 2 * a * bsq * atb)) / a


def ifpta_interval(v_r, v_r1, a, mu):
    """Half-open ``[lo, hi)`` that keeps exactly ``r`` entries above threshold."""
    return 2 * v_r1 / (a * mu), (2 * a * v_r + 1) ** 2 / (4 * a * a * mu)


def cifpta_interval(v_r, v_r1, tau, mu):
    """Half-open ``[lo, hi)`` for the convex scheme."""
    s = tau * tau * mu
    return 4 * v_r1 * v_r1 / s, 4 * v_r * v_r / s


def _lambda_ifpta(v_r, v_r1, a, epsilon, mu):
    lam1 = 2 * v_r1 / (a * mu)
    if lam1 <= 1 / (a * a * mu):
        return lam1, Branch.BRANCH1
    return (1 - epsilon) * (2 * a * v_r + 1) ** 2 / (4 * a * a * mu), Branch.BRANCH2


def adaptive_lambda_ifpta(Bx, cfg: AdaptiveConfigIFPTA, mu):
    """Choose ``lam_k`` from the r-th and (r+1)-th magnitudes of ``B_mu(x^k)``.

    Returns ``(lam, branch)``. ``Branch1`` pairs with the threshold
    ``lam mu a / 2`` and ``Branch2`` with ``sqrt(lam mu) - 1/(2a)``.
    """
    if not mu > 0:
        raise ValueError(f"mu must be positive, got {mu}")
    v_r, v_r1 = _rank_pair(np.asarray(Bx, dtype=float), cfg.sparsity_r)
    return _lambda_ifpta(v_r, v_r1, cfg.a, cfg.epsilon, mu)


def _params_cifpta(v_r, v_r1, cfg, mu, rng):
    s = cfg.tau * cfg.tau * mu
    lo, hi = 4 * v_r1 * v_r1 / s, 4 * v_r * v_r / s
    lam = lo + min(cfg.zeta, cfg.c * (hi - lo))
    if lam != 0:
        return lam, cfg.tau / math.sqrt(lam * mu)
    a_lo, a_hi = cfg.a_hat_range
    return 0.0, float(rng.integers(a_lo, a_hi, endpoint=True))


def adaptive_params_cifpta(Bx, cfg: AdaptiveConfigCIFPTA, mu, rng):
    """Choose ``(lam_k, a_k)`` for the convex scheme.

    ``a_k = tau / sqrt(lam_k mu)`` keeps every step strictly convex. When
    ``lam_k`` is zero the penalty vanishes and ``a_k`` is drawn from
    ``cfg.a_hat_range`` with ``rng`` (a :class:`numpy.random.Generator`).
    """
    if not mu > 0:
        raise ValueError(f"mu must be positive, got {mu}")
    v_r, v_r1 = _rank_pair(np.asarray(Bx, dtype=float), cfg.sparsity_r)
    return _params_cifpta(v_r, v_r1, cfg, mu, rng)


class _FractionPenalty:
    @staticmethod
    def value(x, a):
        ax = a * np.abs(x)
        return float(np.sum(ax / (ax + 1)))

    @staticmethod
    def diff(u, v, a):
        """``P_a(u) - P_a(v)`` without cancellation between large sums."""
        au, av = a * np.abs(u), a * np.abs(v)
        return float(np.sum((au - av) / ((au + 1) * (av + 1))))


class _L1Penalty:
    @staticmethod
    def value(x, a):
        return float(np.sum(np.abs(x)))

    @staticmethod
    def diff(u, v, a):
        return float(np.sum(np.abs(u) - np.abs(v)))


def _soft(v, lam_mu, a, t):
    return np.sign(v) * np.maximum(np.abs(v) - t, 0.0)


def _iterate(p, x0, mu, stop, rule, prox=threshold_prox, pen=_FractionPenalty, track_ranks=False):
    """Shared proximal-gradient loop.

    ``rule(Bx)`` returns ``(lam, a, t, ranks)`` for the current iteration;
    ``prox(Bx, lam * mu, a, t)`` produces the next iterate.

    The objective after each step is tracked as ``before + delta`` where
    ``delta`` is formed from ``A d`` (``d`` the step) and a cancellation-free
    penalty difference. Recomputing ``C`` from scratch carries rounding noise
    of several ulps of ``C`` itself, which hides the descent property once
    ``C`` is large.
    """
    check_step_size(p, mu)
    stop = stop or StoppingRule()
    A, b = p.matrix, p.observation
    x = np.zeros(p.n) if x0 is None else np.array(x0, dtype=float).reshape(-1)
    if x.shape[0] != p.n:
        raise DimensionMismatch(f"x0 has length {x.shape[0]}, expected {p.n}")
    if not np.all(np.isfinite(x)):
        raise NonFiniteInput("x0 must be finite")
    r = b - A @ x
    run = SolverRun(final_iterate=x)
    prev = None  # (lam, a, objective at x) carried over while parameters stay fixed

    for k in range(stop.max_iters):
        Bx = x + mu * (A.T @ r)
        lam, a, t, ranks = rule(Bx)
        if prev is not None and prev[0] == lam and prev[1] == a:
            before = prev[2]
        else:
            before = float(r @ r) + lam * pen.value(x, a)
        x_new = prox(Bx, lam * mu, a, t)
        if not np.all(np.isfinite(x_new)):
            run.final_iterate = x
            raise NonFiniteIterate(f"non-finite iterate at iteration {k}", run)
        d = x_new - x
        Ad = A @ d
        delta = float(Ad @ Ad) - 2 * float(r @ Ad)
        if lam:
            delta += lam * pen.diff(x_new, x, a)
        after = before + delta
        step = float(np.linalg.norm(d))
        rel = step / max(float(np.linalg.norm(x)), 1.0)

        run.objective_trace.append(after)
        run.objective_before_trace.append(before)
        run.step_trace.append(step)
        run.param_trace.append((float(lam), float(a)))
        run.support_trace.append(int(np.count_nonzero(x_new)))
        if track_ranks:
            run.rank_trace.append(ranks)
        run.iterations = k + 1
        x, r, prev = x_new, r - Ad, (lam, a, after)
        if rel <= stop.rel_change_tol:
            run.stop_reason = StopReason.CONVERGED
            break

    run.final_iterate = x
    return run


def _mu_or_default(p, mu):
    return default_mu(p) if mu is None else float(mu)


def run_ifpta_s1(p: ProblemInstance, lam, a, mu=None, stop=None, x0=None) -> SolverRun:
    """Fixed-parameter iterative FP thresholding.

    ``lam`` is expected in ``(||b||^2, lambda_bar)``; values outside only
    trigger a warning.
    """
    mu = _mu_or_default(p, mu)
    if not (lam > 0 and a > 0):
        raise ValueError(f"lam and a must be positive, got lam={lam}, a={a}")
    try:
        hi = lambda_bar(p, a)
        lo = float(p.observation @ p.observation)
        if not lo < lam < hi:
            log.warning("ifpta-s1: lam=%g outside the recommended range (%g, %g)", lam, lo, hi)
    except DegenerateObservation:
        log.warning("ifpta-s1: observation is zero, lam range check skipped")
    t = threshold(lam * mu, a).t_value

    def rule(Bx):
        return lam, a, t, None

    return _iterate(p, x0, mu, stop, rule)


def run_ifpta_s2(p: ProblemInstance, cfg: AdaptiveConfigIFPTA, mu=None, stop=None, x0=None) -> SolverRun:
    """Iterative FP thresholding with ``lam`` adapted every iteration.

    When ``lam_k`` is zero (the (r+1)-th magnitude vanished) the step is a
    plain gradient step.
    """
    mu = _mu_or_default(p, mu)
    r = cfg.sparsity_r
    if not 1 <= r <= p.n - 1:
        raise SparsityOutOfRange(f"sparsity r={r} must satisfy 1 <= r <= n-1={p.n - 1}")
    a, eps = cfg.a, cfg.epsilon

    def rule(Bx):
        v_r, v_r1 = _rank_pair(Bx, r)
        lam, branch = _lambda_ifpta(v_r, v_r1, a, eps, mu)
        lm = lam * mu
        if lam == 0:
            log.debug("ifpta-s2: lam_k = 0, identity prox")
            t = 0.0
        elif branch is Branch.BRANCH1:
            t = lm * a / 2
        else:
            t = math.sqrt(lm) - 1 / (2 * a)
        return lam, a, t, (v_r, v_r1)

    return _iterate(p, x0, mu, stop, rule, track_ranks=True)


def run_cifpta_s1(p: ProblemInstance, lam, a, mu=None, stop=None, x0=None) -> SolverRun:
    """Fixed-parameter convex iterative FP thresholding; needs ``a <= 1/sqrt(lam mu)``."""
    mu = _mu_or_default(p, mu)
    check_step_size(p, mu)
    if not (lam > 0 and a > 0):
        raise ValueError(f"lam and a must be positive, got lam={lam}, a={a}")
    if a * math.sqrt(lam * mu) > 1 + _CONVEX_SLACK:
        raise ConvexityViolated(
            f"a={a:g} exceeds the convexity bound 1/sqrt(lam*mu)={1 / math.sqrt(lam * mu):g}"
        )
    t = lam * mu * a / 2

    def rule(Bx):
        return lam, a, t, None

    return _iterate(p, x0, mu, stop, rule)


def run_cifpta_s2(
    p: ProblemInstance,
    cfg: AdaptiveConfigCIFPTA,
    mu=None,
    stop=None,
    x0=None,
    select: Callable | None = None,
) -> SolverRun:
    """Convex iterative FP thresholding with ``(lam, a)`` adapted every iteration.

    ``select(Bx, cfg, mu, rng) -> (lam, a)`` replaces the adaptive rule; it
    exists so fixed parameters can be forced through this code path.
    """
    mu = _mu_or_default(p, mu)
    r = cfg.sparsity_r
    if not 1 <= r <= p.n - 1:
        raise SparsityOutOfRange(f"sparsity r={r} must satisfy 1 <= r <= n-1={p.n - 1}")
    rng = np.random.Generator(np.random.Philox(cfg.rng_seed))

    def rule(Bx):
        v_r, v_r1 = _rank_pair(Bx, r)
        if select is None:
            lam, a = _params_cifpta(v_r, v_r1, cfg, mu, rng)
        else:
            lam, a = select(Bx, cfg, mu, rng)
        # equals tau * sqrt(lam mu) / 2 when a = tau / sqrt(lam mu); zero when lam = 0
        t = lam * mu * a / 2
        return lam, a, t, (v_r, v_r1)

    return _iterate(p, x0, mu, stop, rule, track_ranks=True)


def run_ista_soft(p: ProblemInstance, lam, mu=None, stop=None, x0=None) -> SolverRun:
    """Soft-thresholding ISTA for ``||Ax - b||^2 + lam ||x||_1``.

    ``param_trace`` holds ``(lam, 0.0)``; there is no shape parameter.
    """
    mu = _mu_or_default(p, mu)
    if not lam >= 0:
        raise ValueError(f"lam must be nonnegative, got {lam}")
    t = lam * mu / 2

    def rule(Bx):
        return lam, 0.0, t, None

    return _iterate(p, x0, mu, stop, rule, prox=_soft, pen=_L1Penalty)


def fixed_point_residual(p: ProblemInstance, x, lam, a, mu, t=None) -> float:
    """``||x - prox(B_mu(x))||_inf`` with threshold ``t`` (default: two-branch rule)."""
    lm = lam * mu
    if t is None:
        t = threshold(lm, a).t_value
    x = np.asarray(x, dtype=float)
    return float(np.max(np.abs(x - threshold_prox(gradient_step_B(p, x, mu), lm, a, t))))
