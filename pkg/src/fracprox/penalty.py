"""Fraction penalty, regularized objective and its separable surrogate."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatch, NonFiniteInput
from .model import ProblemInstance, check_step_size

__all__ = [
    "ScalarObjectiveSpec",
    "rho",
    "penalty_P",
    "objective_C",
    "surrogate_C",
    "scalar_f",
    "scalar_f_prime",
]


def _positive(name, v):
    if not (np.isfinite(v) and v > 0):
        raise ValueError(f"{name} must be positive and finite, got {v}")


@dataclass(frozen=True)
class ScalarObjectiveSpec:
    """Parameters of ``f(beta) = (beta - gamma)^2 + lam * rho_a(beta)``."""

    gamma: float
    lam: float
    a: float

    def __post_init__(self):
        if not np.isfinite(self.gamma):
            raise NonFiniteInput(f"gamma must be finite, got {self.gamma}")
        _positive("lam", self.lam)
        _positive("a", self.a)


def rho(t, a):
    """Fraction function ``a|t| / (a|t| + 1)``; works elementwise on arrays."""
    _positive("a", a)
    t = np.asarray(t, dtype=float)
    if not np.all(np.isfinite(t)):
        raise NonFiniteInput("rho: argument must be finite")
    at = a * np.abs(t)
    out = at / (at + 1.0)
    return float(out) if out.ndim == 0 else out


def penalty_P(x, a) -> float:
    """Sum of ``rho(x_i, a)``; a smooth stand-in for the number of nonzeros."""
    x = np.asarray(x, dtype=float).reshape(-1)
    return float(np.sum(rho(x, a))) if x.size else 0.0


def _check_vec(p: ProblemInstance, x, name="x"):
    x = np.asarray(x, dtype=float).reshape(-1)
    if x.shape[0] != p.n:
        raise DimensionMismatch(f"{name} has length {x.shape[0]}, expected {p.n}")
    return x


def objective_C(p: ProblemInstance, x, lam, a) -> float:
    """``||A x - b||^2 + lam * P_a(x)``."""
    x = _check_vec(p, x)
    _positive("lam", lam)
    r = p.matrix @ x - p.observation
    return float(r @ r) + lam * penalty_P(x, a)


def surrogate_C(p: ProblemInstance, x, z, lam, mu, a) -> float:
    """``mu [C(x) - ||A x - A z||^2] + ||x - z||^2``.

    For ``mu <= 1/||A||^2`` this majorizes ``mu * C(x)`` and equals it at
    ``x = z``.
    """
    x = _check_vec(p, x)
    z = _check_vec(p, z, "z")
    check_step_size(p, mu)
    d = x - z
    Ad = p.matrix @ d
    return mu * (objective_C(p, x, lam, a) - float(Ad @ Ad)) + float(d @ d)


def scalar_f(spec: ScalarObjectiveSpec, beta):
    """``(beta - gamma)^2 + lam * rho_a(beta)``; vectorized over ``beta``."""
    beta = np.asarray(beta, dtype=float)
    if not np.all(np.isfinite(beta)):
        raise NonFiniteInput("scalar_f: beta must be finite")
    out = (beta - spec.gamma) ** 2 + spec.lam * rho(beta, spec.a)
    return float(out) if np.ndim(out) == 0 else out


def scalar_f_prime(spec: ScalarObjectiveSpec, beta):
    """Derivative of :func:`scalar_f` for ``beta != 0``."""
    beta = np.asarray(beta, dtype=float)
    a = spec.a
    out = 2 * (beta - spec.gamma) + spec.lam * a / (a * np.abs(beta) + 1) ** 2 * np.sign(beta)
    return float(out) if np.ndim(out) == 0 else out
