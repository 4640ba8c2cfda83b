"""Closed-form thresholding operator of the fraction penalty.

For ``f(beta) = (beta - gamma)^2 + lam * rho_a(beta)`` the global minimizer is
zero below a threshold ``t`` and otherwise a root of a depressed cubic,
written here in trigonometric form (:func:`g`).
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .errors import ArccosDomainViolation, BelowThreshold, ConvexityViolated
from .penalty import ScalarObjectiveSpec, scalar_f

__all__ = [
    "Regime",
    "ThresholdRegime",
    "threshold",
    "phi",
    "g",
    "h",
    "convex_h",
    "threshold_prox",
    "apply_H",
    "prox_oracle_1d",
    "emit_f_curve",
]

# Clamp tolerance for the arccos argument; beyond this the caller is below threshold.
_ARCCOS_SLACK = 1e-9
# Relative slack on the convexity bound a <= 1/sqrt(lam).
_CONVEX_SLACK = 1e-12


class Regime(str, enum.Enum):
    SMALL_LAMBDA = "SmallLambda"
    LARGE_LAMBDA = "LargeLambda"


@dataclass(frozen=True)
class ThresholdRegime:
    kind: Regime
    t_value: float


def _check_pos(name, v):
    if not (np.isfinite(v) and v > 0):
        raise ValueError(f"{name} must be positive and finite, got {v}")


def threshold(lam, a) -> ThresholdRegime:
    """Threshold below which the prox returns zero.

    ``lam * a / 2`` when ``lam <= 1/a^2``, else ``sqrt(lam) - 1/(2a)``.
    """
    _check_pos("lam", lam)
    _check_pos("a", a)
    if lam * a * a <= 1.0:
        return ThresholdRegime(Regime.SMALL_LAMBDA, lam * a / 2)
    return ThresholdRegime(Regime.LARGE_LAMBDA, math.sqrt(lam) - 1 / (2 * a))


def _phi(absg, lam, a):
    arg = 27 * lam * a * a / (4 * (1 + a * absg) ** 3) - 1
    if np.any(arg > 1 + _ARCCOS_SLACK):
        raise ArccosDomainViolation(
            "arccos argument exceeds 1; |gamma| is below the threshold"
        )
    return np.arccos(np.minimum(arg, 1.0))


def phi(gamma, lam, a) -> float:
    """Angle of the trigonometric cubic root, in ``[0, pi]``."""
    return float(_phi(abs(gamma), lam, a))


def _g(gamma, lam, a):
    absg = np.abs(gamma)
    ph = _phi(absg, lam, a)
    mag = ((1 + a * absg) / 3 * (1 + 2 * np.cos(ph / 3 - np.pi / 3)) - 1) / a
    return np.sign(gamma) * mag


def g(gamma, lam, a) -> float:
    """Nonzero stationary branch of the prox; requires ``|gamma| > t``."""
    t = threshold(lam, a).t_value
    if not abs(gamma) > t:
        raise BelowThreshold(f"|gamma|={abs(gamma):g} is not above the threshold {t:g}")
    return float(_g(gamma, lam, a))


def h(gamma, lam, a) -> float:
    """Global minimizer of ``(beta - gamma)^2 + lam * rho_a(beta)``.

    Ties at ``|gamma| == t`` go to zero.
    """
    t = threshold(lam, a).t_value
    return float(_g(gamma, lam, a)) if abs(gamma) > t else 0.0


def convex_h(gamma, lam, a) -> float:
    """Prox restricted to the strictly convex regime ``a <= 1/sqrt(lam)``."""
    _check_pos("lam", lam)
    _check_pos("a", a)
    if a * math.sqrt(lam) > 1 + _CONVEX_SLACK:
        raise ConvexityViolated(f"a={a:g} exceeds 1/sqrt(lam)={1 / math.sqrt(lam):g}")
    t = lam * a / 2
    return float(_g(gamma, lam, a)) if abs(gamma) > t else 0.0


def threshold_prox(v, lam, a, t):
    """Apply the prox componentwise with an explicit threshold ``t``.

    ``lam`` is the effective weight (already multiplied by the step size).
    With ``lam == 0`` the prox is the identity.
    """
    v = np.asarray(v, dtype=float)
    if lam == 0:
        return v.copy()
    out = np.zeros_like(v)
    mask = np.abs(v) > t
    if np.any(mask):
        out[mask] = _g(v[mask], lam, a)
    return out


def apply_H(v, lam, mu, a):
    """Vector thresholding operator with ``lam`` replaced by ``lam * mu``."""
    _check_pos("mu", mu)
    lm = lam * mu
    return threshold_prox(v, lm, a, threshold(lm, a).t_value)


_INVPHI = (math.sqrt(5) - 1) / 2


def _golden(f, lo, hi, tol):
    c = hi - _INVPHI * (hi - lo)
    d = lo + _INVPHI * (hi - lo)
    fc, fd = f(c), f(d)
    while hi - lo > tol:
        if fc <= fd:
            hi, d, fd = d, c, fc
            c = hi - _INVPHI * (hi - lo)
            fc = f(c)
        else:
            lo, c, fc = c, d, fd
            d = lo + _INVPHI * (hi - lo)
            fd = f(d)
    return (lo + hi) / 2


def prox_oracle_1d(spec: ScalarObjectiveSpec, grid_points=100_001, tol=1e-10) -> float:
    """Brute-force minimizer of ``scalar_f``, independent of the closed form.

    Dense grid on ``[-(|gamma|+1), |gamma|+1]``, golden-section refinement
    around the best grid point, then an explicit comparison with zero.
    """
    R = abs(spec.gamma) + 1
    grid = np.linspace(-R, R, grid_points)
    vals = scalar_f(spec, grid)
    i = int(np.argmin(vals))
    lo = grid[max(i - 1, 0)]
    hi = grid[min(i + 1, grid_points - 1)]
    gam, lam, a = spec.gamma, spec.lam, spec.a

    def f(b):
        ab = a * abs(b)
        return (b - gam) ** 2 + lam * ab / (ab + 1)

    best = _golden(f, lo, hi, tol)
    return best if f(best) < f(0.0) else 0.0


def emit_f_curve(spec: ScalarObjectiveSpec, lo, hi, points):
    """Sample ``scalar_f`` at ``points`` uniformly spaced ``beta`` in ``[lo, hi]``.

    Returns an array of shape ``(points, 2)`` with columns ``beta, f``.
    """
    if not lo < hi:
        raise ValueError(f"empty range [{lo}, {hi}]")
    if points < 2:
        raise ValueError(f"points must be >= 2, got {points}")
    beta = np.linspace(lo, hi, int(points))
    return np.column_stack([beta, scalar_f(spec, beta)])
