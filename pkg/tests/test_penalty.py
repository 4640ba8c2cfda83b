from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fracprox.bench import make_instance
from fracprox.errors import DimensionMismatch, NonFiniteInput, StepSizeOutOfRange
from fracprox.model import default_mu
from fracprox.penalty import (
    ScalarObjectiveSpec,
    objective_C,
    penalty_P,
    rho,
    scalar_f,
    scalar_f_prime,
    surrogate_C,
)
from fracprox.solvers import gradient_step_B

finite = st.floats(-1e6, 1e6, allow_nan=False)
pos = st.floats(1e-6, 1e3)


@pytest.mark.parametrize("t, a, expected", [(0, 3, 0.0), (1, 1, 0.5), (-2, 0.5, 0.5)])
def test_rho_values(t, a, expected):
    assert rho(t, a) == pytest.approx(expected, abs=1e-15)


def test_rho_rejects_nonfinite():
    with pytest.raises(NonFiniteInput):
        rho(np.inf, 1.0)


@given(finite, pos)
def test_rho_even_and_bounded(t, a):
    assert rho(t, a) == rho(-t, a)
    assert 0 <= rho(t, a) < 1 or (abs(t) * a > 1e15 and rho(t, a) <= 1)


@given(finite, finite, pos, pos)
def test_rho_monotone(t1, t2, a1, a2):
    lo, hi = sorted([abs(t1), abs(t2)])
    assert rho(lo, a1) <= rho(hi, a1)
    if lo != 0:
        alo, ahi = sorted([a1, a2])
        assert rho(lo, alo) <= rho(lo, ahi)


def test_penalty_values():
    assert penalty_P(np.zeros(5), 2.0) == 0.0
    assert penalty_P([1, -1], 1.0) == pytest.approx(1.0)
    assert abs(penalty_P([5, 0, -3], 1e6) - 2) <= 1e-5


def _exact_objective(p, x, lam, a):
    A = [[Fraction(v) for v in row] for row in p.matrix]
    b = [Fraction(v) for v in p.observation]
    xs = [Fraction(v) for v in x]
    res = sum((sum(Aij * xj for Aij, xj in zip(row, xs)) - bi) ** 2 for row, bi in zip(A, b))
    fa, fl = Fraction(a), Fraction(lam)
    pen = sum(fa * abs(v) / (fa * abs(v) + 1) for v in xs)
    return float(res + fl * pen)


def test_objective_matches_exact_oracle(small_problem, rng):
    p, _ = small_problem
    for _ in range(5):
        x = rng.standard_normal(p.n)
        exact = _exact_objective(p, x, 0.3, 2.0)
        assert objective_C(p, x, 0.3, 2.0) == pytest.approx(exact, rel=1e-12, abs=1e-12)


def test_objective_special_points(small_problem):
    p, xbar = small_problem
    b = p.observation
    assert objective_C(p, np.zeros(p.n), 1.0, 1.0) == pytest.approx(float(b @ b))
    # A xbar = b, so only the penalty remains
    assert objective_C(p, xbar.values, 1.0, 3.0) == pytest.approx(penalty_P(xbar.values, 3.0), abs=1e-12)


def test_objective_dimension_mismatch(small_problem):
    p, _ = small_problem
    with pytest.raises(DimensionMismatch):
        objective_C(p, np.zeros(p.n + 1), 1.0, 1.0)


def test_surrogate_at_diagonal(small_problem, rng):
    p, _ = small_problem
    mu = default_mu(p)
    x = rng.standard_normal(p.n)
    assert surrogate_C(p, x, x, 0.5, mu, 2.0) == pytest.approx(mu * objective_C(p, x, 0.5, 2.0), rel=1e-14)


def test_surrogate_step_size_guard(small_problem):
    p, _ = small_problem
    x = np.zeros(p.n)
    with pytest.raises(StepSizeOutOfRange):
        surrogate_C(p, x, x, 1.0, 1.01 / p.spectral_norm_sq, 1.0)


def test_surrogate_majorizes(rng):
    p, _ = make_instance(6, 12, 3, 1.0, 11)
    worst = np.inf
    for _ in range(10_000):
        x = rng.standard_normal(p.n) * 3
        z = rng.standard_normal(p.n) * 3
        mu = rng.uniform(1e-6, 1.0) / p.spectral_norm_sq
        lam, a = rng.uniform(0.01, 5), rng.uniform(0.1, 10)
        gap = surrogate_C(p, x, z, lam, mu, a) - mu * objective_C(p, x, lam, a)
        worst = min(worst, gap)
    assert worst >= -1e-12


def test_surrogate_separable_form(small_problem, rng):
    p, _ = small_problem
    mu = default_mu(p)
    lam, a = 0.7, 1.5
    b = p.observation
    for _ in range(20):
        x, z = rng.standard_normal(p.n), rng.standard_normal(p.n)
        Bz = gradient_step_B(p, z, mu)
        Az = p.matrix @ z
        separable = sum((xi - bi) ** 2 + lam * mu * rho(xi, a) for xi, bi in zip(x, Bz))
        const = mu * (b @ b) + z @ z - mu * (Az @ Az) - Bz @ Bz
        assert surrogate_C(p, x, z, lam, mu, a) == pytest.approx(separable + const, abs=1e-10)


def test_scalar_f_values():
    assert scalar_f(ScalarObjectiveSpec(0.0, 1.0, 1.0), 0.0) == 0.0
    spec = ScalarObjectiveSpec(0.0, 0.49, 1.1)
    assert scalar_f(spec, 1.0) == pytest.approx(1 + 0.49 * 1.1 / 2.1, abs=1e-12)
    assert scalar_f(spec, 1.0) == pytest.approx(1.25667, abs=1e-5)


def test_scalar_f_local_min_near_prox_output():
    spec = ScalarObjectiveSpec(2.0, 1.0, 1.0)
    f0 = scalar_f(spec, 1.9422)
    assert f0 <= scalar_f(spec, 1.9432) and f0 <= scalar_f(spec, 1.9412)


def test_spec_validation():
    with pytest.raises(ValueError):
        ScalarObjectiveSpec(0.0, 0.0, 1.0)
    with pytest.raises(ValueError):
        ScalarObjectiveSpec(0.0, 1.0, -1.0)
    with pytest.raises(NonFiniteInput):
        ScalarObjectiveSpec(np.nan, 1.0, 1.0)


def _fd2(spec, beta, h=1e-4):
    return (scalar_f(spec, beta + h) - 2 * scalar_f(spec, beta) + scalar_f(spec, beta - h)) / h**2


def test_second_derivative_sign(rng):
    for lam in rng.uniform(0.01, 5, size=20):
        a = rng.uniform(0.05, 1.0) / np.sqrt(lam)
        spec = ScalarObjectiveSpec(rng.uniform(-3, 3), lam, a)
        betas = rng.uniform(1e-3, 5, size=200)
        assert min(_fd2(spec, b) for b in betas) >= -1e-6
    spec = ScalarObjectiveSpec(0.0, 0.49, 50.0)
    betas = np.linspace(1e-3, 1.0, 200)
    assert min(_fd2(spec, b) for b in betas) < 0


@settings(max_examples=200)
@given(
    st.floats(-10, 10),
    st.floats(0.01, 5),
    st.floats(0.05, 10),
    st.floats(0.01, 10).flatmap(lambda v: st.sampled_from([v, -v])),
)
def test_first_derivative_matches_finite_difference(gamma, lam, a, beta):
    spec = ScalarObjectiveSpec(gamma, lam, a)
    h = 1e-6
    fd = (scalar_f(spec, beta + h) - scalar_f(spec, beta - h)) / (2 * h)
    assert fd == pytest.approx(scalar_f_prime(spec, beta), abs=1e-6)
