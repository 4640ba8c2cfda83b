"""The fraction penalty and its thresholding operator, by example.

Run with ``python3 demos/thresholding_operator.py``.
"""
import numpy as np

from fracprox import ScalarObjectiveSpec, emit_f_curve, h, prox_oracle_1d, rho, threshold

# %% The penalty interpolates between l1 (small a) and a 0/1 indicator (large a)
t = np.array([0.0, 0.01, 0.1, 1.0, 10.0])
for a in (0.1, 1.0, 10.0, 1000.0):
    print(f"a={a:>7g}  rho(t) =", np.round(rho(t, a), 4))

# %% Below the threshold the prox returns exactly zero
for lam, a in [(0.49, 1.1), (1.0, 1.0), (4.0, 1.0)]:
    reg = threshold(lam, a)
    print(f"lam={lam:<5g} a={a:<4g} {reg.kind.value:>12}  t={reg.t_value:.4f}")

gammas = np.linspace(-3, 3, 13)
print("\ngamma   h(gamma; lam=1, a=1)   brute force")
for g_ in gammas:
    brute = prox_oracle_1d(ScalarObjectiveSpec(g_, 1.0, 1.0), grid_points=20_001)
    print(f"{g_:5.1f}   {h(g_, 1.0, 1.0):12.6f}        {brute:12.6f}")

# %% Convex versus nonconvex scalar objectives
def is_midpoint_convex(curve):
    f = curve[:, 1]
    return bool(np.all(f[:-2] + f[2:] - 2 * f[1:-1] >= -1e-12))


for a in (1.1, 50.0):
    curve = emit_f_curve(ScalarObjectiveSpec(0.0, 0.49, a), -2.0, 2.0, 401)
    print(f"lam=0.49 a={a:<5g} convex on [-2, 2]: {is_midpoint_convex(curve)}")
# with a <= 1/sqrt(lam) the scalar problem is strictly convex
print("1/sqrt(0.49) =", 1 / np.sqrt(0.49))
