"""Recover one sparse signal with every solver and compare.

Run with ``python3 demos/recover_one_signal.py [r] [seed]``.
"""
import sys
import time

import numpy as np

from fracprox import SOLVER_NAMES, default_mu, gradient_step_B, lambda_bar, make_instance, relative_error, solve, threshold

r = int(sys.argv[1]) if len(sys.argv) > 1 else 20
seed = int(sys.argv[2]) if len(sys.argv) > 2 else 0

p, xbar = make_instance(128, 512, r, 1.0, seed)
mu = default_mu(p)
print(f"A: {p.m}x{p.n}, ||A||^2 = {p.spectral_norm_sq:.2f}, mu = {mu:.3e}, true support size {xbar.r}")

# %%
print(f"\n{'solver':<10} {'RE':>10} {'iters':>6} {'nnz':>5} {'stop':>10} {'time':>7}")
for name in SOLVER_NAMES:
    start = time.perf_counter()
    run = solve(name, p, r, mu, seed=seed)
    took = time.perf_counter() - start
    re = relative_error(run.final_iterate, xbar)
    nnz = np.count_nonzero(run.final_iterate)
    print(f"{name:<10} {re:10.2e} {run.iterations:6d} {nnz:5d} {run.stop_reason.value:>10} {took:6.2f}s")

# %% The adaptive convex scheme keeps a_k sqrt(lam_k mu) fixed at tau
run = solve("cifpta-s2", p, r, mu, seed=seed)
lam, a = np.array(run.param_trace).T
nonzero = lam > 0
prod = a[nonzero] * np.sqrt(lam[nonzero] * mu)
print(f"\ncifpta-s2: a*sqrt(lam*mu) in [{prod.min():.15f}, {prod.max():.15f}]")
print(f"lam shrinks from {lam[0]:.4g} to {lam[-1]:.4g} as the iterate settles")

# %% Why the fixed-lambda scheme returned zero: a lam inside (||b||^2, lambda_bar)
# puts the threshold above every entry of the first gradient step
lam0 = 0.5 * (float(p.observation @ p.observation) + lambda_bar(p, 2.0))
t0 = threshold(lam0 * mu, 2.0).t_value
B0 = gradient_step_B(p, np.zeros(p.n), mu)
print(f"lam = {lam0:.4g}, threshold = {t0:.3f}, max |B_mu(0)| = {np.abs(B0).max():.3f}")
