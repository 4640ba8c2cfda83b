"""Success rate against sparsity: the recovery phase transition.

The default is a quick 32 x 128 run. Pass ``--full`` for 128 x 512 with 30
trials per level, which takes a few minutes.
"""
import sys

import numpy as np

from fracprox import sweep_success_rate

full = "--full" in sys.argv
if full:
    m, n, grid, trials = 128, 512, list(range(10, 71, 5)), 30
else:
    m, n, grid, trials = 32, 128, list(range(2, 21, 2)), 10

rep = sweep_success_rate(m, n, grid, 1.0, ["cifpta-s2", "ifpta-s2", "ista"], trials, base_seed=1)

# %%
print(f"{m}x{n}, {trials} trials per level, success = RE <= 1e-4\n")
print(f"{'r':>10} " + " ".join(f"{r:>5d}" for r in rep.grid))
for name, rates in rep.per_solver.items():
    bar = " ".join(f"{v:5.2f}" for v in rates)
    print(f"{name:>10} {bar}")

# %% Where does each curve drop below one half?
for name, rates in rep.per_solver.items():
    below = [r for r, v in zip(rep.grid, rates) if v < 0.5]
    print(f"{name}: first r with success < 0.5 = {below[0] if below else 'none'}")
