"""Sparse signal recovery with the fraction penalty ``rho_a(t) = a|t| / (a|t| + 1)``.

The core pieces are a closed-form thresholding operator (:mod:`fracprox.prox`),
iterative thresholding solvers with fixed or adaptive parameters
(:mod:`fracprox.solvers`) and a seeded benchmark harness (:mod:`fracprox.bench`).
"""
from .bench import (
    SOLVER_NAMES,
    SolverSpec,
    SparseSignal,
    SweepReport,
    gen_gaussian_matrix,
    gen_sparse_signal,
    make_instance,
    relative_error,
    run_trial,
    solve,
    sweep_success_rate,
)
from .errors import *  # noqa: F401,F403
from .model import (
    ProblemInstance,
    SolverRun,
    StoppingRule,
    StopReason,
    default_mu,
    load_instance,
    new_problem,
    save_instance,
    spectral_norm_sq,
)
from .penalty import ScalarObjectiveSpec, objective_C, penalty_P, rho, scalar_f, surrogate_C
from .prox import apply_H, convex_h, emit_f_curve, g, h, phi, prox_oracle_1d, threshold
from .solvers import (
    AdaptiveConfigCIFPTA,
    AdaptiveConfigIFPTA,
    adaptive_lambda_ifpta,
    adaptive_params_cifpta,
    gradient_step_B,
    lambda_bar,
    nonincreasing_rearrangement,
    run_cifpta_s1,
    run_cifpta_s2,
    run_ifpta_s1,
    run_ifpta_s2,
    run_ista_soft,
)

__version__ = "0.1.0"
