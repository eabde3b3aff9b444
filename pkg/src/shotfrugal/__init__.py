"""Error-controlled, shot-frugal optimization for variational quantum circuits."""

from .benchmarks import (
    BenchmarkProblem, Graph, brute_force_maxcut, make_cosine_problem, make_maxcut_problem,
)
from .circuit import (
    CNOT, Circuit, DiagonalTerm, H, Observable, PauliRotation, apply_circuit, exact_expectation,
    hessian_norm_bound, pauli_term, sample_term, shift_gradient,
)
from .estimators import (
    Estimate, ErrorTarget, RecursiveState, ShiftAllocation, ShotAllocation, confidence_interval,
    estimate_sm_df, estimate_sm_f, recursive_update, shots_for_recursive_df, shots_for_recursive_f,
    shots_for_sm_df, shots_for_sm_f,
)
from .optimizers import GDConfig, SAConfig, TraceRow, run_gd, run_sa, sa_acceptance, sa_mse_target

__version__ = "0.1.0"
