# %% [markdown]
# # MaxCut on the square graph with depth-one QAOA
#
# Minimizing `sum <Z_u Z_v>` maximizes the cut `(|E| - f) / 2`. Four edges
# give four unit-norm measurement terms.

# %%
import numpy as np

from shotfrugal import GDConfig, brute_force_maxcut, make_maxcut_problem, run_gd
from shotfrugal.benchmarks import SQUARE

best, cuts = brute_force_maxcut(SQUARE)
problem = make_maxcut_problem(SQUARE, layers=1)
print(f"best cut {best} via {cuts}; ground energy {problem.known_optimum}")
print(f"Hessian bound with shared angles: {problem.hessian_bound}")

# %%
cfg = dict(learning_rate=0.05, e_f=0.05, e_grad=0.05, max_iters=30)
for kind in ("exact", "sample_mean", "recursive"):
    rows = run_gd(problem, GDConfig(estimator_kind=kind, **cfg), np.random.default_rng(2), [0.1, -0.2])
    last = rows[-1]
    print(f"{kind:12s} f={last.exact_f:+.3f} cut={problem.cut_value(last.exact_f):.3f} "
          f"shots={last.cumulative_shots}")
