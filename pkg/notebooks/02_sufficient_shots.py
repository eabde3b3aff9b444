# %% [markdown]
# # How many shots does a target MSE need?
#
# Shots per term scale with the term norm. The realized bound never exceeds
# the target, and the total stays within one shot per term of the continuous
# optimum `(sum ||D||)^2 / E`.

# %%
import math

import numpy as np

from shotfrugal import confidence_interval, estimate_sm_f, make_cosine_problem, shots_for_sm_df, shots_for_sm_f
from shotfrugal.estimators import measure_value

norms = np.array([1.0, 0.5, 0.25])
for e in (0.1, 0.01, 0.001):
    a = shots_for_sm_f(e, norms)
    g = shots_for_sm_df(e, norms)
    print(f"E={e:<6} value shots {a.r} eps={a.epsilon:.5f}   shift shots {g.r_plus}x2 eps={g.epsilon:.5f}"
          f"   optimum {norms.sum()**2 / e:.1f}")

# %% [markdown]
# A Monte Carlo check on the cosine problem at `theta = pi/3`.

# %%
rng = np.random.default_rng(0)
problem = make_cosine_problem()
alloc = shots_for_sm_f(0.01, problem.observable.term_norms)
ests = [estimate_sm_f(measure_value(problem.circuit, problem.observable, [math.pi / 3], alloc, rng), alloc)
        for _ in range(2000)]
err = np.array([e.value for e in ests]) - 0.5
radius, tail = confidence_interval(ests[0], 2.0)
print(f"empirical MSE {np.mean(err**2):.5f} vs bound {ests[0].mse_bound}")
print(f"CI radius {radius:.3f}: violated {np.mean(np.abs(err) > radius):.4f} vs Hoeffding tail {tail:.4f}")
