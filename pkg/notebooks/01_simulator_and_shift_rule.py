# %% [markdown]
# # Statevector simulation and the parameter-shift rule
#
# A one-qubit `R_x(theta)` measured in Z gives `f(theta) = cos(theta)`.
# Every parametrized gate is `exp(-i theta/2 P)`, so shifting a gate by
# `+-pi/2` recovers the exact derivative.

# %%
import math

import numpy as np

from shotfrugal import exact_expectation, make_cosine_problem, make_maxcut_problem, shift_gradient

cosine = make_cosine_problem()
grid = np.linspace(0, 2 * math.pi, 9)
for th in grid:
    f = exact_expectation(cosine.circuit, [th], cosine.observable)
    g = shift_gradient(cosine.circuit, [th], cosine.observable, 0)
    print(f"theta={th:5.2f}  f={f:+.4f}  cos={math.cos(th):+.4f}  df={g:+.4f}  -sin={-math.sin(th):+.4f}")

# %% [markdown]
# QAOA shares one angle across several gates. The shift rule is applied
# per gate and the contributions are summed.

# %%
qaoa = make_maxcut_problem()
print("gates per parameter:", qaoa.circuit.multiplicities())
theta = np.array([0.4, -0.7])
h = 1e-6
for k in range(2):
    e = np.eye(2)[k] * h
    fd = (exact_expectation(qaoa.circuit, theta + e, qaoa.observable)
          - exact_expectation(qaoa.circuit, theta - e, qaoa.observable)) / (2 * h)
    print(f"k={k}: shift {shift_gradient(qaoa.circuit, theta, qaoa.observable, k):+.8f}  finite diff {fd:+.8f}")
