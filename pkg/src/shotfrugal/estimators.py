"""Shot allocation and estimation with worst-case MSE bounds.

Two estimators live here. The sample-mean estimator averages fresh shots per
observable term. The recursive estimator blends a first-order extrapolation
of the previous estimate with a fresh sample-mean estimate and tracks bias
(``B``) and variance (``A^2``) ledgers so its MSE stays below ``B^2 + A^2``.

All bounds come from term norms only; no sample statistics are used.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

from .circuit import (
    Circuit, Observable, apply_circuit, sample_from_probabilities, term_probabilities,
)

UNBOUNDED = math.inf
DRIFT_POLICIES = ("full", "sqrt-m", "split-m")

# Largest single-term shot count we are willing to allocate.
MAX_SHOTS_PER_TERM = 2**53


@dataclass(frozen=True)
class ErrorTarget:
    """MSE ceilings handed from an optimizer to an estimator."""

    e_f: float
    e_grad: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "e_grad", tuple(float(e) for e in self.e_grad))
        for e in (self.e_f, *self.e_grad):
            if not (e > 0) or math.isnan(e):
                raise ValueError(f"error targets must be positive, got {e}")

    @classmethod
    def uniform(cls, e_f: float, e_grad: float, m: int) -> "ErrorTarget":
        return cls(e_f, (e_grad,) * m)


@dataclass(frozen=True, eq=False)
class ShotAllocation:
    """Value shots per term and the MSE bound they realize."""

    r: np.ndarray
    epsilon: float

    @property
    def total(self) -> int:
        return int(np.sum(self.r))


@dataclass(frozen=True, eq=False)
class ShiftAllocation:
    """Shots at the ``+pi/2`` and ``-pi/2`` shift points for one parameter.

    Entries run over shift terms: one per (gate driven by the parameter,
    observable term) pair, gate-major.
    """

    r_plus: np.ndarray
    r_minus: np.ndarray
    epsilon: float

    @property
    def total(self) -> int:
        return int(np.sum(self.r_plus) + np.sum(self.r_minus))


@dataclass(frozen=True)
class Estimate:
    value: float
    variance_bound: float
    bias_bound: float = 0.0
    shots_used: int = 0

    def __post_init__(self):
        if self.variance_bound < 0 or self.bias_bound < 0:
            raise ValueError("bounds must be nonnegative")

    @property
    def mse_bound(self) -> float:
        return self.bias_bound**2 + self.variance_bound


def _check_norms(norms) -> np.ndarray:
    norms = np.asarray(norms, dtype=float).reshape(-1)
    if norms.size == 0 or np.any(~(norms > 0)) or not np.all(np.isfinite(norms)):
        raise ValueError("term norms must be positive and finite")
    return norms


def _check_target(e: float, name: str) -> float:
    e = float(e)
    if not e > 0 or not math.isfinite(e):
        raise ValueError(f"{name} must be positive and finite, got {e}")
    return e


def sm_f_epsilon(norms, r) -> float:
    """Value MSE bound ``sum_j ||D_j||^2 / r_j`` (infinite when a term has no shots)."""
    norms = np.asarray(norms, dtype=float)
    r = np.asarray(r)
    if np.any(r <= 0):
        return UNBOUNDED
    return float(np.sum(norms**2 / r))


def sm_df_epsilon(norms, r_plus, r_minus) -> float:
    norms = np.asarray(norms, dtype=float)
    rp, rm = np.asarray(r_plus), np.asarray(r_minus)
    if np.any(rp <= 0) or np.any(rm <= 0):
        return UNBOUNDED
    return float(np.sum(norms**2 / 4 * (1 / rp + 1 / rm)))


def _ceil_shots(norms: np.ndarray, nu: float) -> np.ndarray:
    x = norms * nu
    if np.any(x > MAX_SHOTS_PER_TERM):
        raise ValueError("error target too small: shot count overflows")
    return np.maximum(np.ceil(x), 1).astype(np.int64)


def shots_for_sm_f(e_f: float, term_norms) -> ShotAllocation:
    """Fewest value shots (up to rounding) with ``sum ||D_j||^2 / r_j <= e_f``.

    ``r_j = ceil(||D_j|| * nu)`` with ``nu = sum ||D_j|| / e_f``.
    """
    e_f = _check_target(e_f, "e_f")
    norms = _check_norms(term_norms)
    r = _ceil_shots(norms, norms.sum() / e_f)
    eps = sm_f_epsilon(norms, r)
    while eps > e_f:
        # floating-point residue only; bump the worst term
        r[np.argmax(norms**2 / r)] += 1
        eps = sm_f_epsilon(norms, r)
    return ShotAllocation(r, eps)


def shots_for_sm_df(e_dkf: float, term_norms) -> ShiftAllocation:
    """Fewest shift shots (up to rounding) with the gradient MSE bound ``<= e_dkf``."""
    e = _check_target(e_dkf, "e_dkf")
    norms = _check_norms(term_norms)
    r = _ceil_shots(norms, norms.sum() / (2 * e))
    rp, rm = r.copy(), r.copy()
    eps = sm_df_epsilon(norms, rp, rm)
    while eps > e:
        j = np.argmax(norms**2 / rp)
        rp[j] += 1
        rm[j] += 1
        eps = sm_df_epsilon(norms, rp, rm)
    return ShiftAllocation(rp, rm, eps)


def zero_allocation(num_terms: int) -> ShotAllocation:
    return ShotAllocation(np.zeros(num_terms, dtype=np.int64), UNBOUNDED)


def zero_shift_allocation(num_terms: int) -> ShiftAllocation:
    z = np.zeros(num_terms, dtype=np.int64)
    return ShiftAllocation(z, z.copy(), UNBOUNDED)


def _check_lengths(samples, r, what: str):
    if len(samples) != len(r):
        raise ValueError(f"{what}: got {len(samples)} sample lists for {len(r)} terms")
    for j, (s, rj) in enumerate(zip(samples, r)):
        if len(s) != rj:
            raise ValueError(f"{what}: term {j} has {len(s)} samples, allocation says {rj}")
        if rj == 0:
            raise ValueError(f"{what}: term {j} has no shots")


def estimate_sm_f(samples: Sequence, alloc: ShotAllocation) -> Estimate:
    """Sum of per-term sample means."""
    _check_lengths(samples, alloc.r, "estimate_sm_f")
    value = float(sum(np.mean(s) for s in samples))
    return Estimate(value, alloc.epsilon, 0.0, alloc.total)


def estimate_sm_df(samples_plus: Sequence, samples_minus: Sequence, alloc: ShiftAllocation) -> Estimate:
    """Half the difference of shifted sample means, summed over shift terms."""
    _check_lengths(samples_plus, alloc.r_plus, "estimate_sm_df (+)")
    _check_lengths(samples_minus, alloc.r_minus, "estimate_sm_df (-)")
    value = float(sum((np.mean(p) - np.mean(m)) / 2 for p, m in zip(samples_plus, samples_minus)))
    return Estimate(value, alloc.epsilon, 0.0, alloc.total)


def confidence_interval(est: Estimate, kappa: float) -> tuple[float, float]:
    """Radius ``kappa*sqrt(var) + bias`` and its tail probability ``2 exp(-kappa^2/2)``."""
    if not kappa > 0:
        raise ValueError("kappa must be positive")
    radius = kappa * math.sqrt(est.variance_bound) + est.bias_bound
    return radius, 2 * math.exp(-kappa**2 / 2)


# -- drawing samples from the simulator -------------------------------------

def shift_term_norms(circuit: Circuit, obs: Observable, k: int) -> np.ndarray:
    """Norms of the shift terms for parameter ``k`` (gate-major, term-minor)."""
    return np.tile(obs.term_norms, len(circuit.gates_for_param(k)))


def measure_value(circuit: Circuit, obs: Observable, theta, alloc: ShotAllocation,
                  rng: np.random.Generator) -> list[np.ndarray]:
    psi = apply_circuit(circuit, theta)
    return [sample_from_probabilities(term_probabilities(psi, t), t.diagonal, int(r), rng)
            for t, r in zip(obs.terms, alloc.r)]


def measure_shifts(circuit: Circuit, obs: Observable, theta, k: int, alloc: ShiftAllocation,
                   rng: np.random.Generator) -> tuple[list[np.ndarray], list[np.ndarray]]:
    ell = len(obs.terms)
    plus, minus = [], []
    for g, gi in enumerate(circuit.gates_for_param(k)):
        for out, sign, r in ((plus, 1, alloc.r_plus), (minus, -1, alloc.r_minus)):
            psi = apply_circuit(circuit, theta, shifted_gate=gi, shift=sign * np.pi / 2)
            for j, t in enumerate(obs.terms):
                out.append(sample_from_probabilities(term_probabilities(psi, t), t.diagonal,
                                                     int(r[g * ell + j]), rng))
    return plus, minus


# -- recursive estimator ------------------------------------------------------

@dataclass(frozen=True)
class RecursiveState:
    """Prior estimate and its bias/variance ledger.

    ``var_*`` hold variances (``A^2``) and ``b_*`` bias bounds (``B``).
    """

    f_star: float = 0.0
    grad_star: tuple = ()
    b_f: float = 0.0
    var_f: float = 0.0
    b_grad: tuple = ()
    var_grad: tuple = ()
    theta_prev: tuple = ()
    initialized: bool = False

    @classmethod
    def empty(cls, theta) -> "RecursiveState":
        m = len(theta)
        return cls(0.0, (0.0,) * m, 0.0, 0.0, (0.0,) * m, (0.0,) * m,
                   tuple(float(t) for t in theta), False)

    @property
    def m(self) -> int:
        return len(self.theta_prev)

    def f_estimate(self) -> Estimate:
        return Estimate(self.f_star, self.var_f, self.b_f)

    def grad_estimates(self) -> list[Estimate]:
        return [Estimate(g, v, b) for g, v, b in zip(self.grad_star, self.var_grad, self.b_grad)]


def _hessian(obs_norm: float, m: int, hessian_bound: float | None) -> float:
    return m * obs_norm if hessian_bound is None else hessian_bound


def value_drift_bound(delta_theta, hessian_bound: float) -> float:
    """Second-order remainder of the linear extrapolation: ``||dtheta||^2 * H / 2``."""
    d = np.asarray(delta_theta, dtype=float)
    return 0.5 * float(d @ d) * hessian_bound


def gradient_drift_bound(delta_theta, hessian_bound: float, m: int, policy: str = "full") -> float:
    """Bound on ``|d_k f(theta_i) - d_k f(theta_{i-1})|``.

    ``full`` uses ``||dtheta|| * H``, which always holds because a Hessian
    row is no longer than the Hessian norm. ``sqrt-m`` divides by
    ``sqrt(m)``; it holds when no parameter drives more than one gate, since
    each Hessian entry is then at most ``||O||``. ``split-m`` divides by ``m``
    and is not guaranteed.
    """
    if policy not in DRIFT_POLICIES:
        raise ValueError(f"unknown drift policy {policy!r}; choose from {DRIFT_POLICIES}")
    step = float(np.linalg.norm(np.asarray(delta_theta, dtype=float)))
    base = step * hessian_bound
    if policy == "sqrt-m":
        return base / math.sqrt(m)
    if policy == "split-m":
        return base / m
    return base


def _prior_value_bounds(state: RecursiveState, delta_theta, obs_norm, hessian_bound):
    d = np.asarray(delta_theta, dtype=float)
    H = _hessian(obs_norm, state.m, hessian_bound)
    b = state.b_f + float(np.abs(d) @ np.asarray(state.b_grad)) + value_drift_bound(d, H)
    a = state.var_f + float(d**2 @ np.asarray(state.var_grad))
    return b, a


def _prior_grad_bounds(state: RecursiveState, delta_theta, obs_norm, k, hessian_bound, policy):
    H = _hessian(obs_norm, state.m, hessian_bound)
    b = state.b_grad[k] + gradient_drift_bound(delta_theta, H, state.m, policy)
    return b, state.var_grad[k]


def _mix_weight(b: float, a: float, target: float):
    """Branch shared by the value and gradient allocators.

    Returns ``(weight, fresh_target)``; ``fresh_target`` is ``None`` when the
    prior alone meets the target.
    """
    p = b * b + a
    if p <= target:
        return 1.0, None
    fresh = p * target / (p - target)
    return target / p, fresh


def shots_for_recursive_f(e_f: float, state: RecursiveState, delta_theta, obs_norm: float,
                          term_norms, hessian_bound: float | None = None):
    """Value shots for the recursive estimator.

    Returns ``(allocation, alpha, (B_i, A2_i))``. With no prior this is the
    sample-mean allocation and ``alpha = 0``.
    """
    e_f = _check_target(e_f, "e_f")
    norms = _check_norms(term_norms)
    if not state.initialized:
        alloc = shots_for_sm_f(e_f, norms)
        return alloc, 0.0, (0.0, alloc.epsilon)
    b, a = _prior_value_bounds(state, delta_theta, obs_norm, hessian_bound)
    alpha, fresh = _mix_weight(b, a, e_f)
    if fresh is None:
        return zero_allocation(len(norms)), 1.0, (b, a)
    alloc = shots_for_sm_f(fresh, norms)
    return alloc, alpha, (alpha * b, alpha**2 * a + (1 - alpha) ** 2 * alloc.epsilon)


def shots_for_recursive_df(e_dkf: float, state: RecursiveState, delta_theta, obs_norm: float,
                           term_norms, k: int, hessian_bound: float | None = None,
                           drift_policy: str = "full"):
    """Shift shots for the recursive estimate of ``d_k f``; returns ``(allocation, beta, (B, A2))``."""
    e = _check_target(e_dkf, "e_dkf")
    norms = _check_norms(term_norms)
    if not state.initialized:
        alloc = shots_for_sm_df(e, norms)
        return alloc, 0.0, (0.0, alloc.epsilon)
    b, a = _prior_grad_bounds(state, delta_theta, obs_norm, k, hessian_bound, drift_policy)
    beta, fresh = _mix_weight(b, a, e)
    if fresh is None:
        return zero_shift_allocation(len(norms)), 1.0, (b, a)
    alloc = shots_for_sm_df(fresh, norms)
    return alloc, beta, (beta * b, beta**2 * a + (1 - beta) ** 2 * alloc.epsilon)


def _blend(weight, prior, fresh: Estimate | None, what: str):
    if not 0.0 <= weight <= 1.0:
        raise ValueError(f"{what} weight {weight} outside [0, 1]")
    if weight < 1.0 and fresh is None:
        raise ValueError(f"{what} needs a fresh estimate when its weight is below 1")
    if weight == 1.0:
        return prior, 0.0, 0
    return (weight * prior + (1 - weight) * fresh.value,
            (1 - weight) ** 2 * fresh.variance_bound, fresh.shots_used)


def recursive_update(state: RecursiveState, delta_theta, fresh_f: Estimate | None,
                     fresh_grad: Sequence[Estimate | None] | None, alpha: float, betas,
                     obs_norm: float, hessian_bound: float | None = None,
                     drift_policy: str = "full"):
    """Advance the recursive estimator by one point.

    ``delta_theta`` is the step taken from the previous point. Returns the new
    state, the value estimate and the per-parameter gradient estimates.
    """
    m = state.m
    betas = np.broadcast_to(np.asarray(betas, dtype=float), (m,))
    if fresh_grad is None:
        fresh_grad = [None] * m
    if len(fresh_grad) != m:
        raise ValueError("need one gradient estimate slot per parameter")
    d = np.asarray(delta_theta, dtype=float).reshape(-1)
    if d.shape != (m,):
        raise ValueError(f"delta_theta has length {d.size}, expected {m}")

    if not state.initialized:
        if alpha != 0 or np.any(betas != 0):
            raise ValueError("the first recursive step must use alpha = beta = 0")
        if fresh_f is None or any(g is None for g in fresh_grad):
            raise ValueError("the first recursive step needs fresh estimates")
        d = np.zeros(m)

    b_prior, a_prior = _prior_value_bounds(state, d, obs_norm, hessian_bound)
    extrapolated = state.f_star + float(d @ np.asarray(state.grad_star))
    value, fresh_var, value_shots = _blend(alpha, extrapolated, fresh_f, "alpha")
    b_f = alpha * b_prior
    var_f = alpha**2 * a_prior + fresh_var

    grads, b_grad, var_grad, grad_shots = [], [], [], []
    for k in range(m):
        bk, ak = _prior_grad_bounds(state, d, obs_norm, k, hessian_bound, drift_policy)
        gk, fresh_var, shots = _blend(betas[k], state.grad_star[k], fresh_grad[k], "beta")
        grads.append(gk)
        b_grad.append(betas[k] * bk)
        var_grad.append(betas[k] ** 2 * ak + fresh_var)
        grad_shots.append(shots)

    new = RecursiveState(
        f_star=value, grad_star=tuple(grads), b_f=b_f, var_f=var_f,
        b_grad=tuple(b_grad), var_grad=tuple(var_grad),
        theta_prev=tuple(np.asarray(state.theta_prev) + d), initialized=True,
    )
    f_est = Estimate(value, var_f, b_f, value_shots)
    grad_ests = [Estimate(*row) for row in zip(grads, var_grad, b_grad, grad_shots)]
    return new, f_est, grad_ests
