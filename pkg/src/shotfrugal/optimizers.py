"""Optimizers that hand error targets to an estimator instead of shot counts.

``run_sa`` is simulated annealing whose per-step MSE target either stays
fixed or shrinks with temperature as ``eta**2 * T**2 / 2``. ``run_gd`` is plain
gradient descent over sample-mean, recursive or exact (noise-free) estimates.
Both return one ``TraceRow`` per iteration; ``exact_f`` comes from the
simulator and is never fed back into the optimizer.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .benchmarks import BenchmarkProblem
from .circuit import exact_expectation, exact_gradient
from .estimators import (
    DRIFT_POLICIES, Estimate, RecursiveState, estimate_sm_df, estimate_sm_f, measure_shifts,
    measure_value, recursive_update, shift_term_norms, shots_for_recursive_df,
    shots_for_recursive_f, shots_for_sm_df, shots_for_sm_f,
)

ERROR_POLICIES = ("error_aware", "fixed")
GD_ESTIMATORS = ("sample_mean", "recursive", "exact")


@dataclass(frozen=True)
class SAConfig:
    t0: float = 1.0
    cooling: float = 0.95
    proposal_sigma: float = 1.0
    eta: float = 0.5
    shot_budget: int = 7000
    error_policy: str = "error_aware"
    fixed_e: float | None = None
    estimator_kind: str = "sample_mean"
    refresh_incumbent: bool = False
    max_iters: int = 1_000_000

    def __post_init__(self):
        if not self.t0 > 0:
            raise ValueError("t0 must be positive")
        if not 0 < self.cooling < 1:
            raise ValueError("cooling factor must lie in (0, 1) so temperature decreases")
        if not self.proposal_sigma > 0 or not self.eta > 0:
            raise ValueError("proposal_sigma and eta must be positive")
        if self.shot_budget < 1:
            raise ValueError("shot_budget must be >= 1")
        if self.error_policy not in ERROR_POLICIES:
            raise ValueError(f"error_policy must be one of {ERROR_POLICIES}")
        if self.error_policy == "fixed" and not (self.fixed_e and self.fixed_e > 0):
            raise ValueError("fixed error policy needs a positive fixed_e")
        if self.estimator_kind != "sample_mean":
            # acceptance probabilities need unbiased estimates
            raise ValueError("simulated annealing only runs with the unbiased sample_mean estimator")

    def temperature(self, i: int) -> float:
        return self.t0 * self.cooling**i

    def mse_target(self, i: int) -> float:
        if self.error_policy == "fixed":
            return self.fixed_e
        return sa_mse_target(self.eta, self.temperature(i))


@dataclass(frozen=True)
class GDConfig:
    learning_rate: float = 0.5
    e_f: float = 0.01
    e_grad: float | tuple = 0.01
    max_iters: int = 50
    shot_budget: float = math.inf
    estimator_kind: str = "recursive"
    drift_policy: str = "full"

    def __post_init__(self):
        if not self.learning_rate > 0:
            raise ValueError("learning_rate must be positive")
        e_grad = np.atleast_1d(np.asarray(self.e_grad, dtype=float))
        if not self.e_f > 0 or np.any(~(e_grad > 0)):
            raise ValueError("error targets must be positive")
        if self.max_iters < 1 or not self.shot_budget > 0:
            raise ValueError("max_iters and shot_budget must be positive")
        if self.estimator_kind not in GD_ESTIMATORS:
            raise ValueError(f"estimator_kind must be one of {GD_ESTIMATORS}")
        if self.drift_policy not in DRIFT_POLICIES:
            raise ValueError(f"drift_policy must be one of {DRIFT_POLICIES}")

    def grad_targets(self, m: int) -> np.ndarray:
        e = np.atleast_1d(np.asarray(self.e_grad, dtype=float))
        if e.size == 1:
            return np.full(m, e[0])
        if e.size != m:
            raise ValueError(f"e_grad has {e.size} entries for {m} parameters")
        return e


@dataclass(frozen=True)
class TraceRow:
    iteration: int
    theta: tuple
    estimate: Estimate
    shots: int
    cumulative_shots: int
    exact_f: float
    mse_target: float
    accepted: bool | None = None
    temperature: float | None = None
    grad_estimates: tuple = ()


def sa_mse_target(eta: float, t_i: float) -> float:
    """MSE that keeps the expected log-ratio of true and estimated acceptance below ``eta``."""
    return eta**2 * t_i**2 / 2


def sa_acceptance(f_new_est: float, f_old_est: float, t_i: float, rng: np.random.Generator) -> bool:
    """Metropolis rule on estimated values."""
    if f_new_est < f_old_est:
        return True
    return bool(rng.random() < math.exp(-(f_new_est - f_old_est) / t_i))


def sample_mean_value(problem: BenchmarkProblem, theta, e_f: float, rng) -> Estimate:
    obs = problem.observable
    alloc = shots_for_sm_f(e_f, obs.term_norms)
    return estimate_sm_f(measure_value(problem.circuit, obs, theta, alloc, rng), alloc)


def sample_mean_partial(problem: BenchmarkProblem, theta, k: int, e: float, rng) -> Estimate:
    c, obs = problem.circuit, problem.observable
    alloc = shots_for_sm_df(e, shift_term_norms(c, obs, k))
    return estimate_sm_df(*measure_shifts(c, obs, theta, k, alloc, rng), alloc)


def run_sa(problem: BenchmarkProblem, config: SAConfig, rng: np.random.Generator, theta0) -> list[TraceRow]:
    """Simulated annealing on sample-mean estimates until the shot budget is spent.

    The incumbent keeps the estimate it was accepted with unless
    ``refresh_incumbent`` is set. The step that crosses the budget is
    completed before stopping.
    """
    theta = np.array(theta0, dtype=float)
    c, obs = problem.circuit, problem.observable

    target = config.mse_target(0)
    est = sample_mean_value(problem, theta, target, rng)
    used = est.shots_used
    rows = [TraceRow(0, tuple(theta), est, est.shots_used, used,
                     exact_expectation(c, theta, obs), target, True, config.temperature(0))]

    i = 0
    while used < config.shot_budget and i < config.max_iters:
        t_i = config.temperature(i)
        target = config.mse_target(i)
        shots = 0
        if config.refresh_incumbent:
            est = sample_mean_value(problem, theta, target, rng)
            shots += est.shots_used
        proposal = theta + config.proposal_sigma * rng.standard_normal(theta.shape)
        new = sample_mean_value(problem, proposal, target, rng)
        shots += new.shots_used
        accepted = sa_acceptance(new.value, est.value, t_i, rng)
        if accepted:
            theta, est = proposal, new
        used += shots
        i += 1
        rows.append(TraceRow(i, tuple(theta), est, shots, used,
                             exact_expectation(c, theta, obs), target, accepted, t_i))
    return rows


def run_gd(problem: BenchmarkProblem, config: GDConfig, rng: np.random.Generator, theta0) -> list[TraceRow]:
    """Gradient descent ``theta <- theta - lr * grad_estimate``.

    Each iteration estimates the gradient and the value at the current point
    to the configured targets, records them, then steps.
    """
    c, obs = problem.circuit, problem.observable
    m = problem.num_params
    theta = np.array(theta0, dtype=float)
    if theta.shape != (m,):
        raise ValueError(f"theta0 must have {m} entries")
    e_grad = config.grad_targets(m)
    hess = problem.hessian_bound
    state = RecursiveState.empty(theta)
    delta = np.zeros(m)
    used = 0
    rows = []

    for i in range(config.max_iters):
        if config.estimator_kind == "exact":
            f_est = Estimate(exact_expectation(c, theta, obs), 0.0)
            grads = [Estimate(g, 0.0) for g in exact_gradient(c, theta, obs)]
        elif config.estimator_kind == "sample_mean":
            f_est = sample_mean_value(problem, theta, config.e_f, rng)
            grads = [sample_mean_partial(problem, theta, k, e_grad[k], rng) for k in range(m)]
        else:
            f_est, grads, state = _recursive_step(problem, config, state, theta, delta, e_grad, hess, rng)

        shots = f_est.shots_used + sum(g.shots_used for g in grads)
        used += shots
        rows.append(TraceRow(i, tuple(theta), f_est, shots, used, exact_expectation(c, theta, obs),
                             config.e_f, grad_estimates=tuple(grads)))
        if used >= config.shot_budget:
            break
        delta = -config.learning_rate * np.array([g.value for g in grads])
        theta = theta + delta
    return rows


def _recursive_step(problem, config, state, theta, delta, e_grad, hess, rng):
    c, obs = problem.circuit, problem.observable
    norm = obs.norm_bound
    m = problem.num_params

    alloc_f, alpha, _ = shots_for_recursive_f(config.e_f, state, delta, norm, obs.term_norms, hess)
    fresh_f = None
    if alloc_f.total:
        fresh_f = estimate_sm_f(measure_value(c, obs, theta, alloc_f, rng), alloc_f)

    betas, fresh_g = [], []
    for k in range(m):
        alloc, beta, _ = shots_for_recursive_df(e_grad[k], state, delta, norm, shift_term_norms(c, obs, k),
                                                k, hess, config.drift_policy)
        betas.append(beta)
        fresh_g.append(estimate_sm_df(*measure_shifts(c, obs, theta, k, alloc, rng), alloc)
                       if alloc.total else None)

    state, f_est, grads = recursive_update(state, delta, fresh_f, fresh_g, alpha, betas, norm, hess,
                                           config.drift_policy)
    return f_est, grads, state
