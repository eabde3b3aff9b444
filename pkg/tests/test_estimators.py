import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from shotfrugal.estimators import (
    Estimate, ErrorTarget, RecursiveState, confidence_interval, estimate_sm_df, estimate_sm_f,
    gradient_drift_bound, measure_shifts, measure_value, recursive_update, shift_term_norms,
    shots_for_recursive_df, shots_for_recursive_f, shots_for_sm_df, shots_for_sm_f,
    sm_df_epsilon, sm_f_epsilon,
)
from shotfrugal.estimators import ShotAllocation, ShiftAllocation


@pytest.mark.parametrize("norms,e,r,eps", [
    ([1.0], 0.01, [100], 0.01),
    ([1.0, 1.0], 0.5, [4, 4], 0.5),
    ([1.0], 1.0, [1], 1.0),
])
def test_shots_for_sm_f_examples(norms, e, r, eps):
    a = shots_for_sm_f(e, norms)
    assert list(a.r) == r
    assert a.epsilon == pytest.approx(eps, rel=1e-12)
    assert a.epsilon <= e


@pytest.mark.parametrize("norms,e,r,eps", [
    ([1.0], 0.01, [50], 0.01),
    ([1.0], 0.5, [1], 0.5),
    ([1.0] * 4, 0.1, [20] * 4, 0.1),
])
def test_shots_for_sm_df_examples(norms, e, r, eps):
    a = shots_for_sm_df(e, norms)
    assert list(a.r_plus) == r and list(a.r_minus) == r
    assert a.epsilon == pytest.approx(eps, rel=1e-12)
    assert a.epsilon <= e


@pytest.mark.parametrize("bad", [0.0, -1.0, math.inf, math.nan])
def test_allocators_reject_bad_targets(bad):
    with pytest.raises(ValueError):
        shots_for_sm_f(bad, [1.0])
    with pytest.raises(ValueError):
        shots_for_sm_df(bad, [1.0])


def test_allocators_reject_bad_norms():
    with pytest.raises(ValueError):
        shots_for_sm_f(0.1, [1.0, 0.0])
    with pytest.raises(ValueError):
        shots_for_sm_df(0.1, [-1.0])


@settings(max_examples=300, deadline=None)
@given(st.lists(st.floats(0.1, 4.0), min_size=1, max_size=8), st.floats(1e-3, 1.0))
def test_allocation_sound_and_near_optimal(norms, e):
    norms = np.array(norms)
    a = shots_for_sm_f(e, norms)
    assert a.epsilon <= e
    assert a.epsilon == pytest.approx(sm_f_epsilon(norms, a.r))
    assert a.total <= norms.sum() ** 2 / e + len(norms)
    g = shots_for_sm_df(e, norms)
    assert g.epsilon <= e
    assert g.total <= norms.sum() ** 2 / e + 2 * len(norms)


def test_error_target_validation():
    t = ErrorTarget.uniform(0.1, 0.2, 3)
    assert t.e_grad == (0.2, 0.2, 0.2)
    with pytest.raises(ValueError):
        ErrorTarget(0.0)
    with pytest.raises(ValueError):
        ErrorTarget(0.1, (0.1, -1))


def test_estimate_sm_f_examples():
    a = ShotAllocation(np.array([4]), 0.25)
    assert estimate_sm_f([[1, 1, 1, 1]], a).value == 1.0
    a2 = ShotAllocation(np.array([2, 2]), 1.0)
    est = estimate_sm_f([[1, -1], [1, 1]], a2)
    assert est.value == 1.0 and est.bias_bound == 0 and est.shots_used == 4
    assert est.mse_bound == est.variance_bound == 1.0
    with pytest.raises(ValueError):
        estimate_sm_f([[1, 1, 1]], a)


def test_estimate_sm_df_examples():
    a = shots_for_sm_df(0.5, [1.0])
    assert estimate_sm_df([[1]], [[1]], a).value == 0.0
    assert estimate_sm_df([[1]], [[-1]], a).value == 1.0
    with pytest.raises(ValueError):
        estimate_sm_df([[1, 1]], [[1]], a)


def test_confidence_interval():
    r, tail = confidence_interval(Estimate(0.0, 0.01), 2)
    assert r == pytest.approx(0.2) and tail == pytest.approx(2 * math.exp(-2))
    assert tail == pytest.approx(0.2707, abs=1e-4)
    assert confidence_interval(Estimate(0.0, 0.0, 0.1), 3)[0] == pytest.approx(0.1)
    assert confidence_interval(Estimate(0.0, 1.0), 1e-9)[1] == pytest.approx(2.0)
    with pytest.raises(ValueError):
        confidence_interval(Estimate(0.0, 1.0), 0)


def test_sample_mean_mse_and_coverage(cosine, rng):
    theta = [np.pi / 3]
    alloc = shots_for_sm_f(0.01, cosine.observable.term_norms)
    ests = np.array([estimate_sm_f(measure_value(cosine.circuit, cosine.observable, theta, alloc, rng), alloc).value
                     for _ in range(2000)])
    err = ests - np.cos(np.pi / 3)
    assert np.mean(err**2) <= 0.01
    for kappa in (1, 2, 3):
        assert np.mean(np.abs(err) > kappa * math.sqrt(alloc.epsilon)) <= 2 * math.exp(-kappa**2 / 2)
    # unbiased within 5 standard errors
    assert abs(err.mean()) <= 5 * err.std(ddof=1) / math.sqrt(len(err))


@pytest.mark.parametrize("theta", np.linspace(-3, 3, 10))
def test_sample_mean_mse_grid(cosine, theta):
    rng = np.random.default_rng(int(abs(theta) * 1000))
    alloc = shots_for_sm_f(0.05, cosine.observable.term_norms)
    p = (1 + np.cos(theta)) / 2
    # sample-mean of r +-1 outcomes is 2*Binomial(r, p)/r - 1
    ests = 2 * rng.binomial(alloc.r[0], p, size=2000) / alloc.r[0] - 1
    direct = [estimate_sm_f(measure_value(cosine.circuit, cosine.observable, [theta], alloc, rng), alloc).value
              for _ in range(2000)]
    assert np.mean((np.array(direct) - np.cos(theta)) ** 2) <= alloc.epsilon
    assert abs(np.mean(direct) - np.mean(ests)) < 5 * math.sqrt(2 * alloc.epsilon / 2000)


def test_gradient_estimator_monte_carlo(cosine, maxcut, rng):
    a = shots_for_sm_df(0.02, shift_term_norms(cosine.circuit, cosine.observable, 0))
    vals = np.array([estimate_sm_df(*measure_shifts(cosine.circuit, cosine.observable, [0.0], 0, a, rng), a).value
                     for _ in range(1000)])
    assert abs(vals.mean()) < 5 * math.sqrt(a.epsilon / 1000)
    # both shift points are fair +-1 coins here, so the bound is attained exactly
    sq = vals**2
    assert sq.mean() <= a.epsilon + 5 * sq.std() / math.sqrt(len(sq))

    from shotfrugal.circuit import shift_gradient
    theta = np.array([0.3, -0.8])
    for k in range(2):
        norms = shift_term_norms(maxcut.circuit, maxcut.observable, k)
        assert len(norms) == 16
        a = shots_for_sm_df(0.5, norms)
        exact = shift_gradient(maxcut.circuit, theta, maxcut.observable, k)
        vals = np.array([estimate_sm_df(*measure_shifts(maxcut.circuit, maxcut.observable, theta, k, a, rng), a).value
                         for _ in range(300)])
        sq = (vals - exact) ** 2
        assert sq.mean() <= a.epsilon + 5 * sq.std() / math.sqrt(len(sq))
        assert abs(vals.mean() - exact) < 5 * vals.std() / math.sqrt(300)


# -- recursive estimator -------------------------------------------------------

def test_recursive_first_step_equals_fresh():
    s0 = RecursiveState.empty([0.0])
    fresh = Estimate(0.4, 0.01, 0.0, 100)
    g = Estimate(-0.2, 0.02, 0.0, 100)
    s1, f, grads = recursive_update(s0, [0.0], fresh, [g], 0.0, [0.0], obs_norm=1.0)
    assert f.value == 0.4 and f.bias_bound == 0 and f.variance_bound == 0.01
    assert grads[0].value == -0.2 and s1.b_grad == (0.0,)
    with pytest.raises(ValueError):
        recursive_update(s0, [0.0], fresh, [g], 0.5, [0.0], obs_norm=1.0)


def _state(**kw):
    base = dict(f_star=0.5, grad_star=(0.3,), b_f=0.0, var_f=0.004, b_grad=(0.0,), var_grad=(0.02,),
                theta_prev=(0.0,), initialized=True)
    base.update(kw)
    return RecursiveState(**base)


def test_recursive_fixed_point():
    s = _state(b_f=0.02)
    s1, f, _ = recursive_update(s, [0.0], None, None, 1.0, [1.0], obs_norm=1.0)
    assert f.value == s.f_star and f.bias_bound == s.b_f and f.variance_bound == s.var_f
    assert s1.grad_star == s.grad_star and f.shots_used == 0


def test_recursive_bias_growth():
    s = _state(var_grad=(0.0,), var_f=0.0)
    _, f, _ = recursive_update(s, [0.1], None, None, 1.0, [1.0], obs_norm=1.0)
    assert f.bias_bound == pytest.approx(0.005)
    assert f.value == pytest.approx(0.5 + 0.1 * 0.3)


def test_recursive_weights_checked():
    s = _state()
    with pytest.raises(ValueError):
        recursive_update(s, [0.0], Estimate(0, 0.1), None, 1.5, [1.0], obs_norm=1.0)
    with pytest.raises(ValueError):
        recursive_update(s, [0.0], None, None, 0.5, [1.0], obs_norm=1.0)
    with pytest.raises(ValueError):
        recursive_update(s, [0.0], None, [None], 1.0, [0.5], obs_norm=1.0)


def test_shots_for_recursive_f_branches():
    s0 = RecursiveState.empty([0.0])
    a, alpha, _ = shots_for_recursive_f(0.01, s0, [0.0], 1.0, [1.0])
    assert alpha == 0 and list(a.r) == list(shots_for_sm_f(0.01, [1.0]).r)

    # prior MSE 0.005 <= 0.01: skip measurement
    s = _state(var_f=0.005, var_grad=(0.0,))
    a, alpha, (B, A2) = shots_for_recursive_f(0.01, s, [0.0], 1.0, [1.0])
    assert a.total == 0 and alpha == 1.0 and A2 == 0.005

    # prior MSE 0.02: E' = 0.02, alpha = 0.5, combined = 0.01
    s = _state(var_f=0.02, var_grad=(0.0,))
    a, alpha, (B, A2) = shots_for_recursive_f(0.01, s, [0.0], 1.0, [1.0])
    assert alpha == pytest.approx(0.5)
    assert a.r[0] == 50 and a.epsilon == pytest.approx(0.02)
    p, e_prime = 0.02, 0.02
    assert p * e_prime / (p + e_prime) == pytest.approx(0.01)
    assert B**2 + A2 == pytest.approx(0.01)


def test_shots_for_recursive_df_branches():
    s0 = RecursiveState.empty([0.0])
    a, beta, _ = shots_for_recursive_df(0.01, s0, [0.0], 1.0, [1.0], 0)
    assert beta == 0 and list(a.r_plus) == [50]

    s = _state(var_grad=(0.005,))
    a, beta, _ = shots_for_recursive_df(0.01, s, [0.0], 1.0, [1.0], 0)
    assert a.total == 0 and beta == 1.0

    s = _state(var_grad=(0.02,))
    a, beta, (B, A2) = shots_for_recursive_df(0.01, s, [0.1], 1.0, [1.0], 0)
    # b = 0.1, p = 0.03, E' = 0.015, beta = 1/3
    assert beta == pytest.approx(1 / 3)
    assert a.epsilon <= 0.015 and list(a.r_plus) == list(shots_for_sm_df(0.015, [1.0]).r_plus)
    assert B**2 + A2 <= 0.01 + 1e-15


def test_drift_policies():
    d = [0.3, 0.4]
    H = 2 * 1.5  # m * ||O||
    assert gradient_drift_bound(d, H, 2, "full") == pytest.approx(2 * 0.5 * 1.5)
    assert gradient_drift_bound(d, H, 2, "sqrt-m") == pytest.approx(math.sqrt(2) * 0.5 * 1.5)
    assert gradient_drift_bound(d, H, 2, "split-m") == pytest.approx(0.5 * 1.5)
    with pytest.raises(ValueError):
        gradient_drift_bound(d, H, 2, "bogus")


@settings(max_examples=200, deadline=None)
@given(
    st.floats(0, 0.5), st.floats(0, 0.05), st.floats(0, 0.5), st.floats(0, 0.05),
    st.floats(-0.5, 0.5), st.floats(1e-3, 0.5), st.sampled_from(["full", "sqrt-m", "split-m"]),
)
def test_recursive_allocation_dominates_and_meets_target(bf, vf, bg, vg, step, e, policy):
    s = _state(b_f=bf, var_f=vf, b_grad=(bg,), var_grad=(vg,))
    a, alpha, (B, A2) = shots_for_recursive_f(e, s, [step], 1.0, [1.0])
    assert 0 <= alpha <= 1
    assert B**2 + A2 <= e * (1 + 1e-12)
    assert a.total <= shots_for_sm_f(e, [1.0]).total
    g, beta, (Bg, Ag) = shots_for_recursive_df(e, s, [step], 1.0, [1.0], 0, drift_policy=policy)
    assert 0 <= beta <= 1
    assert Bg**2 + Ag <= e * (1 + 1e-12)
    assert g.total <= shots_for_sm_df(e, [1.0]).total

    # the ledger produced by recursive_update reproduces the allocator's prediction
    fresh_f = Estimate(0.1, a.epsilon, 0.0, a.total) if alpha < 1 else None
    fresh_g = [Estimate(0.1, g.epsilon, 0.0, g.total) if beta < 1 else None]
    _, f, grads = recursive_update(s, [step], fresh_f, fresh_g, alpha, [beta], 1.0, drift_policy=policy)
    assert f.bias_bound == pytest.approx(B) and f.variance_bound == pytest.approx(A2)
    assert grads[0].bias_bound == pytest.approx(Bg) and grads[0].variance_bound == pytest.approx(Ag)
    assert f.mse_bound == f.bias_bound**2 + f.variance_bound
