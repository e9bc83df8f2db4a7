import numpy as np
import pytest

import agflow as ag
from agflow.errors import ConfigurationError, ScheduleError, UnsupportedFamilyError
from agflow.smoothing import SmoothApproximation


def test_huber_values_at_reference_points():
    a = ag.huber_l1(np.array([1.0]))
    assert a.value(np.array([0.0]), 1.0) == 0.0
    assert a.value(np.array([2.0]), 1.0) == pytest.approx(1.5)
    assert a.base.value(np.array([2.0])) - a.value(np.array([2.0]), 1.0) == pytest.approx(
        a.beta_s * 1.0
    )
    assert a.grad_mu(np.array([0.5]), 1.0) == pytest.approx(-0.125)
    assert -a.beta_s <= a.grad_mu(np.array([0.5]), 1.0) <= 0.0


def test_huber_constants():
    a = ag.huber_l1(np.array([1.0, 3.0]))
    assert a.alpha_s == 3.0
    assert a.beta_s == 2.0


def test_huber_rejects_negative_weight():
    with pytest.raises(ConfigurationError):
        ag.huber_l1(np.array([1.0, -1.0]))


def test_certification_passes_for_huber():
    a = ag.huber_l1(np.array([1.0, 0.5]))
    rep = ag.certify_smooth_approx(a, num_samples=1000, seed=1)
    assert rep.passed


def test_certification_catches_understated_beta():
    good = ag.huber_l1(np.array([1.0]))
    bad = SmoothApproximation(
        value=good.value,
        grad_x=good.grad_x,
        grad_mu=good.grad_mu,
        alpha_s=good.alpha_s,
        beta_s=good.beta_s / 2.0,
        base=good.base,
        name="understated",
    )
    rep = ag.certify_smooth_approx(bad, num_samples=1000, seed=1)
    assert not rep.passed
    assert rep.max_sandwich_violation > 1e-3


def test_smooth_objective_as_own_approximation_passes():
    spec = ag.quadratic(np.eye(2), np.zeros(2))
    a = ag.with_exact_smooth_objective(spec.objective, beta_s=1.0)
    rep = ag.certify_smooth_approx(a, num_samples=500, seed=3, mu_max=0.5)
    assert rep.passed
    assert rep.max_band_violation <= 0.0


def test_sandwich_and_band_on_many_samples():
    approx, _ = ag.l1_denoise_approximation(np.array([2.0, 0.1]), 1.0)
    rep = ag.certify_smooth_approx(approx, num_samples=10_000, seed=11)
    assert rep.passed


def test_grad_x_matches_finite_differences():
    approx, _ = ag.l1_denoise_approximation(np.array([2.0, 0.1]), 1.0)
    rng = np.random.default_rng(2)
    step = 1e-6
    for _ in range(30):
        x = rng.uniform(-2, 2, 2)
        mu = rng.uniform(0.05, 1.0)
        # stay away from the |x| = mu seams within the FD stencil
        x = np.where(np.abs(np.abs(x) - mu) < 10 * step, x + 0.01, x)
        g = approx.grad_x(x, mu)
        for i in range(2):
            e = np.zeros(2)
            e[i] = step
            fd = (approx.value(x + e, mu) - approx.value(x - e, mu)) / (2 * step)
            assert fd == pytest.approx(g[i], rel=1e-6, abs=1e-8)


def test_rate_preserving_mu_hyperbolic_closed_form():
    mu = ag.rate_preserving_mu(ag.Hyperbolic(1.0), 0.1, "exponential")
    for t in (0.5, 1.0, 3.0, 7.0):
        expect = np.exp(-0.1 * t) * np.tanh(0.5 * t) / np.sinh(0.5 * t) ** 2
        assert mu.mu(t) == pytest.approx(expect, rel=1e-12)


def test_rate_preserving_mu_polynomial_closed_form():
    mu = ag.rate_preserving_mu(ag.PolynomialDamping(3.0), 1.0, "polynomial")
    for t in (1.0, 2.0, 5.0):
        assert mu.mu(t) == pytest.approx(t ** -3 / 2.0, rel=1e-12)


def test_budget_closed_form_and_tail():
    eps = 0.5
    mu = ag.rate_preserving_mu(ag.Hyperbolic(0.0), eps, "exponential")
    t0 = 1.0
    # int_t0^inf exp(-eps t) dt = exp(-eps t0)/eps
    tail = mu.budget(t0, 1e9)
    assert tail == pytest.approx(np.exp(-eps * t0) / eps, rel=1e-12)
    # budget converges: second half contributes little at long horizons
    assert mu.budget(10.0, 20.0) <= 0.05 * mu.budget(t0, 20.0)


def test_rate_preserving_mu_rejects_custom_family():
    fam = ag.with_modified_nu(ag.ConstantDamping(2.0, 1.0), shift=1.0)
    with pytest.raises(UnsupportedFamilyError):
        ag.rate_preserving_mu(fam, 0.5, "exponential")
    with pytest.raises(ConfigurationError):
        ag.rate_preserving_mu(ag.Hyperbolic(1.0), -0.5, "exponential")
    with pytest.raises(ConfigurationError):
        ag.rate_preserving_mu(ag.Hyperbolic(1.0), 0.5, "fancy")


def test_constant_mu_with_exact_approximation_matches_unsmoothed():
    spec = ag.quadratic(np.diag([1.0, 4.0]), np.zeros(2))
    fam = ag.ConstantDamping(2.0, 1.0)
    cfg = ag.IntegratorConfig(t0=0.0, t_end=5.0, step=1e-3, record_stride=10)
    x0 = np.array([1.0, 1.0])
    plain = ag.integrate(spec.generator, spec.objective, fam, cfg, x0)
    a = ag.with_exact_smooth_objective(spec.objective)
    mu = ag.constant_mu(0.3, fam)
    smoothed = ag.smoothed_flow(spec.generator, a, fam, mu, cfg, x0)
    assert np.array_equal(plain.states_x, smoothed.states_x)
    assert np.array_equal(plain.states_z, smoothed.states_z)


def test_constant_mu_rejects_nonpositive():
    with pytest.raises(ScheduleError):
        ag.constant_mu(0.0, ag.ConstantDamping(2.0, 1.0))


def test_smoothed_flow_rejects_vanishing_or_growing_mu():
    approx, spec = ag.l1_denoise_approximation(np.array([1.0]), 1.0)
    fam = ag.Hyperbolic(0.0)
    cfg = ag.IntegratorConfig(t0=1.0, t_end=10.0, step=1e-2)
    through_zero = ag.SmoothingSchedule(
        mu=lambda t: 1.0 - 0.2 * np.asarray(t, dtype=float),
        mu_dot=lambda t: -0.2,
        budget=lambda ta, tb: 0.0,
        description="linear decay through zero",
    )
    with pytest.raises(ScheduleError):
        ag.smoothed_flow(spec.generator, approx, fam, through_zero, cfg, np.zeros(1))
    growing = ag.SmoothingSchedule(
        mu=lambda t: 0.1 * np.asarray(t, dtype=float),
        mu_dot=lambda t: 0.1,
        budget=lambda ta, tb: 0.0,
        description="growing",
    )
    with pytest.raises(ScheduleError):
        ag.smoothed_flow(spec.generator, approx, fam, growing, cfg, np.zeros(1))


def test_smoothed_flow_bounds_on_pure_l1():
    # scalar |x| objective: x* = 0; smoothed flow keeps the certified bounds.
    # horizon ends before the oscillation amplitude reaches the mu-scale seam,
    # where RK4's local order degrades on the merely-C1 huber gradient
    a = ag.huber_l1(np.array([1.0]))
    fam = ag.Hyperbolic(0.0)
    mu = ag.rate_preserving_mu(fam, 0.5, "exponential")
    cfg = ag.IntegratorConfig(t0=1.0, t_end=6.0, step=1e-3, record_stride=10)
    traj = ag.smoothed_flow(ag.squared_euclidean(1), a, fam, mu, cfg, np.array([1.5]))
    assert ag.monotonicity_report(traj).passed
    assert ag.bound_check(traj).passed
    V0 = traj.records[0].V
    for r in traj.records:
        assert r.f_gap <= np.exp(-r.nu) * (V0 + r.budget) * (1.0 + 1e-6)


def test_smoothed_flow_tracks_budgeted_increments():
    approx, spec = ag.l1_denoise_approximation(np.array([2.0, 0.1]), 1.0)
    fam = ag.Hyperbolic(0.0)
    mu = ag.rate_preserving_mu(fam, 0.5, "exponential")
    cfg = ag.IntegratorConfig(t0=1.0, t_end=8.0, step=1e-3, record_stride=10)
    traj = ag.smoothed_flow(spec.generator, approx, fam, mu, cfg, np.zeros(2))
    V = np.array([r.V for r in traj.records])
    B = np.array([r.budget for r in traj.records])
    tol = 1e-8 * max(1.0, V[0])
    assert np.max(np.diff(V) - np.diff(B)) <= tol
    rep = ag.monotonicity_report(traj)
    assert rep.passed and rep.smoothed
