import numpy as np
import pytest
from scipy.integrate import solve_ivp

from critsys.bubble import (
    CROSS_U,
    CROSS_V,
    ScaledBubble,
    bisection_flips,
    classify_trajectory,
    closed_form_symmetric,
    derivative_bubbles,
    evaluate_scaled,
    extract_tail,
    log_derivative_check,
    solve_ground_state,
)
from critsys.errors import DomainError, UnsupportedCase
from critsys.hyperbola import classify, q_from_p

# V(0) for (5, 11/4, 2) from the independent shooter below at rtol 1e-12
BETA_5_275_2 = 0.9376265979331491


def independent_shooting(N, p, q, tol=1e-12, r_end=1e4):
    """Plain bisection in r (not ln r) with event detection, as an oracle."""

    def rhs(r, y):
        U, P, V, Q = y
        return [P, -np.abs(V) ** q - (N - 1) * P / r, Q, -np.abs(U) ** p - (N - 1) * Q / r]

    def event(i):
        f = lambda r, y: y[i]  # noqa: E731
        f.terminal, f.direction = True, -1
        return f

    def label(beta):
        r0 = 1e-4
        y0 = [1 - beta**q * r0**2 / (2 * N), -(beta**q) * r0 / N, beta - r0**2 / (2 * N), -r0 / N]
        s = solve_ivp(rhs, (r0, r_end), y0, method="DOP853", rtol=tol, atol=1e-300,
                      events=[event(0), event(2)])
        if s.t_events[0].size:
            return CROSS_U
        if s.t_events[1].size:
            return CROSS_V
        return None

    lo, hi = 0.1, 10.0
    while hi - lo > 1e-13:
        mid = 0.5 * (lo + hi)
        lab = label(mid)
        if lab == CROSS_U:
            hi = mid
        elif lab == CROSS_V:
            lo = mid
        else:
            break
    return 0.5 * (lo + hi)


def test_symmetric_matches_closed_form(sym4):
    r = np.linspace(0, 50, 2001)
    exact = (1 + r**2 / 8) ** -1
    assert np.max(np.abs(sym4.U(r) - exact)) <= 1e-6
    assert np.max(np.abs(sym4.V(r) - exact)) <= 1e-6
    assert sym4.beta_star == pytest.approx(1.0, abs=1e-8)


def test_profile_invariants(asym5):
    pr = asym5.profile
    assert pr.r[0] == 0 and pr.U[0] == 1.0 and pr.dU[0] == 0 and pr.dV[0] == 0
    assert np.all(np.diff(pr.r) > 0)
    assert np.all(pr.U > 0) and np.all(pr.V > 0)
    assert np.all(np.diff(pr.U) < 0) and np.all(np.diff(pr.V) < 0)
    assert asym5.ode_residual <= 1e-8
    assert asym5.tail.fit_variation <= 0.01


def test_beta_against_independent_shooting(asym5):
    beta = independent_shooting(5, 2.75, 2.0)
    assert beta == pytest.approx(BETA_5_275_2, abs=1e-10)
    assert asym5.beta_star == pytest.approx(beta, abs=1e-9)


def test_bisection_dichotomy_flips_once(asym5, below5):
    for sol in (asym5, below5):
        trace = sol.solver_meta["trace"]
        assert bisection_flips(trace) == 1
        lo, hi = sol.solver_meta["final_bracket"]
        assert lo <= sol.beta_star <= hi


def test_classify_trajectory_sides():
    pair = classify(4, 3.0, 3.0)
    assert classify_trajectory(pair, 0.5)[0] == CROSS_V
    assert classify_trajectory(pair, 2.0)[0] == CROSS_U


def test_solver_rejects_bad_inputs():
    with pytest.raises(DomainError):
        solve_ground_state(classify(4, 3.0, 3.0), tol=1e-3)
    with pytest.raises(DomainError):
        solve_ground_state(classify(4, 3.5, 3.0))
    q = 5 / 3
    with pytest.raises(UnsupportedCase):
        solve_ground_state(classify(5, q_from_p(5, q), q))


def test_closed_form_examples():
    s4 = closed_form_symmetric(4, r_max=100.0)
    assert s4.U(2 * np.sqrt(2)) == pytest.approx(0.5, rel=1e-12)
    assert s4.ode_residual <= 1e-12
    s6 = closed_form_symmetric(6)
    assert s6.U(0.0) == 1.0 and s6.dU(0.0) == 0.0


def test_tail_constants(exact4):
    t = extract_tail(exact4.profile, exact4.pair)
    assert t.a == pytest.approx(8.0, rel=1e-4)
    assert t.b == pytest.approx(8.0, rel=1e-4)


def test_tail_slopes(asym5, below5):
    assert abs(asym5.tail.slope_V - 3.0) <= 0.01
    assert abs(asym5.tail.slope_U - 3.0) <= 0.02
    assert abs(below5.tail.slope_U - 2.5) <= 0.02
    assert abs(below5.tail.slope_V - 3.0) <= 0.02


def test_log_derivative_limits(exact4, below5):
    limU, limV = log_derivative_check(exact4)
    assert limU == pytest.approx(-2, abs=0.02) and limV == pytest.approx(-2, abs=0.02)
    lim6 = log_derivative_check(closed_form_symmetric(6))
    assert lim6 == pytest.approx((-4, -4), abs=0.02)
    limU, _ = log_derivative_check(below5)
    assert limU == pytest.approx(-2.5, abs=0.03)


def test_tail_extension_continuous(asym5):
    R = asym5.r_max
    for f in (asym5.U, asym5.V, asym5.dU, asym5.dV):
        inside, outside = f(R * (1 - 1e-12)), f(R * (1 + 1e-12))
        assert outside == pytest.approx(inside, rel=1e-8)


def test_evaluate_scaled_examples(sym4, asym5):
    u, v = evaluate_scaled(ScaledBubble(asym5, 1.0), np.zeros(5))
    assert (u, v) == pytest.approx((1.0, asym5.beta_star), rel=1e-15)
    u, _ = evaluate_scaled(ScaledBubble(sym4, 0.5, np.ones(4)), np.ones(4))
    assert u == pytest.approx(2.0, rel=1e-15)
    with pytest.raises(DomainError):
        ScaledBubble(sym4, 0.0)


def test_scale_covariance(asym5, rng):
    xi = rng.normal(size=5)
    for delta in (0.1, 0.37, 2.0):
        sb = ScaledBubble(asym5, delta, xi)
        x = xi + delta * rng.normal(size=(20, 5)) * 3
        u, v = evaluate_scaled(sb, x)
        u1, v1 = evaluate_scaled(ScaledBubble(asym5, 1.0), (x - xi) / delta)
        a, b = sb.exponents
        np.testing.assert_allclose(u, delta ** (-a) * u1, rtol=1e-10)
        np.testing.assert_allclose(v, delta ** (-b) * v1, rtol=1e-10)


def test_scaled_bubble_solves_system(asym5):
    """Radial finite-difference Laplacian of the scaled pair."""
    N, p, q = 5, 2.75, 2.0
    delta = 0.1
    a, b = N / (p + 1), N / (q + 1)
    rho = delta * np.geomspace(0.2, 50, 20)
    h = 1e-2 * rho

    def lap(df, c):
        # (r^(N-1) f')' / r^(N-1), fourth-order central differences of the flux
        def flux(r):
            return r ** (N - 1) * c / delta * df(r / delta)

        d = (-flux(rho + 2 * h) + 8 * flux(rho + h) - 8 * flux(rho - h) + flux(rho - 2 * h)) / (12 * h)
        return d / rho ** (N - 1)

    lap_u, lap_v = lap(asym5.dU, delta ** (-a)), lap(asym5.dV, delta ** (-b))
    u = delta ** (-a) * asym5.U(rho / delta)
    v = delta ** (-b) * asym5.V(rho / delta)
    assert np.max(np.abs(lap_u + v**q) / v**q) <= 1e-5
    assert np.max(np.abs(lap_v + u**p) / u**p) <= 1e-5


def test_derivative_bubble_examples(sym4):
    sb = ScaledBubble(sym4, 1.0)
    Phi, Psi = derivative_bubbles(sb, 0, np.zeros(4))
    assert Phi == pytest.approx(-1.0, rel=1e-14)
    Phi, _ = derivative_bubbles(sb, 1, np.zeros(4))
    assert Phi == 0.0
    with pytest.raises(DomainError):
        derivative_bubbles(sb, 1, np.zeros(4), frame=2 * np.eye(4)[:3])


def test_derivative_bubbles_match_finite_differences(asym5, rng):
    xi = np.zeros(5)
    delta = 0.7
    x = rng.normal(size=(10, 5))
    Phi, Psi = derivative_bubbles(ScaledBubble(asym5, delta, xi), 0, x)
    h = 1e-5
    up, vp = evaluate_scaled(ScaledBubble(asym5, delta + h, xi), x)
    um, vm = evaluate_scaled(ScaledBubble(asym5, delta - h, xi), x)
    np.testing.assert_allclose(Phi, (up - um) / (2 * h), rtol=1e-6)
    np.testing.assert_allclose(Psi, (vp - vm) / (2 * h), rtol=1e-6)
    # translation along the frame: d/dxi_i of u(x - xi)
    for i in range(1, 5):
        e = np.eye(5)[i - 1]
        Phi_i, _ = derivative_bubbles(ScaledBubble(asym5, delta, xi), i, x)
        up, _ = evaluate_scaled(ScaledBubble(asym5, delta, xi + h * e), x)
        um, _ = evaluate_scaled(ScaledBubble(asym5, delta, xi - h * e), x)
        np.testing.assert_allclose(Phi_i, (up - um) / (2 * h), rtol=1e-6, atol=1e-9)
