import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from pinchlab.integrators import (
    GeodesicState, JacobiState, integrate_geodesic, integrate_jacobi, integrate_riccati,
    jacobi_growth_check, unit_state,
)
from pinchlab.metric_models import PinchingProfile, shipped_model, solve_warp

BLOW_UP_MINUS_3 = 0.346573590279972654708616060729  # atanh(1/3)


def hyperboloid(s, th):
    return np.array([math.cosh(s), math.sinh(s) * math.cos(th), math.sinh(s) * math.sin(th)])


def hyperboloid_geodesic(s, th, s_dot, th_dot, t):
    """Closed-form unit-speed geodesic of H^2 in polar coordinates (s, th)."""
    P = hyperboloid(s, th)
    ds = np.array([math.sinh(s), math.cosh(s) * math.cos(th), math.cosh(s) * math.sin(th)])
    dth = np.array([0.0, -math.sinh(s) * math.sin(th), math.sinh(s) * math.cos(th)])
    X = math.cosh(t) * P + math.sinh(t) * (s_dot * ds + th_dot * dth)
    return math.acosh(X[0]), math.atan2(X[2], X[1])


def test_geodesic_matches_hyperboloid(hyp_model):
    start = unit_state(hyp_model, 0.4, 3.0, 1.1)
    path = integrate_geodesic(hyp_model, start, 6.0)
    s_end, th_end = hyperboloid_geodesic(3.0 + 1.0, 0.4, start.r_dot, start.theta_dot, 6.0)
    end = path.state(6.0)
    assert end.r + 1.0 == pytest.approx(s_end, abs=1e-9)
    assert math.remainder(end.theta - th_end, 2 * math.pi) == pytest.approx(0.0, abs=1e-9)


def test_radial_geodesic_is_exact(cosine_model):
    path = integrate_geodesic(cosine_model, unit_state(cosine_model, 1.0, 2.0, 0.0), 10.0)
    assert path.r(10.0) == pytest.approx(12.0, abs=1e-12)
    assert path.theta_unwrapped(10.0) == 1.0
    assert path.stop_reason == "t_end" and not path.clamped


def test_inward_ray_hits_the_core(cosh_model):
    path = integrate_geodesic(cosh_model, unit_state(cosh_model, 0.0, 1.0, math.pi), 5.0)
    assert path.stop_reason == "core" and path.clamped
    assert path.t_end == pytest.approx(1.0, abs=1e-9)


def test_r_stop_event(cosine_model):
    path = integrate_geodesic(cosine_model, unit_state(cosine_model, 0.0, 1.0, 0.5), 100.0, r_stop=9.0)
    assert path.stop_reason == "r_stop"
    assert path.ys[1, -1] == pytest.approx(9.0, abs=1e-9)


def test_state_wraps_angle_and_rejects_non_unit_speed(cosine_model):
    assert GeodesicState(7.0, 1.0, 0.0, 1.0).theta == pytest.approx(7.0 - 2 * math.pi)
    with pytest.raises(ValueError):
        integrate_geodesic(cosine_model, GeodesicState(0.0, 1.0, 0.0, 0.5), 1.0)


@settings(max_examples=25, deadline=None)
@given(theta=st.floats(0, 2 * math.pi), r=st.floats(0.5, 8.0), phi=st.floats(-3.1, 3.1))
def test_clairaut_and_speed_are_conserved(cosine_model, theta, r, phi):
    path = integrate_geodesic(cosine_model, unit_state(cosine_model, theta, r, phi), 8.0)
    assert path.energy_drift() < 1e-8
    th, rr, thd, rd = path.ys
    L = cosine_model.f(np.clip(rr, 0, 40)) ** 2 * thd
    assert np.max(np.abs(L - L[0])) <= 1e-8 * max(1.0, abs(L[0]))
    # r is convex along geodesics once f' >= 0
    assert np.min(path.r_ddot(np.linspace(0, path.t_end, 50))) >= -1e-10


def test_jacobi_constant_curvature_closed_forms():
    a = 0.7
    m = solve_warp(PinchingProfile.constant(a * a), 1.0, 0.0, 20.0)
    path = integrate_geodesic(m, unit_state(m, 0.0, 0.0, 0.0), 15.0)
    ts = np.linspace(0, 15, 31)
    cosh = integrate_jacobi(m, path, JacobiState(1.0, 0.0))
    np.testing.assert_allclose(cosh.j(ts), np.cosh(a * ts), rtol=1e-10)
    exp = integrate_jacobi(m, path, JacobiState(2.0, 2.0 * a))
    np.testing.assert_allclose(exp.j(ts), 2.0 * np.exp(a * ts), rtol=1e-10)


def test_jacobi_precondition(cosine_model):
    path = integrate_geodesic(cosine_model, unit_state(cosine_model, 0.0, 0.0, 0.0), 1.0)
    with pytest.raises(ValueError):
        integrate_jacobi(cosine_model, path, JacobiState(1.0, -0.5))


def test_jacobi_growth_harness_on_cosine_profile(cosine_model):
    rep = jacobi_growth_check(cosine_model, n=12, t_end=10.0)
    assert rep.violated_count == 0 and rep.min_margin >= -1e-10
    assert rep.max_equality_error is None


def test_riccati_coth_branch_and_blow_up():
    p = PinchingProfile.constant(1.0)
    sol = integrate_riccati(p, 2.0, 10.0)
    r = np.linspace(0, 10, 101)
    np.testing.assert_allclose(sol.mu(r), 1.0 / np.tanh(r + math.atanh(0.5)), rtol=1e-10)
    assert np.max(sol.residual(r[1:-1])) < 1e-6
    bad = integrate_riccati(p, -3.0, 10.0)
    assert bad.blow_up_r == pytest.approx(BLOW_UP_MINUS_3, abs=1e-6)
    assert bad.r_end < bad.blow_up_r


def test_riccati_restarts_at_breakpoints():
    m = shipped_model("piecewise-0.5-2")
    sol = integrate_riccati(m.profile, m.f0_prime / m.f0, 20.0)
    r = np.linspace(0.0, 20.0, 401)
    # the shape of the level sets is f'/f, which solves the same Riccati equation
    np.testing.assert_allclose(sol.mu(r), m.f_prime(r) / m.f(r), rtol=1e-9)
