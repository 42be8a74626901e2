import math

import numpy as np
import pytest

from pinchlab.compactification import (
    CompactifiedPoint, EssentialSubsetBoundary, NormalFermiChart, asymptote_gap,
    boundary_limit_point, dK_distance, envelope_exponent, holder_certify, is_untrapped,
    normal_state,
)
from pinchlab.distance import FermiPoint, bvp_distance
from pinchlab.errors import OutOfHorizonError, TrappedGeodesicError
from pinchlab.integrators import integrate_geodesic, unit_state


def test_concentric_limit_is_identity(hyp_model):
    sub = EssentialSubsetBoundary.concentric(3.0)
    for q in (0.0, 1.0, 4.0):
        lim = boundary_limit_point(hyp_model, sub, q, 20.0)
        assert abs(lim.theta_inf - q) <= 1e-12 and lim.tail_bound == 0.0


def test_limit_is_horizon_independent(hyp_model):
    sub = EssentialSubsetBoundary(3.0, ((1, 0.5, 0.0),))
    a = boundary_limit_point(hyp_model, sub, math.pi / 4, 20.0)
    b = boundary_limit_point(hyp_model, sub, math.pi / 4, 29.0)
    assert abs(a.theta_inf - b.theta_inf) <= a.error_bound + b.error_bound
    assert a.tail_bound < 1e-6 and b.tail_bound < a.tail_bound


def test_tilted_start_moves_against_the_slope(hyp_model):
    sub = EssentialSubsetBoundary(3.0, ((1, 0.5, 0.0),))
    for q in (math.pi / 4, 2.0, 4.0, 5.5):
        lim = boundary_limit_point(hyp_model, sub, q, 20.0)
        assert np.sign(lim.theta_inf - q) == -np.sign(sub.drho(q))


def test_limit_beyond_horizon_rejected(hyp_model, wavy):
    with pytest.raises(OutOfHorizonError):
        boundary_limit_point(hyp_model, wavy, 0.0, 40.0)


def test_normal_state_is_unit_and_orthogonal(cosine_model, wavy):
    s = normal_state(cosine_model, wavy, 1.1)
    assert abs(s.speed_defect(cosine_model)) < 1e-14
    f = cosine_model.f(s.r)
    # tangent of the graph is (1, rho') in (theta, r)
    assert f * f * s.theta_dot + wavy.drho(1.1) * s.r_dot == pytest.approx(0.0, abs=1e-14)


def test_radial_ray_has_zero_gap(cosine_model):
    path = integrate_geodesic(cosine_model, unit_state(cosine_model, 0.7, 0.0, 0.0), 50.0)
    gap = asymptote_gap(cosine_model, path)
    assert is_untrapped(path) and gap.sup <= 1e-9


def test_trapped_path_rejected(hyp_model):
    path = integrate_geodesic(hyp_model, unit_state(hyp_model, 0.0, 2.0, math.pi), 10.0)
    assert path.stop_reason == "core"
    with pytest.raises(TrappedGeodesicError):
        asymptote_gap(hyp_model, path)


def test_oblique_ray_gap_is_bounded(hyp_model):
    path = integrate_geodesic(hyp_model, unit_state(hyp_model, 0.0, 2.0, 1.0), 60.0)
    gap = asymptote_gap(hyp_model, path)
    late = gap.ts > gap.ts[-1] / 2
    assert np.all(np.diff(gap.radial[late]) < 1e-6)
    assert np.all(gap.lateral[late] <= gap.lateral_bound[late])
    assert math.isfinite(gap.sup)


def test_concentric_chart_is_a_shift(hyp_model):
    chart = NormalFermiChart(hyp_model, EssentialSubsetBoundary.concentric(2.0))
    th = np.array([0.1, 2.0, 5.0])
    q, rt = chart.fermi_coords(th, np.array([3.0, 10.0, 25.0]))
    np.testing.assert_allclose(q, th, atol=1e-12)
    np.testing.assert_allclose(rt, [1.0, 8.0, 23.0], rtol=1e-12)
    assert chart.total_length == pytest.approx(2 * math.pi * hyp_model.f(2.0), rel=1e-10)


def test_chart_inverts_its_rays(cosine_model, wavy):
    chart = NormalFermiChart(cosine_model, wavy)
    rng = np.random.default_rng(0)
    q = rng.uniform(0, 2 * math.pi, 200)
    R = rng.uniform(4.0, 30.0, 200)
    th, rt = chart.ray_point(q, R)
    q2, rt2 = chart.fermi_coords(th, R)
    np.testing.assert_allclose(q2, q, atol=1e-10)
    np.testing.assert_allclose(rt2, rt, rtol=1e-12)
    assert np.all(rt >= R - wavy.rho_max - 1e-12)


def test_boundary_foot_matches_ray_limit(hyp_model):
    sub = EssentialSubsetBoundary(3.0, ((1, 0.5, 0.0),))
    chart = NormalFermiChart(hyp_model, sub)
    lim = boundary_limit_point(hyp_model, sub, 1.0, 29.0)
    assert chart.boundary_foot(np.array([lim.theta_inf]))[0] == pytest.approx(1.0, abs=1e-6)


def test_chart_distance_on_the_base(cosine_model, wavy):
    chart = NormalFermiChart(cosine_model, wavy)
    p, q = CompactifiedPoint(0.2, 1.0), CompactifiedPoint(0.5, 1.0)
    assert dK_distance(p, q, chart) == pytest.approx(float(chart.arclength(0.2, 0.5)[0]))
    assert dK_distance(p, q, wavy, cosine_model) == pytest.approx(dK_distance(p, q, chart))
    assert float(chart.arclength(0.0, math.pi)[0]) == pytest.approx(chart.total_length / 2, rel=1e-6)


def test_injectivity_witness(cosine_model):
    a = cosine_model.profile.a
    for th1, th2 in ((0.0, 0.3), (1.0, 1.05)):
        dy = cosine_model.f0 * abs(th2 - th1)
        for t in (2.0, 5.0, 9.0):
            d = bvp_distance(cosine_model, FermiPoint(th1, t), FermiPoint(th2, t))
            assert d >= math.cosh(a * t / 2) * dy


def test_envelope_exponent_recovers_power_law():
    x = np.logspace(-8, 0, 400)
    assert envelope_exponent(x, 3 * x ** 0.4) == pytest.approx(0.4, abs=1e-12)
    assert math.isnan(envelope_exponent(x[:3], x[:3]))


def test_small_holder_run(hyp_model, hyp_fit):
    sub = EssentialSubsetBoundary(2.0, ((1, 0.3, 0.0),))
    cert = holder_certify(hyp_model, sub, n_samples=600, seed=1, constants=hyp_fit[2])
    assert cert.alpha_target == 1.0 and cert.passed
    assert cert.max_violation <= 0 and cert.stability <= 0.2
    assert set(cert.case_max) == {"case1", "case2", "boundary"}
    assert len(cert.samples["dK1"]) == 1200
