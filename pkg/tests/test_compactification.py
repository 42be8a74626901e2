import json
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from pinchlab.compactification import (
    CompactifiedPoint, EssentialSubsetBoundary, buffer_conditions, buffer_containment, buffer_ok,
    check_convexity, collapse, dK_base, dK_distance, double_buffer, extend_exponential,
    graph_curvature, special_cover_T,
)
from pinchlab.errors import ConfigError, NonconvexBoundaryError

E1_MINUS_E2 = 0.232544157934829629701524275189
ONE_MINUS_LN_E_MINUS_2 = 1.33089326820405453356614600473


def test_extend_examples():
    assert extend_exponential(0.3, math.tanh(0.5)) == pytest.approx((0.3, 1.0), rel=1e-15)
    assert extend_exponential(7.0, 1.0) == (pytest.approx(7.0 - 2 * math.pi), math.inf)
    for bad in (0.0, -0.2, 1.0000001):
        with pytest.raises(ValueError):
            extend_exponential(0.0, bad)
    with pytest.raises(ValueError):
        CompactifiedPoint(0.0, 0.0)


@pytest.mark.parametrize("s", [0.1, 0.5, 0.9])
def test_collapse_inverts_extend(s):
    y, r = extend_exponential(1.0, s)
    assert collapse(r) == pytest.approx(s, rel=1e-15)


def test_round_trip_dense():
    s = np.linspace(0.01, 0.999, 2001)
    r = 2.0 * np.arctanh(s)
    np.testing.assert_allclose(collapse(r), s, rtol=1e-12)
    np.testing.assert_allclose([CompactifiedPoint(0.0, x).r for x in s], r, rtol=1e-12)
    assert collapse(math.inf) == 1.0 and CompactifiedPoint.from_fermi(0.0, math.inf).at_infinity


def test_dK_examples(hyp_model):
    p, q = CompactifiedPoint.from_fermi(0.0, 1.0), CompactifiedPoint.from_fermi(0.0, 2.0)
    assert dK_distance(p, q) == pytest.approx(E1_MINUS_E2, rel=1e-14)
    assert dK_distance(p, p) == 0.0
    a, b = CompactifiedPoint(0.0, 1.0), CompactifiedPoint(5.0, 1.0)
    assert dK_distance(a, b, model=hyp_model) == pytest.approx(hyp_model.f0 * (2 * math.pi - 5.0))
    assert dK_base(0.0, math.inf, 5.0, math.inf, 2.0) == pytest.approx(2.0 * (2 * math.pi - 5.0))


def test_dK_metric_on_random_triples():
    rng = np.random.default_rng(0)
    n = 100_000
    th = rng.uniform(0, 2 * math.pi, (3, n))
    r = rng.exponential(3.0, (3, n))
    r[:, rng.uniform(size=n) < 0.1] = math.inf
    d = lambda i, j: dK_base(th[i], r[i], th[j], r[j], 1.7)  # noqa: E731
    assert np.all(d(0, 1) == d(1, 0))
    assert np.all(d(0, 2) <= d(0, 1) + d(1, 2) + 1e-12)
    assert np.all(d(0, 0) == 0.0)
    assert np.all(d(0, 1) <= 1.0 + 1.7 * math.pi)


@settings(max_examples=200, deadline=None)
@given(y1=st.floats(0, 6.28), y2=st.floats(0, 6.28), s1=st.floats(0.01, 1.0), s2=st.floats(0.01, 1.0))
def test_dK_zero_iff_equal(y1, y2, s1, s2):
    p, q = CompactifiedPoint(y1, s1), CompactifiedPoint(y2, s2)
    d = dK_distance(p, q)
    assert (d == 0.0) == (p.y == q.y and p.exp_neg_r == q.exp_neg_r)


def test_dK_equivalent_to_collapsed_euclidean_on_a_cylinder():
    rng = np.random.default_rng(1)
    th = rng.uniform(0, 0.5, (2, 20_000))
    r = rng.uniform(1.0, 8.0, (2, 20_000))
    dk = dK_base(th[0], r[0], th[1], r[1])
    s = np.tanh(r / 2)
    eu = np.hypot(s[0] - s[1], th[0] - th[1])
    ratio = dk / eu
    assert 1 / 2 <= ratio.min() and ratio.max() <= 2


def test_subset_document_round_trip(wavy):
    doc = json.loads(json.dumps(wavy.to_dict()))
    assert EssentialSubsetBoundary.from_dict(doc) == wavy
    assert EssentialSubsetBoundary.from_dict({"rho": {"mean": 0.0}}).is_base
    for bad in ({}, {"rho": {"kind": "spline", "mean": 1}}, {"rho": {"mean": 1, "coeffs": [[0, 1, 0]]}}):
        with pytest.raises(ConfigError):
            EssentialSubsetBoundary.from_dict(bad)


def test_fourier_derivatives(wavy):
    s = EssentialSubsetBoundary(2.0, ((1, 0.3, -0.2), (3, 0.05, 0.1)))
    th = np.linspace(0, 6, 50)
    h = 1e-5
    np.testing.assert_allclose(s.drho(th), (s.rho(th + h) - s.rho(th - h)) / (2 * h), atol=1e-8)
    np.testing.assert_allclose(s.d2rho(th), (s.drho(th + h) - s.drho(th - h)) / (2 * h), atol=1e-8)
    assert wavy.rho_max == 3.5 and wavy.rho_min == pytest.approx(2.5)


def test_level_sets_are_convex(cosine_model, hyp_model):
    for m in (cosine_model, hyp_model):
        rep = check_convexity(EssentialSubsetBoundary.concentric(2.0), m)
        assert rep.passed
        assert rep.min_curvature == pytest.approx(m.f_prime(2.0) / m.f(2.0), rel=1e-12)


def test_small_perturbation_is_convex(hyp_model):
    assert check_convexity(EssentialSubsetBoundary(5.0, ((1, 0.1, 0.0),)), hyp_model).passed


def test_nonconvex_boundaries_flagged(hyp_model):
    with pytest.raises(NonconvexBoundaryError):
        check_convexity(EssentialSubsetBoundary(0.5, ((1, 5.0, 0.0),)), hyp_model)
    wobble = EssentialSubsetBoundary(0.5, ((3, 0.4, 0.0),))
    rep = check_convexity(wobble, hyp_model, raise_on_fail=False)
    assert not rep.passed and not rep.negative_height
    assert graph_curvature(hyp_model, wobble, rep.worst_theta) == rep.min_curvature


def test_geodesic_graph_has_zero_curvature(cosh_model):
    # Y itself is a geodesic when f'(0) = 0
    assert abs(check_convexity(EssentialSubsetBoundary.concentric(0.0), cosh_model).min_curvature) < 1e-14


def test_special_cover_T_examples(hyp_fit, cosine_fit):
    k = cosine_fit[2]
    assert k.a == 0.5
    assert special_cover_T(k, 0.0) == pytest.approx(ONE_MINUS_LN_E_MINUS_2, rel=1e-14)
    assert special_cover_T(k, 3.0) - special_cover_T(k, 2.0) == pytest.approx(1.0, rel=1e-14)
    assert special_cover_T(k, 1.0, T1=1e6) == 1e6
    assert special_cover_T(hyp_fit[2], 0.0) == pytest.approx(ONE_MINUS_LN_E_MINUS_2 / 2)
    with pytest.raises(ValueError):
        special_cover_T(k, -1.0)


@pytest.mark.parametrize("fit", ["hyp_fit", "cosine_fit"])
def test_double_buffer_conditions(fit, request):
    k = request.getfixturevalue(fit)[2]
    p = double_buffer(0.4, k)
    assert buffer_ok(p, k)
    m = buffer_conditions(p, k)
    assert m["chart"] >= 0 and m["bottom"] > 0 and m["inner_height"] == pytest.approx(0.0, abs=1e-12)
    assert p.T_OB >= k.R and p.center == 0.4


def test_doubling_c8_raises_inner_height(hyp_fit):
    k = hyp_fit[2]
    base = double_buffer(0.0, k)
    bigger = double_buffer(0.0, k.with_overrides(c8=2 * k.c8))
    assert bigger.T_IB - base.T_IB >= k.c8 - 1e-12


def test_small_containment_run(hyp_model, hyp_fit):
    p = double_buffer(0.0, hyp_fit[2], hyp_model)
    rep = buffer_containment(hyp_model, p, n_pairs=40, seed=3)
    assert rep.escapes == 0 and rep.min_r_margin > 0
    assert rep.max_angular_extent <= p.epsilon
