import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from pinchlab.errors import ConfigError, OutOfHorizonError, PinchingViolationError
from pinchlab.metric_models import (
    SHIPPED_PROFILES, PinchingProfile, christoffel_at, hyperbolic_model, metric_at,
    model_from_dict, model_to_dict, sectional_curvature_at, shape_operator_at, shipped_model,
    solve_warp,
)

# Reference values from an independent 30-digit Taylor integration (mpmath.odefun).
COSINE_F2 = 27.5220815806425119
COSINE_FP2 = 38.1410990876277084
COSINE_F5 = 480.584922901742413
PIECEWISE_F3 = 63.4264680961762749
PIECEWISE_F6 = 663.479538352029051


def test_cosine_warp_matches_taylor_reference(cosine_model):
    assert cosine_model.f(2.0) == pytest.approx(COSINE_F2, rel=1e-10)
    assert cosine_model.f_prime(2.0) == pytest.approx(COSINE_FP2, rel=1e-10)
    assert cosine_model.f(5.0) == pytest.approx(COSINE_F5, rel=1e-10)


def test_piecewise_warp_matches_reference_across_kinks():
    m = shipped_model("piecewise-0.5-2")
    assert m.f(3.0) == pytest.approx(PIECEWISE_F3, rel=1e-10)
    assert m.f(6.0) == pytest.approx(PIECEWISE_F6, rel=1e-10)


def test_cosh_and_sinh_warps(cosh_model, hyp_model):
    r = np.linspace(0, 30, 301)
    assert np.max(np.abs(cosh_model.f(r) / np.cosh(r) - 1)) < 1e-11
    assert np.max(np.abs(hyp_model.f(r) / hyp_model.closed_form_f(r) - 1)) < 1e-11


@pytest.mark.parametrize("name", sorted(SHIPPED_PROFILES))
def test_shipped_profiles_are_pinched_and_resolve_the_ode(name):
    entry = SHIPPED_PROFILES[name]
    lo, hi = entry["profile"].validate(entry["r_max"])
    assert entry["profile"].a ** 2 <= lo + 1e-12 and hi <= entry["profile"].b ** 2 + 1e-12
    assert shipped_model(name).curvature_residual() < 1e-8


def test_profile_outside_band_rejected():
    bad = PinchingProfile.cosine(0.5, 2.0, 2.0, 2.5)
    with pytest.raises(PinchingViolationError):
        bad.validate(10.0)
    with pytest.raises(PinchingViolationError):
        solve_warp(bad, 1.0, 0.0, 10.0)


def test_constant_profile_band_defaults():
    p = PinchingProfile.constant(0.25)
    assert (p.a, p.b) == (0.5, 1.0)
    assert p.alpha == 0.5


def test_horizon_is_enforced(cosine_model):
    with pytest.raises(OutOfHorizonError):
        cosine_model.f(41.0)
    with pytest.raises(OutOfHorizonError):
        cosine_model.f(np.array([1.0, -0.5]))


def test_model_document_round_trip(cosine_model):
    doc = model_to_dict(cosine_model)
    again = model_from_dict(doc)
    r = np.linspace(0, 40, 97)
    np.testing.assert_array_equal(again.f(r), cosine_model.f(r))


@pytest.mark.parametrize("doc", [
    {"b": 2.0, "profile": {"kind": "constant", "value": 1.0}},
    {"a": 1.0, "b": 1.0, "profile": {"kind": "spline"}},
    {"a": 1.0, "b": 1.0, "profile": {"kind": "cosine", "mean": "x", "amplitude": 0}},
])
def test_malformed_model_documents(doc):
    with pytest.raises(ConfigError):
        model_from_dict(doc)


def test_geometric_primitives(hyp_model):
    r = 2.0
    f, fp = hyp_model.f(r), hyp_model.f_prime(r)
    g = metric_at(hyp_model, 0.3, r)
    assert g.g_rr == 1.0 and g.g_rtheta == 0.0
    assert g.g_thetatheta == pytest.approx(f * f)
    ch = christoffel_at(hyp_model, r)
    assert ch.r_thetatheta == pytest.approx(-f * fp)
    assert ch.theta_rtheta == pytest.approx(fp / f)
    assert sectional_curvature_at(hyp_model, r) == pytest.approx(-1.0)
    # level sets of a hyperbolic model are equidistant circles: S = coth(r + r0)
    assert shape_operator_at(hyp_model, r) == pytest.approx(1.0 / math.tanh(3.0), rel=1e-11)


@settings(max_examples=60, deadline=None)
@given(lam=st.floats(0.3, 2.0), r=st.floats(0.0, 10.0))
def test_hyperbolic_warp_identity(lam, r):
    m = hyperbolic_model(lam, r0=0.5, r_max=10.0)
    # f'^2 = 1 + lam^2 f^2 for sinh(lam (r + r0)) / lam
    f, fp = m.f(r), m.f_prime(r)
    assert fp == pytest.approx(math.sqrt(1.0 + lam * lam * f * f), rel=1e-11)


@settings(max_examples=40, deadline=None)
@given(r=st.floats(0.0, 39.9), h=st.floats(1e-3, 0.1))
def test_warp_is_convex_and_increasing(cosine_model, r, h):
    f0, f1 = cosine_model.f(r), cosine_model.f(r + h)
    assert f1 > f0
    assert cosine_model.f_prime(r + h) >= cosine_model.f_prime(r)
