import pytest

from pinchlab.comparison import fit_anderson_schoen, fit_hyperbolic_R, model_constants
from pinchlab.compactification import EssentialSubsetBoundary, default_chart_radius
from pinchlab.metric_models import PinchingProfile, hyperbolic_model, shipped_model, solve_warp

_ACCEPTANCE = {}


@pytest.fixture(scope="session")
def cosine_model():
    return shipped_model("cosine-0.5-2")


@pytest.fixture(scope="session")
def hyp_model():
    return hyperbolic_model(1.0, r0=1.0, r_max=30.0)


@pytest.fixture(scope="session")
def cosh_model():
    # f = cosh r exactly: constant curvature -1 with a totally geodesic Y
    return solve_warp(PinchingProfile.constant(1.0), 1.0, 0.0, 30.0)


@pytest.fixture(scope="session")
def wavy():
    return EssentialSubsetBoundary(3.0, ((1, 0.5, 0.0),))


@pytest.fixture(scope="session")
def cosine_fit(cosine_model):
    c = model_constants(cosine_model)
    R = fit_hyperbolic_R(cosine_model, c).R
    k = fit_anderson_schoen(0.5, 2.0, R, chart_radius=default_chart_radius(cosine_model))
    return c, R, k


@pytest.fixture(scope="session")
def hyp_fit(hyp_model):
    c = model_constants(hyp_model)
    R = fit_hyperbolic_R(hyp_model, c).R
    k = fit_anderson_schoen(1.0, 1.0, R, chart_radius=default_chart_radius(hyp_model))
    return c, R, k


@pytest.fixture
def acceptance(request):
    """Record one PASS/FAIL line per acceptance criterion for the terminal summary."""

    def record(number, title, passed, detail):
        line = f"criterion {number:>2} {'PASS' if passed else 'FAIL'}  {title}: {detail}"
        _ACCEPTANCE[number] = line
        print(line)
        return passed

    return record


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for number in sorted(_ACCEPTANCE):
            terminalreporter.write_line(_ACCEPTANCE[number])
