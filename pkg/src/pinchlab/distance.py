"""Intrinsic distances on warped models by geodesic shooting.

On a rotationally symmetric surface every geodesic has a Clairaut
constant L = f(r)^2 theta_dot, and along it

    dtheta/dr = L / (f sqrt(f^2 - L^2)),     dt/dr = f / sqrt(f^2 - L^2).

A connecting geodesic is therefore fixed by one number. We shoot on a
monotone parameter tau in [0, 2]: for tau <= 1 the radius is monotone
and L = tau f(r_lo); for tau > 1 the geodesic first dips to a turning
radius r* = r_lo (2 - tau) with L = f(r*). The angle swept is evaluated
by quadrature after the substitution r = r_turn + w^2, which removes the
square-root singularity at the turning point. Monotone f makes both
branches monotone in tau, so bisection bracketing followed by Brent
refinement is safe.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.integrate import IntegrationWarning, quad
from scipy.optimize import brentq

from .comparison import hyp_law_of_cosines
from .errors import ClampedSegmentError, NoBracketError
from .integrators import integrate_geodesic, unit_state

TWO_PI = 2.0 * math.pi


@dataclass(frozen=True)
class FermiPoint:
    """A point (theta, r) in Fermi coordinates about Y."""

    theta: float
    r: float


@dataclass(frozen=True)
class BvpResult:
    length: float
    initial_angle: float
    residual: float
    iterations: int
    r_min: float
    angular_momentum: float
    branch: str
    ode_residual: float | None = None


def angular_separation(theta_p, theta_q):
    """Signed shortest angle from theta_p to theta_q, in (-pi, pi]."""
    d = (theta_q - theta_p) % TWO_PI
    return d - TWO_PI if d > math.pi else d


class _Shooter:
    """Clairaut quadratures between heights r_lo <= r_hi on one model."""

    def __init__(self, model, r_lo, r_hi, epsrel=1e-12):
        self.model = model
        self.r_lo = r_lo
        self.r_hi = r_hi
        self.epsrel = epsrel
        self.f_lo = model.warp(r_lo)[0]

    def _leg(self, r_turn, r_top, L, kind):
        """Integral from r_turn to r_top of theta' (kind 0) or t' (kind 1) in r."""
        if r_top <= r_turn:
            return 0.0
        warp = self.model.warp
        L2 = L * L

        def integrand(w):
            r = r_turn + w * w
            f, fp = warp(r)
            gap = f * f - L2
            if gap <= 0.0:
                # w -> 0 at a turning point: f^2 - L^2 ~ 2 f f' w^2
                gap = max(2.0 * f * fp * w * w, 1e-300)
            num = L / f if kind == 0 else f
            return 2.0 * w * num / math.sqrt(gap)

        with warnings.catch_warnings():
            # roundoff near the turning point trips quad's convergence heuristics
            warnings.simplefilter("ignore", IntegrationWarning)
            val, _ = quad(integrand, 0.0, math.sqrt(r_top - r_turn), epsabs=1e-13,
                          epsrel=self.epsrel, limit=200)
        return val

    def params(self, tau):
        if tau <= 1.0:
            return self.r_lo, tau * self.f_lo
        r_turn = self.r_lo * (2.0 - tau)
        return r_turn, self.model.warp(r_turn)[0]

    def sweep(self, tau, kind=0):
        r_turn, L = self.params(tau)
        if tau <= 1.0:
            if L == 0.0 and kind == 0:
                return 0.0
            return self._leg(self.r_lo, self.r_hi, L, kind)
        return self._leg(r_turn, self.r_lo, L, kind) + self._leg(r_turn, self.r_hi, L, kind)


def geodesic_bvp_distance(model, p, q, *, n_bracket=9, verify_ode=False, xtol=1e-15):
    """Length of the minimizing geodesic from p to q that stays in r >= 0.

    Raises :class:`ClampedSegmentError` when the connecting geodesic would
    have to dip below r = 0 and :class:`NoBracketError` when shooting fails.
    """
    for pt in (p, q):
        if not 0.0 <= pt.r <= model.r_max:
            raise ValueError(f"point radius {pt.r} outside [0, {model.r_max}]")
    dth = angular_separation(p.theta, q.theta)
    target = abs(dth)
    swapped = p.r > q.r
    lo, hi = (q, p) if swapped else (p, q)
    if target == 0.0:
        return BvpResult(hi.r - lo.r, math.pi if swapped else 0.0, 0.0, 0, lo.r, 0.0, "radial")

    sh = _Shooter(model, lo.r, hi.r)
    tau_max = 2.0 if model.f0_prime > 0 else 2.0 - 1e-9

    def miss(tau):
        return sh.sweep(tau) - target

    grid = np.linspace(0.0, tau_max, n_bracket)
    vals = [miss(t) for t in grid]
    bracket = None
    for i in range(len(grid) - 1):
        if vals[i] == 0.0:
            bracket = (grid[i], grid[i])
            break
        if vals[i] * vals[i + 1] < 0.0 or vals[i + 1] == 0.0:
            bracket = (grid[i], grid[i + 1])
            break
    if bracket is None:
        if vals[-1] < 0.0:
            raise ClampedSegmentError(
                f"connecting geodesic would cross r = 0 (max sweep {vals[-1] + target:.6g} "
                f"< {target:.6g})")
        raise NoBracketError("shooting parameter could not be bracketed")
    if bracket[0] == bracket[1]:
        tau, iters = bracket[0], 0
    else:
        tau, info = brentq(miss, *bracket, xtol=xtol, rtol=4 * np.finfo(float).eps,
                           full_output=True)
        iters = info.iterations
    r_turn, L = sh.params(tau)
    length = sh.sweep(tau, kind=1)
    residual = abs(miss(tau)) * model.warp(hi.r)[0]
    branch = "monotone" if tau <= 1.0 else "turning"

    sign = 1.0 if dth > 0 else -1.0
    if swapped or branch == "turning":
        angle = sign * (math.pi - math.asin(min(L / model.warp(p.r)[0], 1.0)))
    else:
        angle = sign * math.asin(min(L / model.warp(p.r)[0], 1.0))

    ode_res = None
    if verify_ode:
        path = integrate_geodesic(model, unit_state(model, p.theta, p.r, angle), length,
                                  theta0=p.theta)
        end = path.ys[:, -1]
        ode_res = math.hypot(end[1] - q.r,
                             model.f(q.r) * angular_separation(end[0] % TWO_PI, q.theta))
    return BvpResult(float(length), float(angle), float(residual), int(iters),
                     float(r_turn), float(sign * L), branch, ode_res)


def bvp_distance(model, p, q, **kwargs):
    return geodesic_bvp_distance(model, p, q, **kwargs).length


def hyperbolic_closed_form_distance(lam, p, q):
    """Distance in curvature -lam^2 between polar points p = (s, theta_p), q = (t, theta_q)."""
    (s, tp), (t, tq) = p, q
    return hyp_law_of_cosines(lam, s, t, abs(angular_separation(tp, tq)))


@dataclass
class SandwichReport:
    n_pairs: int
    violated_count: int
    min_lower_gap: float  # min of d - d_a
    min_upper_gap: float  # min of d_b - d
    skipped: int
    rows: list


def sandwich_check(model, R, *, a=None, b=None, n_pairs=1000, seed=0, max_sep=None,
                   r_span=12.0, tol=1e-9, max_tries=None):
    """Sample chart-contained pairs above R and test d_a <= d <= d_b.

    Pairs are kept when the g-geodesic and the b-comparison segment both stay
    above R, so the whole configuration lies where the metric sandwich holds.
    """
    from .comparison import sandwich_distances, segment_min_radius

    a = model.profile.a if a is None else a
    b = model.profile.b if b is None else b
    if max_sep is None:
        max_sep = min(math.pi, math.pi / model.f0)
    rng = np.random.default_rng(seed)
    r_hi = min(R + r_span, model.r_max)
    rows, skipped, tries = [], 0, 0
    max_tries = max_tries or 20 * n_pairs
    while len(rows) < n_pairs:
        tries += 1
        if tries > max_tries:
            raise NoBracketError(f"only {len(rows)} admissible pairs after {max_tries} draws")
        tp = rng.uniform(0.0, TWO_PI)
        tq = tp + rng.uniform(-max_sep, max_sep)
        rp, rq = rng.uniform(R, r_hi, 2)
        d_y = model.f0 * abs(angular_separation(tp, tq))
        if segment_min_radius(b, rp + R, rq + R, d_y) < 2.0 * R:
            skipped += 1
            continue
        try:
            res = geodesic_bvp_distance(model, FermiPoint(tp, rp), FermiPoint(tq, rq))
        except ClampedSegmentError:
            skipped += 1
            continue
        if res.r_min < R:
            skipped += 1
            continue
        da, db = sandwich_distances(a, b, R, rp, rq, d_y)
        rows.append((tp, rp, tq % TWO_PI, rq, float(da), res.length, float(db)))
    arr = np.array(rows)
    lower = arr[:, 5] - arr[:, 4]
    upper = arr[:, 6] - arr[:, 5]
    bad = int(np.sum((lower < -tol) | (upper < -tol)))
    return SandwichReport(n_pairs, bad, float(lower.min()), float(upper.min()), skipped, rows)
