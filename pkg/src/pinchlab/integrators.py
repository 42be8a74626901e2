"""Geodesic, Jacobi and Riccati integration on warped model surfaces.

All three use scipy's embedded Runge-Kutta solvers with dense output. The
geodesic equations in Fermi coordinates (theta, r) read

    r''     =  f f' theta'^2
    theta'' = -2 (f'/f) r' theta'

so r is convex along every geodesic once f' >= 0. The angle is integrated
unwrapped and reduced modulo 2 pi only when a :class:`GeodesicState` is
handed out.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import OdeSolution, solve_ivp

from .errors import IntegrationError

TWO_PI = 2.0 * math.pi


@dataclass(frozen=True)
class GeodesicState:
    theta: float
    r: float
    theta_dot: float
    r_dot: float
    t: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "theta", float(self.theta) % TWO_PI)

    def speed_defect(self, model):
        f = model.f(self.r)
        return self.r_dot ** 2 + (f * self.theta_dot) ** 2 - 1.0


def unit_state(model, theta, r, launch_angle, t=0.0):
    """Unit-speed state at (theta, r) making ``launch_angle`` with d/dr.

    launch_angle = 0 points straight out, pi straight in, and angles in
    (0, pi) move in the +theta direction.
    """
    f = model.f(r)
    return GeodesicState(theta, r, math.sin(launch_angle) / f, math.cos(launch_angle), t)


@dataclass(frozen=True)
class GeodesicPath:
    """Dense geodesic solution. ``stop_reason`` is one of
    ``"t_end"``, ``"r_stop"``, ``"core"`` (hit r = 0) or ``"horizon"`` (hit r_max).
    """

    model: object
    sol: OdeSolution
    ts: np.ndarray
    ys: np.ndarray
    t_start: float
    t_end: float
    theta_start: float
    stop_reason: str

    @property
    def clamped(self):
        return self.stop_reason in ("core", "horizon")

    def __call__(self, t):
        """Raw state rows (theta unwrapped, r, theta_dot, r_dot)."""
        return self.sol(t)

    def state(self, t):
        th, r, thd, rd = self.sol(t)
        return GeodesicState(th, r, thd, rd, t)

    def theta_unwrapped(self, t):
        return self.sol(t)[0]

    def r(self, t):
        return self.sol(t)[1]

    @property
    def angular_momentum(self):
        """Clairaut constant f(r)^2 theta_dot at the initial point."""
        th, r, thd, rd = self.ys[:, 0]
        return self.model.f(r) ** 2 * thd

    def r_ddot(self, t):
        """r'' from the geodesic equation at times t."""
        th, r, thd, rd = self.sol(t)
        r = np.clip(r, 0.0, self.model.r_max)
        return self.model.f(r) * self.model.f_prime(r) * thd ** 2

    def speed_defects(self):
        """ r'^2 + f^2 theta'^2 - 1 at every accepted step."""
        th, r, thd, rd = self.ys
        f = self.model.f(np.clip(r, 0.0, self.model.r_max))
        return rd ** 2 + (f * thd) ** 2 - 1.0

    def energy_drift(self):
        return float(np.max(np.abs(self.speed_defects())))


def _geodesic_rhs(model):
    warp = model.warp

    def rhs(t, y):
        th, r, thd, rd = y
        f, fp = warp(r)
        return [thd, rd, -2.0 * fp / f * rd * thd, f * fp * thd * thd]

    return rhs


def integrate_geodesic(model, initial: GeodesicState, t_end, *, r_stop=None,
                       rtol=1e-11, atol=1e-12, speed_tol=1e-8, theta0=None):
    """Integrate the geodesic through ``initial`` for arclength ``t_end``.

    Stops early (terminal event) when r reaches 0 or r_max, which sets
    ``clamped``, or when r increases through ``r_stop``. ``theta0`` can
    supply the unwrapped starting angle.
    """
    if not 0.0 <= initial.r <= model.r_max:
        raise ValueError(f"initial radius {initial.r} outside [0, {model.r_max}]")
    defect = initial.speed_defect(model)
    if abs(defect) > speed_tol:
        raise ValueError(f"initial state is not unit speed (defect {defect:.3g})")

    def hit_core(t, y):
        return y[1]

    hit_core.terminal = True
    hit_core.direction = -1

    def hit_horizon(t, y):
        return y[1] - model.r_max

    hit_horizon.terminal = True
    hit_horizon.direction = 1
    events = [hit_core, hit_horizon]
    if r_stop is not None:
        def hit_stop(t, y):
            return y[1] - r_stop

        hit_stop.terminal = True
        hit_stop.direction = 1
        events.append(hit_stop)

    th0 = initial.theta if theta0 is None else theta0
    y0 = [th0, initial.r, initial.theta_dot, initial.r_dot]
    t0 = initial.t
    sol = solve_ivp(_geodesic_rhs(model), (t0, t0 + t_end), y0, method="DOP853",
                    rtol=rtol, atol=[atol, atol, 1e-300, atol], dense_output=True,
                    events=events)
    if sol.status == -1:
        raise IntegrationError(f"geodesic integration failed: {sol.message}")
    reason = "t_end"
    if sol.status == 1:
        fired = [i for i, te in enumerate(sol.t_events) if len(te)]
        reason = "r_stop" if 2 in fired else ("core", "horizon")[fired[0]]
        if reason == "horizon" and r_stop is not None and r_stop >= model.r_max:
            reason = "r_stop"  # the two events coincide
    return GeodesicPath(model, sol.sol, sol.t, sol.y, float(t0), float(sol.t[-1]),
                        float(th0), reason)


# -- Jacobi fields ----------------------------------------------------------


@dataclass(frozen=True)
class JacobiState:
    j: float
    j_dot: float
    t: float = 0.0


@dataclass(frozen=True)
class JacobiSolution:
    sol: OdeSolution
    t_start: float
    t_end: float

    def j(self, t):
        return self.sol(t)[0]

    def j_dot(self, t):
        return self.sol(t)[1]

    def state(self, t):
        j, jd = self.sol(t)
        return JacobiState(float(j), float(jd), float(t))


def integrate_jacobi(model, path: GeodesicPath, initial: JacobiState, *,
                     rtol=1e-12, atol=1e-14):
    """Solve j'' = k(r(t)) j for the normal Jacobi component along ``path``.

    Curvature along the path is read from the path's dense output. Requires
    j(0) >= 0 and j(0) j'(0) >= 0, the configuration in which the growth
    bound j(t) >= j(0) cosh(a t) is claimed.
    """
    if initial.j < 0 or initial.j * initial.j_dot < 0:
        raise ValueError("need j(0) >= 0 and j(0) * j'(0) >= 0")
    k = model.profile.k
    r_max = model.r_max

    def rhs(t, y):
        r = min(max(path.sol(t)[1], 0.0), r_max)
        return [y[1], k(r) * y[0]]

    t0 = initial.t
    sol = solve_ivp(rhs, (t0, path.t_end), [initial.j, initial.j_dot], method="DOP853",
                    rtol=rtol, atol=atol, dense_output=True)
    if not sol.success:
        raise IntegrationError(f"Jacobi integration failed: {sol.message}")
    return JacobiSolution(sol.sol, float(t0), float(sol.t[-1]))


# -- Riccati ------------------------------------------------------------------


@dataclass(frozen=True)
class RiccatiSolution:
    """Dense solution of mu' = k(r) - mu^2 from mu(0) = mu0.

    ``blow_up_r`` is set when the solution escapes to -infinity; ``r_end``
    is then the last radius actually reached.
    """

    sol: OdeSolution
    mu0: float
    r_end: float
    blow_up_r: float | None
    profile: object

    def mu(self, r):
        return self.sol(r)[0]

    def __call__(self, r):
        return self.mu(r)

    def residual(self, r, h=1e-5):
        """|mu' + mu^2 - k| with mu' by central differences on the dense output."""
        r = np.asarray(r, dtype=float)
        lo = np.clip(r - h, 0.0, self.r_end)
        hi = np.clip(r + h, 0.0, self.r_end)
        d = (self.mu(hi) - self.mu(lo)) / (hi - lo)
        mid = 0.5 * (hi + lo)
        return np.abs(d + self.mu(mid) ** 2 - self.profile.k(mid))


def _stitch(solutions):
    ts = [solutions[0].t[0]]
    interps = []
    for s in solutions:
        ts.extend(s.t[1:])
        interps.extend(s.sol.interpolants)
    return OdeSolution(np.asarray(ts), interps)


def integrate_riccati(profile, mu0, r_max, *, rtol=1e-12, atol=1e-14, escape=1e8):
    """Integrate the scalar Riccati equation mu' + mu^2 = k(r), restarting at breakpoints."""
    if not r_max > 0:
        raise ValueError("r_max must be positive")

    def rhs(r, y):
        return [profile.k(r) - y[0] * y[0]]

    def escaped(r, y):
        return y[0] + escape

    escaped.terminal = True
    escaped.direction = -1

    cuts = [0.0] + [x for x in profile.breakpoints if 0.0 < x < r_max] + [float(r_max)]
    pieces = []
    y = [float(mu0)]
    blow_up = None
    for lo, hi in zip(cuts, cuts[1:]):
        s = solve_ivp(rhs, (lo, hi), y, method="DOP853", rtol=rtol, atol=atol,
                      dense_output=True, events=escaped)
        if s.status == -1:
            raise IntegrationError(f"Riccati integration failed: {s.message}")
        pieces.append(s)
        if s.status == 1:
            # near the pole mu ~ -1/(r* - r)
            blow_up = float(s.t[-1] + 1.0 / abs(s.y[0, -1]))
            break
        y = [s.y[0, -1]]
    return RiccatiSolution(_stitch(pieces), float(mu0), float(pieces[-1].t[-1]),
                           blow_up, profile)


# -- Jacobi growth harness ----------------------------------------------------


@dataclass(frozen=True)
class JacobiGrowthReport:
    n_geodesics: int
    min_margin: float  # min over samples of j(t) / (j(0) cosh(a t)) - 1
    violated_count: int
    max_equality_error: float | None  # sup |j/cosh(at) - 1| for j'(0) = 0 when k == a^2


def jacobi_growth_check(model, n=100, seed=0, t_end=None, n_t=200, tol=1e-10):
    """Compare normal Jacobi fields along Y-normal geodesics with j(0) cosh(a t)."""
    rng = np.random.default_rng(seed)
    a = model.profile.a
    constant = model.profile.kind == "constant" and abs(model.profile.params[0] - a * a) < 1e-15
    min_margin, bad, eq_err = math.inf, 0, 0.0
    for i in range(n):
        r0 = 0.0 if i % 2 == 0 else rng.uniform(0.0, 0.25 * model.r_max)
        span = (model.r_max - r0) * 0.9 if t_end is None else min(t_end, model.r_max - r0)
        path = integrate_geodesic(model, unit_state(model, rng.uniform(0, TWO_PI), r0, 0.0), span)
        j0 = rng.uniform(0.1, 2.0)
        jd0 = 0.0 if i % 4 == 0 else rng.uniform(0.0, 2.0) * j0
        sol = integrate_jacobi(model, path, JacobiState(j0, jd0))
        ts = np.linspace(0.0, path.t_end, n_t)
        ratio = sol.j(ts) / (j0 * np.cosh(a * ts))
        margin = ratio - 1.0
        min_margin = min(min_margin, float(margin.min()))
        bad += int(np.sum(margin < -tol))
        if constant and jd0 == 0.0:
            eq_err = max(eq_err, float(np.max(np.abs(margin))))
    return JacobiGrowthReport(n, min_margin, bad, eq_err if constant else None)
