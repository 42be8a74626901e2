"""Compactification of the model end, boundary correspondence, and Hoelder checks.

Points outside K_1 = {r <= 0} are written in Fermi coordinates (theta, r)
about Y_1 = {r = 0}. The collapse map s = tanh(r/2) sends the end onto
Y_1 x (0, 1], and s = 1 is the boundary at infinity. A second essential
subset K_2 is the region under a periodic graph r = rho(theta); its own
Fermi coordinates (q', r~) are found by following the outward normal rays
of Y_2, which on a rotationally symmetric surface reduce to Clairaut
quadratures in r.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .comparison import (
    SINH_THRESHOLD_FACTOR, case1_factor, fit_anderson_schoen, fit_hyperbolic_R, model_constants,
)
from .errors import (
    ConfigError, FootPointError, InfeasibleError, NonconvexBoundaryError, OutOfHorizonError,
    TrappedGeodesicError,
)
from .integrators import GeodesicState, integrate_geodesic

TWO_PI = 2.0 * math.pi
LN2 = math.log(2.0)


# -- collapse / extended exponential ------------------------------------------


@dataclass(frozen=True)
class CompactifiedPoint:
    """Point of M* in collapsed coordinates: y an angle on Y, s = tanh(r/2) in (0, 1]."""

    y: float
    s: float

    def __post_init__(self):
        if not 0.0 < self.s <= 1.0:
            raise ValueError(f"collapsed coordinate s={self.s} outside (0, 1]")
        object.__setattr__(self, "y", float(self.y) % TWO_PI)

    @property
    def at_infinity(self):
        return self.s == 1.0

    @property
    def r(self):
        return math.inf if self.s == 1.0 else 2.0 * math.atanh(self.s)

    @property
    def exp_neg_r(self):
        return (1.0 - self.s) / (1.0 + self.s)

    @classmethod
    def from_fermi(cls, y, r):
        return cls(y, collapse(r))


def collapse(r):
    """zeta: r -> tanh(r/2); r = inf maps to the boundary s = 1."""
    return np.tanh(0.5 * np.asarray(r, dtype=float)) if np.ndim(r) else math.tanh(0.5 * r)


def extend_exponential(y, s):
    """Inverse of the collapse: (y, s) -> Fermi pair (y, r), with r = inf on the boundary."""
    if not 0.0 < s <= 1.0:
        raise ValueError(f"s={s} outside (0, 1]")
    return (float(y) % TWO_PI, math.inf if s == 1.0 else 2.0 * math.atanh(s))


def wrapped_angle(d):
    """|d| reduced to the shorter way round the circle, in [0, pi]."""
    d = np.abs(np.asarray(d, dtype=float)) % TWO_PI
    d = np.minimum(d, TWO_PI - d)
    return d if d.ndim else float(d)


def dK_base(theta_p, r_p, theta_q, r_q, y_scale=1.0):
    """d_K1 = |e^-r_p - e^-r_q| + d_Y for arrays of Fermi coordinates (r may be inf)."""
    ep = np.exp(-np.asarray(r_p, dtype=float))
    eq = np.exp(-np.asarray(r_q, dtype=float))
    return np.abs(ep - eq) + y_scale * wrapped_angle(np.asarray(theta_q) - np.asarray(theta_p))


def dK_distance(p, q, subset=None, model=None):
    """d_K between two compactified points.

    With ``subset`` None the points are read in Y_1 coordinates (d_Y = f0 x
    angle, f0 taken from ``model`` if given); ``subset`` may also be a
    :class:`NormalFermiChart`, in which case y is the foot parameter on Y_2.
    """
    rad = abs(p.exp_neg_r - q.exp_neg_r)
    if isinstance(subset, NormalFermiChart):
        return rad + float(subset.arclength(p.y, q.y)[0])
    if subset is not None and not subset.is_base:
        if model is None:
            raise ValueError("a model is needed for d_K of a non-base subset")
        return dK_distance(p, q, NormalFermiChart(model, subset))
    scale = 1.0 if model is None else model.f0
    return rad + scale * wrapped_angle(p.y - q.y)


# -- second essential subset ------------------------------------------------


@dataclass(frozen=True)
class EssentialSubsetBoundary:
    """Y_2 as the graph r = rho(theta), rho = mean + sum a_k cos(k theta) + b_k sin(k theta)."""

    mean: float
    coeffs: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "coeffs",
                           tuple((int(k), float(a), float(b)) for k, a, b in self.coeffs))
        for k, _, _ in self.coeffs:
            if k < 1:
                raise ConfigError("Fourier modes must have k >= 1")

    @classmethod
    def concentric(cls, r2):
        return cls(float(r2), ())

    @property
    def is_base(self):
        return self.mean == 0.0 and all(a == 0.0 and b == 0.0 for _, a, b in self.coeffs)

    def _series(self, theta, order):
        theta = np.asarray(theta, dtype=float)
        out = np.full(theta.shape, self.mean if order == 0 else 0.0)
        for k, a, b in self.coeffs:
            c, s = np.cos(k * theta), np.sin(k * theta)
            if order == 0:
                out = out + a * c + b * s
            elif order == 1:
                out = out + k * (-a * s + b * c)
            else:
                out = out - k * k * (a * c + b * s)
        return out if out.ndim else float(out)

    def rho(self, theta):
        return self._series(theta, 0)

    def drho(self, theta):
        return self._series(theta, 1)

    def d2rho(self, theta):
        return self._series(theta, 2)

    @property
    def rho_max(self):
        return self.mean + sum(math.hypot(a, b) for _, a, b in self.coeffs)

    @property
    def rho_min(self):
        return float(np.min(self.rho(np.linspace(0.0, TWO_PI, 8193))))

    def to_dict(self):
        return {"rho": {"kind": "fourier", "mean": self.mean,
                        "coeffs": [list(c) for c in self.coeffs]}}

    @classmethod
    def from_dict(cls, doc):
        try:
            rho = doc["rho"]
            if rho.get("kind", "fourier") != "fourier":
                raise ConfigError(f"unsupported rho kind {rho.get('kind')!r}")
            return cls(float(rho["mean"]), tuple(tuple(c) for c in rho.get("coeffs", [])))
        except (KeyError, TypeError, ValueError) as exc:
            if isinstance(exc, ConfigError):
                raise
            raise ConfigError(f"bad subset document: {exc}") from exc


@dataclass(frozen=True)
class ConvexityReport:
    passed: bool
    min_curvature: float
    worst_theta: float
    n_nodes: int
    negative_height: bool


def graph_curvature(model, subset, theta):
    """Geodesic curvature of r = rho(theta) w.r.t. the outward (increasing r) normal."""
    rho, d1, d2 = subset.rho(theta), subset.drho(theta), subset.d2rho(theta)
    f, fp = model.f(rho), model.f_prime(rho)
    W = np.sqrt(f * f + d1 * d1)
    return (f * f * fp + 2.0 * fp * d1 * d1 - f * d2) / W ** 3


def check_convexity(subset, model, n=4096, tol=1e-12, raise_on_fail=True):
    theta = np.linspace(0.0, TWO_PI, n, endpoint=False)
    rho = subset.rho(theta)
    if np.any(rho < 0.0) or np.any(rho > model.r_max):
        i = int(np.argmin(rho)) if np.any(rho < 0.0) else int(np.argmax(rho))
        report = ConvexityReport(False, -math.inf, float(theta[i]), n, bool(np.any(rho < 0.0)))
        if raise_on_fail:
            raise NonconvexBoundaryError(f"graph leaves the model at theta={theta[i]:.6g}", report)
        return report
    kappa = graph_curvature(model, subset, theta)
    i = int(np.argmin(kappa))
    report = ConvexityReport(bool(kappa[i] >= -tol), float(kappa[i]), float(theta[i]), n, False)
    if raise_on_fail and not report.passed:
        raise NonconvexBoundaryError(
            f"boundary curvature {kappa[i]:.6g} < 0 at theta={theta[i]:.6g}", report)
    return report


def normal_state(model, subset, q_prime):
    """Unit outward normal of Y_2 at parameter q' as a geodesic initial state."""
    rho = subset.rho(q_prime)
    d1 = subset.drho(q_prime)
    f = model.f(rho)
    W = math.hypot(f, d1)
    return GeodesicState(q_prime, rho, -d1 / (f * W), f / W)


# -- boundary correspondence ---------------------------------------------------


@dataclass(frozen=True)
class BoundaryLimit:
    theta_inf: float  # unwrapped, near q'
    tail_bound: float
    integration_error: float
    t_end: float
    r_end: float

    @property
    def error_bound(self):
        return self.tail_bound + self.integration_error


def angular_tail_bound(c, L, r_end, r_dot_end):
    """Bound on |theta(inf) - theta(r_end)| from f^2 >= f0^2 L3 cosh^2(a(r + L1)).

    Along an escaping geodesic r' increases, so dtheta/dr = L / (f^2 r') <= |L| / (f^2 r'(end)).
    """
    if L == 0.0:
        return 0.0
    if r_dot_end <= 0.0:
        raise TrappedGeodesicError("geodesic is not moving outward at the horizon")
    x = c.a * (r_end + c.L1)
    rest = 2.0 * math.exp(-2.0 * x) / (1.0 + math.exp(-2.0 * x))  # 1 - tanh(x)
    return abs(L) * rest / (c.y_scale ** 2 * c.L3 * c.a * r_dot_end)


def boundary_limit_point(model, subset, q_prime, r_target, *, constants=None, rtol=1e-11):
    """Limit angle at infinity of the outward normal ray of Y_2 starting at q'."""
    if r_target > model.r_max:
        raise OutOfHorizonError(f"r_target {r_target} beyond r_max {model.r_max}")
    c = constants or model_constants(model)
    start = normal_state(model, subset, q_prime)
    if start.r >= r_target:
        raise ValueError("r_target must lie above Y_2")
    horizon = 20.0 * (r_target - start.r) + 50.0

    def run(tol):
        path = integrate_geodesic(model, start, horizon, r_stop=r_target, rtol=tol,
                                  atol=tol * 1e-2, theta0=q_prime)
        if path.stop_reason != "r_stop":
            raise TrappedGeodesicError(f"normal ray from q'={q_prime} stopped: {path.stop_reason}")
        return path

    path = run(rtol)
    coarse = run(rtol * 100.0)
    th, r, thd, rd = path.ys[:, -1]
    L = model.f(start.r) ** 2 * start.theta_dot
    tail = angular_tail_bound(c, L, r, rd)
    err = abs(coarse.ys[0, -1] - th)
    return BoundaryLimit(float(th), float(tail), float(err), path.t_end, float(r))


@dataclass(frozen=True)
class AsymptoteGap:
    ts: np.ndarray
    radial: np.ndarray  # |t - sigma_r(t)|
    lateral: np.ndarray  # f(sigma_r) |theta_inf - sigma_theta|
    lateral_bound: np.ndarray  # pi / (2 a r'(t))
    theta_inf: float

    @property
    def total(self):
        return self.radial + self.lateral

    @property
    def sup(self):
        return float(np.max(self.total))


def is_untrapped(path):
    """Escaping geodesic: reached its horizon moving outward without touching the core."""
    return path.stop_reason != "core" and path.ys[3, -1] > 0.0


def asymptote_gap(model, path, base_point=None, *, constants=None, n=400, tail=True):
    """Upper bounds on the distance between ``path`` and its asymptotic Y_1-normal ray.

    The comparison ray is t -> (theta_inf, t). ``base_point`` overrides
    theta_inf (unwrapped); by default it is the path's terminal angle.
    """
    if not is_untrapped(path):
        raise TrappedGeodesicError("path is not untrapped")
    c = constants or model_constants(model)
    theta_inf = path.ys[0, -1] if base_point is None else base_point
    ts = np.linspace(path.t_start, path.t_end, n)
    th, r, thd, rd = path(ts)
    r = np.clip(r, 0.0, model.r_max)
    f = model.f(r)
    with np.errstate(divide="ignore"):
        bound = np.where(rd > 0, math.pi / (2.0 * c.a * rd), np.inf)
    return AsymptoteGap(ts, np.abs(ts - path.t_start - r), f * np.abs(theta_inf - th), bound,
                        float(theta_inf))


# -- double buffer -------------------------------------------------------------


def default_chart_radius(model):
    """Half the injectivity radius of Y_1 (length pi f0), capped at pi/2."""
    return 0.5 * min(math.pi * model.f0, math.pi)


@dataclass(frozen=True)
class DoubleBufferParams:
    epsilon: float
    delta: float
    T_OB: float
    T_IB: float
    center: float
    halvings: int = 0


def buffer_conditions(p, k):
    """Margins of the four closing conditions (each must be >= 0, the third > 0)."""
    e, d = p.epsilon, p.delta
    bound3 = min(k.c1 / 2.0 * math.log(1.0 / (2.0 * e)) - k.c2 / 2.0,
                 1.0 / k.b * math.log(1.0 / e) - k.c3 / 2.0,
                 k.c6 * math.log(1.0 / (2.0 * e)) - k.c7)
    return {
        "chart": k.chart_radius - (e + d),
        "outer_height": p.T_OB - (k.c4 * math.log(1.0 / d) + k.c5),
        "bottom": bound3 - p.T_OB,
        "inner_height": p.T_IB - (p.T_OB + k.c8),
    }


def buffer_ok(p, k):
    m = buffer_conditions(p, k)
    return m["chart"] >= 0 and m["outer_height"] >= 0 and m["bottom"] > 0 and m["inner_height"] >= 0


def double_buffer(x, constants, model=None, *, max_halvings=200):
    """(epsilon, delta, T_OB, T_IB) about x, chosen in the order of the closing argument."""
    k = constants
    if not k.chart_radius > 0:
        raise InfeasibleError("chart radius must be positive")
    delta = eps = 0.5 * k.chart_radius
    T_OB = max(k.c4 * math.log(1.0 / delta) + k.c5, k.R)
    halvings = 0
    while True:
        p = DoubleBufferParams(eps, delta, T_OB, T_OB + k.c8, float(x), halvings)
        if buffer_conditions(p, k)["bottom"] > 0:
            break
        eps *= 0.5
        halvings += 1
        if halvings > max_halvings or eps < 1e-300:
            raise InfeasibleError("no epsilon satisfies the bottom condition")
    if model is not None and p.T_IB >= model.r_max:
        raise InfeasibleError(f"T_IB={p.T_IB} beyond model horizon {model.r_max}")
    return p


def special_cover_T(constants, D, T1=0.0, T2=None):
    """T = max{T1, T2, (1/2a)(1 - ln(e-2)) + D}; T2 defaults to T1."""
    if D < 0:
        raise ValueError("D must be >= 0")
    T2 = T1 if T2 is None else T2
    return max(T1, T2, SINH_THRESHOLD_FACTOR / (2.0 * constants.a) + D)


# -- Fermi coordinates of a second subset ---------------------------------------

_GL_X, _GL_W = np.polynomial.legendre.leggauss(10)


def _graded_nodes(panels=24, power=2.0):
    """Nodes/weights on [0, 1], panels refined toward 0 where the integrands live."""
    edges = np.linspace(0.0, 1.0, panels + 1) ** power
    lo, hi = edges[:-1, None], edges[1:, None]
    u = 0.5 * (hi + lo) + 0.5 * (hi - lo) * _GL_X[None, :]
    w = 0.5 * (hi - lo) * _GL_W[None, :]
    return u.ravel(), w.ravel()


class NormalFermiChart:
    """Fermi coordinates (q', r~) about Y_2, computed by inverting its normal rays.

    A point at Y_1 height r lies on the ray from q' iff Theta(q', r) = theta,
    where Theta(q', r) = q' + int_{rho(q')}^{r} L / (f sqrt(f^2 - L^2)) dr and
    L = -rho' f(rho) / W is the ray's Clairaut constant. The ray's arclength
    to that height is r~. r grows monotonically along these rays since the
    initial radial speed f/W is positive and r is convex along geodesics.
    """

    def __init__(self, model, subset, *, panels=24, table=2048, chunk=4096):
        check_convexity(subset, model)
        if subset.rho_max >= model.r_max:
            raise InfeasibleError("Y_2 reaches the model horizon")
        self.model = model
        self.subset = subset
        self._u, self._w = _graded_nodes(panels)
        self._chunk = chunk
        q = np.linspace(0.0, TWO_PI, table + 1)
        self._table_q = q
        self._table_shift = self._theta_shift(q, np.full_like(q, model.r_max))
        self.max_shift = float(np.max(np.abs(self._table_shift)))
        self.total_length = float(self._arc(np.array([0.0]), np.array([TWO_PI]), panels=64)[0])

    def clairaut(self, q):
        rho, d1 = self.subset.rho(q), self.subset.drho(q)
        f = self.model.f(rho)
        return rho, -d1 * f / np.sqrt(f * f + d1 * d1)

    def _integrals(self, q, R, want_len):
        q = np.asarray(q, dtype=float)
        R = np.asarray(R, dtype=float)
        rho, L = self.clairaut(q)
        span = R - rho
        r = rho[:, None] + span[:, None] * self._u[None, :]
        f = self.model.f(r)
        L2 = (L * L)[:, None]
        g = np.sqrt(f * f - L2)
        th = (L[:, None] / (f * g)) @ self._w * span
        if not want_len:
            return th, None
        extra = (L2 / (g * (f + g))) @ self._w * span
        return th, span + extra

    def _theta_shift(self, q, R):
        out = np.empty_like(q)
        for i in range(0, len(q), self._chunk):
            out[i:i + self._chunk] = self._integrals(q[i:i + self._chunk], R[i:i + self._chunk],
                                                     False)[0]
        return out

    def ray_point(self, q, R):
        """(theta, r~) reached by the ray from q' at Y_1 height R (vectorized)."""
        q = np.atleast_1d(np.asarray(q, dtype=float))
        R = np.broadcast_to(np.asarray(R, dtype=float), q.shape)
        th, rt = np.empty_like(q), np.empty_like(q)
        for i in range(0, len(q), self._chunk):
            a, b = self._integrals(q[i:i + self._chunk], R[i:i + self._chunk], True)
            th[i:i + self._chunk] = q[i:i + self._chunk] + a
            rt[i:i + self._chunk] = b
        return th, rt

    def _initial_guess(self, theta):
        q, sh = self._table_q, self._table_shift
        gq = np.concatenate([q - TWO_PI, q[1:], q[1:] + TWO_PI])
        gs = np.concatenate([sh, sh[1:], sh[1:]])
        base = np.floor(theta / TWO_PI) * TWO_PI
        return np.interp(theta - base, gq + gs, gq) + base

    def _solve(self, theta, shift_fn, guess_width, max_iter=200):
        """Vectorized Illinois iteration for q' + shift(q') = theta."""
        theta = np.asarray(theta, dtype=float)
        n = theta.size
        everyone = np.arange(n)
        q0 = self._initial_guess(theta)
        lo, hi = q0 - guess_width, q0 + guess_width
        flo = lo + shift_fn(lo, everyone) - theta
        fhi = hi + shift_fn(hi, everyone) - theta
        bad = np.nonzero(~((flo <= 0) & (fhi >= 0)))[0]
        if bad.size:
            w = self.max_shift + 0.1
            lo[bad], hi[bad] = theta[bad] - w, theta[bad] + w
            flo[bad] = lo[bad] + shift_fn(lo[bad], bad) - theta[bad]
            fhi[bad] = hi[bad] + shift_fn(hi[bad], bad) - theta[bad]
            if np.any((flo[bad] > 0) | (fhi[bad] < 0)):
                raise FootPointError("normal rays of Y_2 do not bracket the point")
        x = 0.5 * (lo + hi)
        ftol = 4.0 * np.finfo(float).eps * np.maximum(1.0, np.abs(theta))
        done = (hi - lo) <= ftol
        side = np.zeros(n, dtype=int)
        for _ in range(max_iter):
            a = np.nonzero(~done)[0]
            if a.size == 0:
                return x
            denom = fhi[a] - flo[a]
            safe = denom > 0
            xa = np.where(safe, (lo[a] * fhi[a] - hi[a] * flo[a]) / np.where(safe, denom, 1.0),
                          0.5 * (lo[a] + hi[a]))
            stuck = (xa <= lo[a]) | (xa >= hi[a])
            xa[stuck] = 0.5 * (lo[a] + hi[a])[stuck]
            fx = xa + shift_fn(xa, a) - theta[a]
            x[a] = xa
            done[a] = (np.abs(fx) <= ftol[a]) | ((hi[a] - lo[a]) <= ftol[a])
            left = fx < 0
            ia, ib = a[left], a[~left]
            lo[ia], flo[ia] = xa[left], fx[left]
            fhi[ia[side[ia] == -1]] *= 0.5
            side[ia] = -1
            hi[ib], fhi[ib] = xa[~left], fx[~left]
            flo[ib[side[ib] == 1]] *= 0.5
            side[ib] = 1
        raise FootPointError("foot-point iteration did not converge")

    def fermi_coords(self, theta, r):
        """K_2 Fermi coordinates (q', r~) of points (theta, r) in Y_1 coordinates."""
        theta = np.atleast_1d(np.asarray(theta, dtype=float))
        r = np.broadcast_to(np.asarray(r, dtype=float), theta.shape).copy()
        if np.any(r <= self.subset.rho_max) or np.any(r > self.model.r_max):
            raise OutOfHorizonError("points must lie above Y_2 and below the horizon")

        def shift(q, idx):
            return self._theta_shift(q, r[idx])

        # finite-height shift differs from the tabulated limit by at most the tail
        q = self._solve(theta, shift, 0.05)
        _, rt = self.ray_point(q, r)
        return q, rt

    def boundary_foot(self, theta):
        """Foot parameter q' on Y_2 of the normal ray converging to theta at infinity."""
        theta = np.atleast_1d(np.asarray(theta, dtype=float))
        rmax = self.model.r_max

        def shift(q, idx):
            return self._theta_shift(q, np.full_like(q, rmax))

        return self._solve(theta, shift, 1e-6)

    def _arc(self, q1, q2, panels=8):
        lo, hi = np.minimum(q1, q2), np.maximum(q1, q2)
        edges = np.linspace(0.0, 1.0, panels + 1)
        u = (0.5 * (edges[1:, None] + edges[:-1, None])
             + 0.5 * (edges[1:, None] - edges[:-1, None]) * _GL_X[None, :]).ravel()
        w = (0.5 * (edges[1:, None] - edges[:-1, None]) * _GL_W[None, :]).ravel()
        t = lo[:, None] + (hi - lo)[:, None] * u[None, :]
        rho, d1 = self.subset.rho(t), self.subset.drho(t)
        f = self.model.f(rho)
        return np.sqrt(f * f + d1 * d1) @ w * (hi - lo)

    def arclength(self, q1, q2):
        """Intrinsic distance along Y_2 between foot parameters q1, q2 (vectorized)."""
        q1 = np.atleast_1d(np.asarray(q1, dtype=float))
        q2 = np.atleast_1d(np.asarray(q2, dtype=float))
        d = (q2 - q1) % TWO_PI
        a = self._arc(q1, q1 + d)
        return np.minimum(a, self.total_length - a)


# -- Hoelder certificate ---------------------------------------------------------


@dataclass
class HolderCertificate:
    alpha_target: float
    C_fitted: float
    n_samples: int
    max_violation: float
    T_special: float
    C_n: float
    C_2n: float
    stability: float
    alpha_hat: float
    case_max: dict
    case1_analytic: float
    holdout_max_ratio: float
    holdout_violation: float
    n_excluded: int
    r_range: tuple
    max_offset: float
    passed: bool
    samples: dict = field(default=None, repr=False)

    def to_dict(self):
        doc = asdict(self)
        doc.pop("samples")
        doc["r_range"] = list(self.r_range)
        return doc


def _log_uniform(rng, lo, hi, n):
    return np.exp(rng.uniform(math.log(lo), math.log(hi), n))


def sample_pairs(rng, n, r_lo, r_hi, max_offset, min_offset=1e-9):
    """Stratified pairs: far-apart heights, close heights, and boundary pairs (40/40/20)."""
    n1 = int(round(0.4 * n))
    n3 = int(round(0.2 * n))
    n2 = n - n1 - n3
    th_p = rng.uniform(0.0, TWO_PI, n)
    off = _log_uniform(rng, min_offset, max_offset, n) * rng.choice([-1.0, 1.0], n)
    r_p = np.empty(n)
    r_q = np.empty(n)
    top = r_hi - LN2
    r_p[:n1] = rng.uniform(r_lo, top, n1)
    r_q[:n1] = r_p[:n1] + rng.uniform(LN2, 1.0, n1) * (r_hi - r_p[:n1])
    r_p[n1:n1 + n2] = rng.uniform(r_lo, top, n2)
    dr = _log_uniform(rng, min_offset, LN2, n2)
    dr[rng.uniform(size=n2) < 0.1] = 0.0
    r_q[n1:n1 + n2] = r_p[n1:n1 + n2] + dr
    r_p[n1 + n2:] = r_q[n1 + n2:] = math.inf
    case = np.array(["case1"] * n1 + ["case2"] * n2 + ["boundary"] * n3)
    swap = rng.uniform(size=n) < 0.5
    r_p[swap], r_q[swap] = r_q[swap], r_p[swap].copy()
    return th_p, r_p, th_p + off, r_q, case


def _k2_coords(chart, theta, r):
    q = np.empty_like(theta)
    rt = np.full_like(theta, math.inf)
    fin = np.isfinite(r)
    if np.any(fin):
        q[fin], rt[fin] = chart.fermi_coords(theta[fin], r[fin])
    if np.any(~fin):
        q[~fin] = chart.boundary_foot(theta[~fin])
    return q, rt


def envelope_exponent(x, y, min_count=5):
    """Slope of the upper envelope of log y against log x, from per-decade maxima."""
    lx, ly = np.log10(x), np.log10(y)
    bins = np.floor(lx)
    xs, ys = [], []
    for b in np.unique(bins):
        m = bins == b
        if m.sum() >= min_count:
            j = np.argmax(ly[m])
            xs.append(lx[m][j])
            ys.append(ly[m][j])
    if len(xs) < 2:
        return math.nan
    return float(np.polyfit(xs, ys, 1)[0])


def holder_certify(model, subset2, n_samples=10_000, seed=0, *, alpha=None, constants=None,
                   max_offset=None, r_span=15.0, stability_tol=0.2, keep_samples=True):
    """Fit and check C in d_K2 <= C d_K1^alpha, alpha = a/b by default."""
    a, b = model.profile.a, model.profile.b
    alpha = a / b if alpha is None else float(alpha)
    chart = NormalFermiChart(model, subset2)
    if constants is None:
        c = model_constants(model)
        R = fit_hyperbolic_R(model, c).R
        constants = fit_anderson_schoen(a, b, R, chart_radius=default_chart_radius(model),
                                        seed=seed)
    buffer = double_buffer(0.0, constants, model)
    D = subset2.rho_max + math.pi * model.f0
    T = special_cover_T(constants, D, buffer.T_IB)
    r_lo = T + subset2.rho_max
    r_hi = min(r_lo + r_span, model.r_max - 1.0)
    if r_hi - r_lo < 2.0 * LN2:
        raise InfeasibleError(f"sampling band [{r_lo:.3g}, {r_hi:.3g}] too thin for this horizon")
    if max_offset is None:
        max_offset = constants.chart_radius / model.f0
    main_rng, hold_rng = (np.random.default_rng(s) for s in np.random.SeedSequence(seed).spawn(2))

    def evaluate(rng, n):
        tp, rp, tq, rq, case = sample_pairs(rng, n, r_lo, r_hi, max_offset)
        d1 = dK_base(tp, rp, tq, rq, model.f0)
        qp, rtp = _k2_coords(chart, tp, rp)
        qq, rtq = _k2_coords(chart, tq, rq)
        d2 = np.abs(np.exp(-rtp) - np.exp(-rtq)) + chart.arclength(qp, qq)
        return dict(theta_p=tp, r_p=rp, theta_q=tq, r_q=rq, case=case, dK1=d1, dK2=d2)

    s = evaluate(main_rng, 2 * n_samples)
    keep = s["dK1"] >= 1e-10
    ratio = np.where(keep, s["dK2"] / np.where(keep, s["dK1"], 1.0) ** alpha, 0.0)
    s["ratio"] = ratio
    C_n = float(np.max(ratio[:n_samples]))
    C_2n = float(np.max(ratio))
    stability = C_2n / C_n - 1.0
    C = C_2n
    max_violation = float(np.max((s["dK2"] - C * s["dK1"] ** alpha)[keep]))
    h = evaluate(hold_rng, n_samples)
    hk = h["dK1"] >= 1e-10
    h_ratio = h["dK2"][hk] / h["dK1"][hk] ** alpha
    holdout_violation = float(np.max(h["dK2"][hk] - (1.0 + stability_tol) * C * h["dK1"][hk] ** alpha))
    case_max = {name: float(np.max(ratio[keep & (s["case"] == name)], initial=0.0))
                for name in ("case1", "case2", "boundary")}
    passed = bool(np.isfinite(C) and stability <= stability_tol and max_violation <= 0.0
                  and holdout_violation <= 0.0)
    return HolderCertificate(
        alpha_target=alpha, C_fitted=C, n_samples=int(n_samples), max_violation=max_violation,
        T_special=float(T), C_n=C_n, C_2n=C_2n, stability=float(stability),
        alpha_hat=envelope_exponent(s["dK1"][keep], s["dK2"][keep]),
        case_max=case_max, case1_analytic=case1_factor(a, b, D),
        holdout_max_ratio=float(np.max(h_ratio)), holdout_violation=holdout_violation,
        n_excluded=int(np.sum(~keep)), r_range=(float(r_lo), float(r_hi)),
        max_offset=float(max_offset), passed=passed, samples=s if keep_samples else None)


@dataclass
class ContainmentReport:
    n_pairs: int
    escapes: int
    min_r_margin: float  # min over pairs of (segment min r) - T_OB
    max_angular_extent: float  # max Y-distance from the centre reached
    clamped: int
    rows: list


def buffer_containment(model, params, n_pairs=1000, seed=0, r_span=10.0):
    """Connect random IB pairs by minimizing geodesics and test that each stays in OB.

    Along a geodesic theta moves monotonically (theta' = L / f^2), so the
    angular extent is attained at the endpoints; the radial check uses the
    exact turning radius from the shooting solution.
    """
    from .distance import ClampedSegmentError, FermiPoint, geodesic_bvp_distance

    rng = np.random.default_rng(seed)
    half = params.epsilon / model.f0
    r_hi = min(params.T_IB + r_span, model.r_max)
    rows, escapes, clamped = [], 0, 0
    min_margin, max_extent = math.inf, 0.0
    for _ in range(n_pairs):
        tp, tq = params.center + rng.uniform(-half, half, 2)
        rp, rq = rng.uniform(params.T_IB, r_hi, 2)
        try:
            res = geodesic_bvp_distance(model, FermiPoint(tp, rp), FermiPoint(tq, rq))
        except ClampedSegmentError:
            clamped += 1
            escapes += 1
            continue
        extent = model.f0 * max(abs(tp - params.center), abs(tq - params.center))
        margin = res.r_min - params.T_OB
        out = margin < 0.0 or extent > params.epsilon + params.delta
        escapes += int(out)
        min_margin = min(min_margin, margin)
        max_extent = max(max_extent, extent)
        rows.append((tp, rp, tq, rq, res.length, res.r_min, int(out)))
    return ContainmentReport(n_pairs, escapes, float(min_margin), float(max_extent), clamped, rows)
