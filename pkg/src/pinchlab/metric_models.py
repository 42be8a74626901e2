"""Rotationally symmetric model surfaces with pinched negative curvature.

A model is the region r >= 0 of the warped product

    g = dr^2 + f(r)^2 dtheta^2,        f'' = k(r) f,

glued along the circle r = 0 (the boundary Y of a convex core). The
sectional curvature at height r is -k(r), so prescribing a profile with
a^2 <= k <= b^2 realizes the pinching band directly.

The warp is integrated once (DOP853 on breakpoint-aligned segments) and
resampled onto a fine node grid. Between nodes f and f' are each carried by
quintic Hermite interpolants built from (f, f', f'') and (f', f'', f''')
respectively, where the higher derivatives come from the ODE itself:
f'' = k f and f''' = k' f + k f'. Evaluation is therefore cheap in both
scalar and vectorized form, which the geodesic integrators rely on.
"""

from __future__ import annotations

import bisect
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.integrate import solve_ivp

from .errors import (
    ConfigError,
    IntegrationError,
    OutOfHorizonError,
    PinchingViolationError,
)

PROFILE_KINDS = ("constant", "cosine", "piecewise")

# Default ODE tolerances for everything that touches the warp.
RTOL = 1e-9
ATOL = 1e-12


@dataclass(frozen=True)
class PinchingProfile:
    """Curvature magnitude profile k(r), with sec = -k(r) on r >= 0.

    ``params`` depends on ``kind``:

    * constant:  (value,)
    * cosine:    (mean, amplitude, frequency), k = mean + amplitude cos(frequency r)
    * piecewise: (breakpoints, values), continuous piecewise-linear through
      the given nodes, held constant outside them.
    """

    a: float
    b: float
    kind: str
    params: tuple

    def __post_init__(self):
        if self.kind not in PROFILE_KINDS:
            raise ConfigError(f"unknown profile kind {self.kind!r}")
        if not (0.0 < self.a <= 1.0 <= self.b):
            raise ConfigError(f"need 0 < a <= 1 <= b, got a={self.a}, b={self.b}")
        if self.kind == "piecewise":
            xs, ys = self.params
            if len(xs) != len(ys) or len(xs) < 1:
                raise ConfigError("piecewise profile needs matching breakpoints/values")
            if any(x1 <= x0 for x0, x1 in zip(xs, xs[1:])):
                raise ConfigError("piecewise breakpoints must be strictly increasing")

    # -- constructors -----------------------------------------------------

    @classmethod
    def constant(cls, value, a=None, b=None):
        lam = math.sqrt(value)
        return cls(a=min(lam, 1.0) if a is None else a,
                   b=max(lam, 1.0) if b is None else b,
                   kind="constant", params=(float(value),))

    @classmethod
    def cosine(cls, a, b, mean, amplitude, frequency=1.0):
        return cls(a=a, b=b, kind="cosine",
                   params=(float(mean), float(amplitude), float(frequency)))

    @classmethod
    def piecewise(cls, a, b, breakpoints: Sequence[float], values: Sequence[float]):
        return cls(a=a, b=b, kind="piecewise",
                   params=(tuple(float(x) for x in breakpoints),
                           tuple(float(v) for v in values)))

    # -- evaluation -------------------------------------------------------

    @property
    def alpha(self):
        """Pinching ratio a/b (the Hoelder exponent)."""
        return self.a / self.b

    @property
    def breakpoints(self):
        if self.kind == "piecewise":
            return self.params[0]
        return ()

    def k(self, r):
        """Curvature magnitude at radius r (scalar or array)."""
        if self.kind == "constant":
            value = self.params[0]
            return value + 0.0 * np.asarray(r, dtype=float) if np.ndim(r) else value
        if self.kind == "cosine":
            mean, amp, freq = self.params
            if np.ndim(r):
                return mean + amp * np.cos(freq * np.asarray(r, dtype=float))
            return mean + amp * math.cos(freq * r)
        xs, ys = self.params
        out = np.interp(r, xs, ys)
        return out if np.ndim(r) else float(out)

    def dk(self, r, side=1):
        """Derivative of k. For piecewise profiles ``side`` picks the one-sided slope."""
        if self.kind == "constant":
            return 0.0 * np.asarray(r, dtype=float) if np.ndim(r) else 0.0
        if self.kind == "cosine":
            mean, amp, freq = self.params
            if np.ndim(r):
                return -amp * freq * np.sin(freq * np.asarray(r, dtype=float))
            return -amp * freq * math.sin(freq * r)
        xs, ys = self.params
        slopes = [0.0] + [(y1 - y0) / (x1 - x0)
                          for x0, x1, y0, y1 in zip(xs, xs[1:], ys, ys[1:])] + [0.0]

        def one(x):
            if side > 0:
                return slopes[bisect.bisect_right(xs, x)]
            return slopes[bisect.bisect_left(xs, x)]

        if np.ndim(r):
            return np.array([one(float(x)) for x in np.ravel(r)]).reshape(np.shape(r))
        return one(float(r))

    def validate(self, r_max, n=20001, tol=1e-12):
        """Check a^2 <= k <= b^2 on a dense grid (plus breakpoints)."""
        grid = np.union1d(np.linspace(0.0, r_max, n),
                          [x for x in self.breakpoints if 0.0 <= x <= r_max])
        ks = self.k(grid)
        lo, hi = self.a ** 2, self.b ** 2
        bad = (ks < lo - tol) | (ks > hi + tol)
        if np.any(bad):
            i = int(np.argmax(bad))
            raise PinchingViolationError(
                f"k({grid[i]:.6g}) = {ks[i]:.6g} outside [{lo:.6g}, {hi:.6g}]")
        return float(ks.min()), float(ks.max())

    # -- serialization ----------------------------------------------------

    def to_dict(self):
        if self.kind == "constant":
            prof = {"kind": "constant", "value": self.params[0]}
        elif self.kind == "cosine":
            mean, amp, freq = self.params
            prof = {"kind": "cosine", "mean": mean, "amplitude": amp, "frequency": freq}
        else:
            prof = {"kind": "piecewise", "breakpoints": list(self.params[0]),
                    "values": list(self.params[1])}
        return {"a": self.a, "b": self.b, "profile": prof}

    @classmethod
    def from_dict(cls, doc):
        try:
            a, b, prof = float(doc["a"]), float(doc["b"]), doc["profile"]
            kind = prof["kind"]
            if kind == "constant":
                return cls(a=a, b=b, kind="constant", params=(float(prof["value"]),))
            if kind == "cosine":
                return cls.cosine(a, b, prof["mean"], prof["amplitude"],
                                  prof.get("frequency", 1.0))
            if kind == "piecewise":
                return cls.piecewise(a, b, prof["breakpoints"], prof["values"])
        except (KeyError, TypeError, ValueError) as exc:
            if isinstance(exc, ConfigError):
                raise
            raise ConfigError(f"bad profile document: {exc}") from exc
        raise ConfigError(f"unknown profile kind {kind!r}")


# Quintic Hermite basis on t in [0, 1]: values, and d/dt.
def _qh_basis(t):
    t2 = t * t
    t3 = t2 * t
    t4 = t3 * t
    t5 = t4 * t
    return (1 - 10 * t3 + 15 * t4 - 6 * t5,
            t - 6 * t3 + 8 * t4 - 3 * t5,
            0.5 * (t2 - 3 * t3 + 3 * t4 - t5),
            10 * t3 - 15 * t4 + 6 * t5,
            -4 * t3 + 7 * t4 - 3 * t5,
            0.5 * (t3 - 2 * t4 + t5))


def _qh_dbasis(t):
    t2 = t * t
    t3 = t2 * t
    t4 = t3 * t
    return (-30 * t2 + 60 * t3 - 30 * t4,
            1 - 18 * t2 + 32 * t3 - 15 * t4,
            0.5 * (2 * t - 9 * t2 + 12 * t3 - 5 * t4),
            30 * t2 - 60 * t3 + 30 * t4,
            -12 * t2 + 28 * t3 - 15 * t4,
            0.5 * (3 * t2 - 8 * t3 + 5 * t4))


class WarpedModel:
    """The surface dr^2 + f(r)^2 dtheta^2 on 0 <= r <= r_max.

    Immutable after construction; build instances with :func:`solve_warp`.
    The circle Y = {r = 0} has length 2 pi f0, and arclength along it is
    y = f0 * theta, so Y-distances are ``f0`` times angular separations.
    """

    dimension = 2

    def __init__(self, profile, f0, f0_prime, r_max, nodes, f_cells, fp_cells):
        self.profile = profile
        self.f0 = float(f0)
        self.f0_prime = float(f0_prime)
        self.r_max = float(r_max)
        self._nodes = nodes
        self._nodes_list = nodes.tolist()
        self._h = np.diff(nodes)
        self._h_list = self._h.tolist()
        # (ncell, 6) coefficient rows: y0, y0', y0'', y1, y1', y1''
        self._f_cells = f_cells
        self._fp_cells = fp_cells
        self._f_rows = f_cells.tolist()
        self._fp_rows = fp_cells.tolist()
        for arr in (nodes, f_cells, fp_cells, self._h):
            arr.setflags(write=False)

    def __repr__(self):
        return (f"{type(self).__name__}(kind={self.profile.kind!r}, a={self.profile.a}, "
                f"b={self.profile.b}, f0={self.f0}, f0_prime={self.f0_prime}, "
                f"r_max={self.r_max})")

    # -- warp access ------------------------------------------------------

    @property
    def nodes(self):
        return self._nodes

    @property
    def y_scale(self):
        """Arclength of Y per radian."""
        return self.f0

    def _check(self, r):
        if np.ndim(r):
            r = np.asarray(r, dtype=float)
            if np.any(r < -1e-12) or np.any(r > self.r_max + 1e-12):
                raise OutOfHorizonError(f"radius outside [0, {self.r_max}]")
        elif not (-1e-12 <= r <= self.r_max + 1e-12):
            raise OutOfHorizonError(f"radius {r} outside [0, {self.r_max}]")

    def _cell_scalar(self, r):
        i = bisect.bisect_right(self._nodes_list, r) - 1
        return min(max(i, 0), len(self._h_list) - 1)

    def warp(self, r):
        """Return (f(r), f'(r)) for scalar r (fast path, no range check)."""
        i = self._cell_scalar(r)
        h = self._h_list[i]
        t = (r - self._nodes_list[i]) / h
        b0, b1, b2, b3, b4, b5 = _qh_basis(t)
        c = self._f_rows[i]
        d = self._fp_rows[i]
        hh = h * h
        f = b0 * c[0] + h * b1 * c[1] + hh * b2 * c[2] + b3 * c[3] + h * b4 * c[4] + hh * b5 * c[5]
        fp = b0 * d[0] + h * b1 * d[1] + hh * b2 * d[2] + b3 * d[3] + h * b4 * d[4] + hh * b5 * d[5]
        return f, fp

    def _eval_array(self, r, rows, deriv=False):
        r = np.asarray(r, dtype=float)
        idx = np.clip(np.searchsorted(self._nodes, r, side="right") - 1, 0, len(self._h) - 1)
        h = self._h[idx]
        t = (r - self._nodes[idx]) / h
        basis = _qh_dbasis(t) if deriv else _qh_basis(t)
        c = rows[idx]
        scale = (1.0, h, h * h, 1.0, h, h * h)
        out = sum(bk * s * c[..., j] for j, (bk, s) in enumerate(zip(basis, scale)))
        return out / h if deriv else out

    def f(self, r):
        self._check(r)
        if np.ndim(r):
            return self._eval_array(r, self._f_cells)
        return self.warp(float(r))[0]

    def f_prime(self, r):
        self._check(r)
        if np.ndim(r):
            return self._eval_array(r, self._fp_cells)
        return self.warp(float(r))[1]

    def f_second(self, r):
        """f'' recovered from the ODE identity f'' = k f."""
        return self.profile.k(r) * self.f(r)

    def curvature_residual(self):
        """max |f''/f - k| at cell midpoints, with f'' from differentiating the f' interpolant."""
        mids = 0.5 * (self._nodes[1:] + self._nodes[:-1])
        fpp = self._eval_array(mids, self._fp_cells, deriv=True)
        f = self._eval_array(mids, self._f_cells)
        return float(np.max(np.abs(fpp / f - self.profile.k(mids))))


class HyperbolicModel(WarpedModel):
    """Constant curvature -lam^2 realized as f(r) = sinh(lam (r + r0)) / lam.

    In these coordinates the surface is the hyperbolic plane in geodesic polar
    coordinates about a pole at r = -r0, so rho = r + r0 is the polar radius.
    """

    lam: float
    r0: float

    def closed_form_f(self, r):
        return np.sinh(self.lam * (np.asarray(r) + self.r0)) / self.lam


def _cell_rows(nodes, y, yp, ypp):
    return np.column_stack([y[:-1], yp[:-1], ypp[:-1], y[1:], yp[1:], ypp[1:]])


def solve_warp(profile: PinchingProfile, f0, f0_prime, r_max, *, h_max=0.01,
               rtol=1e-13, atol=1e-15, cls=WarpedModel):
    """Integrate f'' = k(r) f from (f0, f0_prime) on [0, r_max].

    Integration restarts at every profile breakpoint and node cells never
    straddle one, so piecewise profiles keep full interpolation order.
    """
    if not f0 > 0:
        raise ConfigError("f0 must be positive")
    if f0_prime < 0:
        raise ConfigError("f0_prime must be nonnegative")
    if not r_max > 0:
        raise ConfigError("r_max must be positive")
    profile.validate(r_max)

    cuts = [0.0] + [x for x in profile.breakpoints if 0.0 < x < r_max] + [float(r_max)]

    def rhs(r, y):
        return [y[1], profile.k(r) * y[0]]

    nodes_all, f_all, fp_all, fpp_all, fppp_all = [], [], [], [], []
    f_cells, fp_cells = [], []
    state = np.array([f0, f0_prime], dtype=float)
    for lo, hi in zip(cuts, cuts[1:]):
        sol = solve_ivp(rhs, (lo, hi), state, method="DOP853", rtol=rtol,
                        atol=atol, dense_output=True)
        if not sol.success:
            raise IntegrationError(f"warp integration failed on [{lo}, {hi}]: {sol.message}")
        n = max(2, int(math.ceil((hi - lo) / h_max)) + 1)
        xs = np.linspace(lo, hi, n)
        ys = sol.sol(xs)
        ys[:, 0] = state
        f, fp = ys
        k = profile.k(xs)
        dk_right = profile.dk(xs[:-1], side=1)
        dk_left = profile.dk(xs[1:], side=-1)
        fpp = k * f
        # one-sided third derivatives so kinks in k stay at cell edges
        fppp_l = dk_right * f[:-1] + k[:-1] * fp[:-1]
        fppp_r = dk_left * f[1:] + k[1:] * fp[1:]
        f_cells.append(_cell_rows(xs, f, fp, fpp))
        fp_cells.append(np.column_stack([fp[:-1], fpp[:-1], fppp_l,
                                         fp[1:], fpp[1:], fppp_r]))
        nodes_all.append(xs if not nodes_all else xs[1:])
        state = ys[:, -1].copy()
        if not np.all(np.isfinite(state)):
            raise IntegrationError("non-finite warp state")

    nodes = np.concatenate(nodes_all)
    model = cls.__new__(cls)
    WarpedModel.__init__(model, profile, f0, f0_prime, r_max, nodes,
                         np.vstack(f_cells), np.vstack(fp_cells))
    return model


def hyperbolic_model(lam, r0=1.0, r_max=30.0, **kwargs):
    """Constant curvature -lam^2 model with warp sinh(lam (r + r0)) / lam."""
    if not lam > 0 or not r0 > 0:
        raise ConfigError("need lam > 0 and r0 > 0")
    profile = PinchingProfile.constant(lam * lam)
    model = solve_warp(profile, math.sinh(lam * r0) / lam, math.cosh(lam * r0), r_max,
                       cls=HyperbolicModel, **kwargs)
    model.lam = float(lam)
    model.r0 = float(r0)
    return model


def model_from_dict(doc):
    """Build a model from the JSON model document."""
    profile = PinchingProfile.from_dict(doc)
    try:
        return solve_warp(profile, float(doc.get("f0", 1.0)), float(doc.get("f0_prime", 0.0)),
                          float(doc.get("r_max", 30.0)))
    except (TypeError, ValueError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(f"bad model document: {exc}") from exc


def model_to_dict(model):
    doc = model.profile.to_dict()
    doc.update(f0=model.f0, f0_prime=model.f0_prime, r_max=model.r_max)
    return doc


# -- differential-geometric primitives ------------------------------------


@dataclass(frozen=True)
class MetricComponents:
    g_rr: float
    g_rtheta: float
    g_thetatheta: float

    @property
    def matrix(self):
        return np.array([[self.g_rr, self.g_rtheta], [self.g_rtheta, self.g_thetatheta]])


@dataclass(frozen=True)
class Christoffel:
    """Nonzero symbols of dr^2 + f^2 dtheta^2; all others vanish."""

    r_thetatheta: float
    theta_rtheta: float


def metric_at(model, y, r):
    f = model.f(r)
    return MetricComponents(1.0, 0.0, f * f)


def christoffel_at(model, r):
    model._check(r)
    f, fp = model.warp(float(r))
    return Christoffel(-f * fp, fp / f)


def sectional_curvature_at(model, r):
    model._check(r)
    return -model.profile.k(float(r))


def shape_operator_at(model, r):
    """Shape operator f'/f of the level circle {r = const} (outward convexity)."""
    model._check(r)
    f, fp = model.warp(float(r))
    return fp / f


# -- shipped profiles ---------------------------------------------------------
# Each entry: profile, warp initial data, horizon, and the shape value Lambda
# used when checking Riccati containment from several initial values.

SHIPPED_PROFILES = {
    "const-1": dict(profile=PinchingProfile.constant(1.0), f0=1.0, f0_prime=0.0,
                    r_max=40.0, Lambda=2.0),
    "cosine-0.5-2": dict(profile=PinchingProfile.cosine(0.5, 2.0, 2.125, 1.875, 1.0),
                         f0=1.0, f0_prime=1.0, r_max=40.0, Lambda=3.0),
    "cosine-0.5-2-slow": dict(profile=PinchingProfile.cosine(0.5, 2.0, 2.125, 1.875, 0.3),
                              f0=1.0, f0_prime=1.0, r_max=40.0, Lambda=3.0),
    "piecewise-0.5-2": dict(profile=PinchingProfile.piecewise(0.5, 2.0, [0.0, 3.0, 6.0],
                                                              [4.0, 0.25, 1.0]),
                            f0=1.0, f0_prime=0.5, r_max=40.0, Lambda=3.0),
    "cosine-0.8-1.25": dict(profile=PinchingProfile.cosine(0.8, 1.25, 1.10125, 0.46125, 1.0),
                            f0=1.0, f0_prime=1.0, r_max=40.0, Lambda=1.0),
}


def shipped_model(name, **kwargs):
    entry = SHIPPED_PROFILES[name]
    return solve_warp(entry["profile"], entry["f0"], entry["f0_prime"], entry["r_max"], **kwargs)
