"""Rotationally and translation symmetric warped metrics on a solid cylinder.

The metric is  e^{-2u(r)} (dr^2 + f(r)^2 dtheta^2) + e^{2u(r)} dt^2  on
[0, l] x S^1 x R, encoded as a pair of piecewise functions (u, f).  Its
scalar curvature has the closed form

    R(r) = 2 e^{2u} ( -f''/f - (u')^2 ),

which this module evaluates, scans, and cross-checks against volume and
length functionals.  At a regular axis (f(0)=0, f'(0)=1, u'(0)=0) the
formula has a removable singularity; R(0) is evaluated as a one-sided limit
slightly inside the first segment, where f(r) = r + O(r^3) makes f''/f
finite.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Tuple

import numpy as np

from .errors import DomainError, MalformedProfileError
from .piecewise import ExprSegment, PiecewiseC2Function
from .quadrature import integrate_with_breakpoints

__all__ = [
    "WarpedProfile",
    "CurvatureReport",
    "scalar_curvature",
    "scalar_curvature_samples",
    "curvature_scan",
    "hyperbolic_profile",
    "product_profile",
    "measure_profile",
    "sqrt_det_metric",
    "metric_matrix",
]

_AXIS_TOL = 1e-8


@dataclass
class WarpedProfile:
    """A (u, f) pair on [0, l] plus axis metadata.

    axis_regular means r=0 is a smooth axis of the metric: f(0)=0, f'(0)=1
    and u'(0)=0, certified numerically at construction.
    """

    u: PiecewiseC2Function
    f: PiecewiseC2Function
    axis_regular: bool = True
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        ua, ub = self.u.domain
        fa, fb = self.f.domain
        tol = 1e-10 * max(1.0, abs(ub))
        if abs(ua - fa) > tol or abs(ub - fb) > tol:
            raise MalformedProfileError("u and f must share one domain")
        if abs(ua) > tol:
            raise MalformedProfileError("profile domain must start at 0")
        self.length = float(ub)
        if self.length <= 0:
            raise MalformedProfileError("profile length must be positive")
        self._check_positivity()
        if self.axis_regular:
            f0 = float(self.f(0.0))
            fp0 = float(self.f.d1(0.0))
            up0 = float(self.u.d1(0.0))
            if abs(f0) > _AXIS_TOL or abs(fp0 - 1.0) > _AXIS_TOL or abs(up0) > _AXIS_TOL:
                raise MalformedProfileError(
                    f"axis not regular: f(0)={f0:.3e}, f'(0)={fp0}, u'(0)={up0:.3e}"
                )

    def _check_positivity(self):
        lo = 1e-9 * self.length if self.axis_regular else 0.0
        rs = np.linspace(lo, self.length, 1025)
        rs = np.unique(np.concatenate([rs, self.f.breakpoints()]))
        rs = rs[rs > 0]
        vals = self.f(rs)
        if np.any(vals <= 0):
            bad = float(rs[np.argmin(vals)])
            raise MalformedProfileError(f"f must be positive on (0, l]; f({bad}) <= 0")

    def breakpoints(self) -> np.ndarray:
        return np.unique(np.concatenate([self.u.breakpoints(), self.f.breakpoints()]))

    def to_dict(self):
        return {
            "axis_regular": self.axis_regular,
            "u": self.u.to_dict(),
            "f": self.f.to_dict(),
            "meta": self.meta,
        }

    @classmethod
    def from_dict(cls, d):
        return cls(
            u=PiecewiseC2Function.from_dict(d["u"]),
            f=PiecewiseC2Function.from_dict(d["f"]),
            axis_regular=d["axis_regular"],
            meta=dict(d.get("meta", {})),
        )


@dataclass
class CurvatureReport:
    r: np.ndarray
    R: np.ndarray
    min_R: float
    argmin_r: float
    sample_count: int

    def to_summary(self):
        return {
            "min_R": self.min_R,
            "argmin_r": self.argmin_r,
            "sample_count": self.sample_count,
        }


def _axis_eval_radius(profile: WarpedProfile) -> float:
    return 1e-6 * profile.length


def scalar_curvature_samples(profile: WarpedProfile, rs) -> np.ndarray:
    rs = np.asarray(rs, dtype=float)
    if np.any(rs < -1e-12) or np.any(rs > profile.length * (1 + 1e-12)):
        raise DomainError("curvature requested outside [0, l]")
    rv = rs.copy()
    if profile.axis_regular:
        eps = _axis_eval_radius(profile)
        rv[rv < eps] = eps
    else:
        floor = float(profile.meta.get("curvature_scan_floor", 0.0))
        if np.any(rv < floor):
            raise MalformedProfileError(
                "curvature below the profile's scan floor needs a regular axis "
                "(this profile's axis germ lies below representable radii)"
            )
        if np.any(rv <= 0.0):
            raise MalformedProfileError(
                "curvature at r=0 needs a regular axis (removable singularity)"
            )
    f = profile.f(rv)
    if np.any(f <= 0):
        raise MalformedProfileError("f <= 0 at an interior point")
    d2f = profile.f.d2(rv)
    u = profile.u(rv)
    du = profile.u.d1(rv)
    return 2.0 * np.exp(2.0 * u) * (-d2f / f - du * du)


def scalar_curvature(profile: WarpedProfile, r: float) -> float:
    """Closed-form scalar curvature at radius r (limit value on the axis)."""
    return float(scalar_curvature_samples(profile, np.array([float(r)]))[0])


def curvature_scan(profile: WarpedProfile, resolution: int = 4096,
                   junction_window: int = 64) -> CurvatureReport:
    """Sample R on a uniform grid plus all breakpoints.

    Junctions are where curvature dips, so each breakpoint also gets a dense
    local window (junction_window points per side, geometrically spaced).
    Profiles without a regular axis may declare a scan floor in their meta
    (the curvature below it is constant by construction and is recorded
    separately as meta["axis_limit_R"]).
    """
    lo = 0.0
    if not profile.axis_regular:
        lo = float(profile.meta.get("curvature_scan_floor", 0.0))
    pts = [np.linspace(lo, profile.length, resolution)]
    breaks = profile.breakpoints()
    breaks = breaks[breaks >= lo]
    pts.append(breaks)
    for brk in breaks:
        for sgn in (-1.0, 1.0):
            room = (profile.length - brk) if sgn > 0 else brk
            if room <= 0:
                continue
            w = min(0.25 * room, 0.05 * profile.length)
            if w <= 0:
                continue
            offs = w * np.geomspace(1e-6, 1.0, junction_window)
            pts.append(np.clip(brk + sgn * offs, lo, profile.length))
    rs = np.unique(np.concatenate(pts))
    Rs = scalar_curvature_samples(profile, rs)
    i = int(np.argmin(Rs))
    return CurvatureReport(
        r=rs, R=Rs, min_R=float(Rs[i]), argmin_r=float(rs[i]), sample_count=rs.size
    )


def hyperbolic_profile(rho_max: float) -> WarpedProfile:
    """Constant-curvature -6 metric about a geodesic line, in the radial
    coordinate rho = sinh(distance):  e^{2u} = 1+rho^2,  f = rho*sqrt(1+rho^2)."""
    if not rho_max > 0:
        raise ValueError("rho_max must be positive")
    u = PiecewiseC2Function([ExprSegment(0.0, rho_max, "log_sqrt1p_sq")])
    f = PiecewiseC2Function([ExprSegment(0.0, rho_max, "x_sqrt1p_sq")])
    return WarpedProfile(u=u, f=f, axis_regular=True, meta={"family": "hyperbolic"})


def product_profile(k: float, u_const: float, r_max: float) -> WarpedProfile:
    """Product of a curvature -k plane with a line, conformally shifted by
    u_const:  u = u_const,  f = (e^{u_const}/sqrt(k)) sinh(sqrt(k) e^{-u_const} r).

    The shift is a pure coordinate rescale (r and t absorb it), so the scalar
    curvature is exactly -2*k for every u_const, and the axis stays regular
    because the rescale cancels in f'(0)."""
    if not k > 0:
        raise ValueError("k must be positive")
    if not r_max > 0:
        raise ValueError("r_max must be positive")
    ec = math.exp(u_const)
    u = PiecewiseC2Function([ExprSegment(0.0, r_max, "zero", val_offset=u_const)])
    f = PiecewiseC2Function(
        [
            ExprSegment(
                0.0,
                r_max,
                "sinh",
                val_scale=ec / math.sqrt(k),
                arg_scale=math.sqrt(k) / ec,
            )
        ]
    )
    return WarpedProfile(u=u, f=f, axis_regular=True, meta={"family": "product", "k": k})


def sqrt_det_metric(profile: WarpedProfile, r) -> np.ndarray:
    """Volume form density sqrt(det g) = e^{-u} f."""
    r = np.asarray(r, dtype=float)
    return np.exp(-profile.u(r)) * profile.f(r)


def metric_matrix(profile: WarpedProfile, r: float) -> np.ndarray:
    """3x3 metric components in coordinates (r, theta, t)."""
    u = float(profile.u(r))
    f = float(profile.f(r))
    return np.diag([math.exp(-2 * u), math.exp(-2 * u) * f * f, math.exp(2 * u)])


def measure_profile(profile: WarpedProfile, abs_tol: float = 1e-8) -> Tuple[float, float]:
    """(radial length, volume of D^2 x [0,1]).

    radial length = int_0^l e^{-u} dr; the volume uses sqrt(det g) = e^{-u} f,
    so vol = 2*pi*int_0^l e^{-u} f dr.  Adaptive Simpson split at breakpoints;
    non-convergence raises, never truncates silently.
    """
    breaks = profile.breakpoints()
    radial = integrate_with_breakpoints(
        lambda r: math.exp(-profile.u(r)), 0.0, profile.length, breaks, abs_tol
    )
    vol = 2.0 * math.pi * integrate_with_breakpoints(
        lambda r: math.exp(-profile.u(r)) * profile.f(r),
        0.0,
        profile.length,
        breaks,
        abs_tol / (2.0 * math.pi),
    )
    return radial, vol
