"""Constructive smoothing steps used when gluing warped-product pieces.

Two operations, both preserving a lower bound on the curvature functional

    Q(u, f) = e^{2u} ( -f''/f - (u')^2 )        (= R/2 for the metric)

within stated losses:

* flatten_u: replace u by a function that is constant near the left end of
  an interval and equal to u past a transition of width mu, losing at most
  the factor 1/(1 - sqrt(mu)) in the curvature floor.  The transition is
  u(r) = v(s+mu) + int_{s+mu}^r eta^q v', with eta a C^inf step that
  vanishes on [s, s+mu/2] and a power q found by doubling until the
  transition mass is small enough.

* mollify_f: smooth a positive C^{1,1} function (one interior kink with
  matched first derivatives) to C^inf by blending its second derivative
  with a kernel average inside (kink-mu, kink+mu), then reintegrating with
  two bump-shaped corrections so value and slope rejoin the original
  exactly at the window ends.  Costs at most mu in the curvature floor and
  in the C^1 norm.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Tuple

import numpy as np
from scipy.interpolate import CubicSpline

from .errors import SmoothingError
from .piecewise import (
    ExprSegment,
    PiecewiseC2Function,
    SplineSegment,
    bump,
    smoothstep,
)
from .quadrature import integrate_with_breakpoints

__all__ = ["SmoothingConfig", "flatten_u", "mollify_f", "curvature_functional",
           "functional_floor"]

_D1_KINK_TOL = 1e-9


def curvature_functional(u: PiecewiseC2Function, f: PiecewiseC2Function, rs):
    """Q(u, f) = e^{2u}(-f''/f - (u')^2) sampled at rs."""
    rs = np.asarray(rs, dtype=float)
    fv = f(rs)
    if np.any(fv <= 0):
        raise SmoothingError("curvature functional needs f > 0")
    return np.exp(2.0 * u(rs)) * (-f.d2(rs) / fv - u.d1(rs) ** 2)


def functional_floor(u, f, a, b, n=4096, exclude=()):
    """(min, argmin) of Q over a dense grid on [a, b] plus breakpoints."""
    pts = [np.linspace(a, b, n)]
    for g in (u, f):
        brk = g.breakpoints()
        brk = brk[(brk > a) & (brk < b)]
        pts.append(brk)
        for x in brk:
            w = min(x - a, b - x, 0.02 * (b - a))
            if w > 0:
                pts.append(x + w * np.geomspace(1e-6, 1.0, 32))
                pts.append(x - w * np.geomspace(1e-6, 1.0, 32))
    rs = np.unique(np.concatenate(pts))
    rs = rs[(rs >= a) & (rs <= b)]
    for lo, hi in exclude:
        rs = rs[(rs < lo) | (rs > hi)]
    q = curvature_functional(u, f, rs)
    i = int(np.argmin(q))
    return float(q[i]), float(rs[i])


@dataclass
class SmoothingConfig:
    lam: float
    mu_requested: float
    mu: float                       # realized after internal shrinking
    q: float
    interval: Tuple[float, float]
    eta_support: Tuple[float, float]
    measured: dict = field(default_factory=dict)


def _sup_abs_d1(g, a, b, n=4096):
    rs = np.unique(np.concatenate([np.linspace(a, b, n), g.breakpoints()]))
    rs = rs[(rs >= a) & (rs <= b)]
    return float(np.max(np.abs(g.d1(rs))))


def flatten_u(v: PiecewiseC2Function, f: PiecewiseC2Function,
              interval: Tuple[float, float], lam: float, mu: float,
              mu_bar_cap: Optional[float] = None,
              n_transition: int = 4097):
    """Flatten v near the left end of `interval`, preserving the curvature floor.

    Returns (u, config) with u defined on [s, t]: u = v on [s+mu, t], u
    constant on [s, s+mu/2], |u - v(s+mu)| <= mu on [s, s+mu], and
    Q(u, f) >= -lam/(1-sqrt(mu)).  mu shrinks internally when the C^0
    closeness precondition (or the optional mu_bar cap on e^{u(s)-v(s)}-1)
    demands it; the realized mu is in the returned config.
    """
    s, t = float(interval[0]), float(interval[1])
    if not t > s:
        raise SmoothingError("empty flattening interval")
    if not (0.0 < mu <= min(0.25 * (t - s), 1.0)):
        raise SmoothingError("need 0 < mu <= min((t-s)/4, 1)")
    v = v.restrict(s, t)
    f_loc = f.restrict(s, t)

    floor0, arg0 = functional_floor(v, f_loc, s, t)
    if floor0 < -lam * (1 + 1e-12) - 1e-12:
        raise SmoothingError(
            f"hypothesis fails: Q(v, f) = {floor0:.6g} < -lam = {-lam:.6g} at r={arg0:.6g}"
        )

    V = _sup_abs_d1(v, s, t)
    if V == 0.0:
        u = v
        cfg = SmoothingConfig(lam, mu, mu, 1.0, (s, t), (s + mu / 2, s + mu),
                              measured={"floor": floor0, "mu_bar": 0.0,
                                        "const_value": float(v(s)), "sup_dev": 0.0})
        return u, cfg

    mu_req = mu
    for _ in range(60):
        u, cfg = _flatten_once(v, f_loc, s, t, lam, mu, V, n_transition)
        shrink = False
        if mu_bar_cap is not None and cfg.measured["mu_bar"] >= mu_bar_cap:
            shrink = True
        if shrink:
            mu *= 0.5
        else:
            cfg.mu_requested = mu_req
            return u, cfg
    raise SmoothingError("could not realize the requested flattening gap cap")


def _flatten_once(v, f_loc, s, t, lam, mu, V, n_transition):
    # precondition of the construction: v deviates from v(s+mu) by at most
    # sqrt(mu)/4 on [s, s+mu]; shrink mu until it holds
    for _ in range(200):
        rs = np.linspace(s, s + mu, 1024)
        dev = float(np.max(np.abs(v(rs) - v(s + mu))))
        if dev <= 0.25 * math.sqrt(mu):
            break
        mu *= 0.5
    else:
        raise SmoothingError("could not satisfy the C^0 closeness precondition")

    lo = s + 0.5 * mu
    hi = s + mu
    width = hi - lo

    def eta(r):
        return smoothstep((np.asarray(r, dtype=float) - lo) / width)

    # smallest power-of-two q with int_s^{s+mu} eta^q <= mu / (4 sup|v'|)
    target = mu / (4.0 * V)
    q = 1.0
    while True:
        mass = integrate_with_breakpoints(
            lambda r: float(eta(r) ** q), lo, hi, (), 1e-12 * max(mu, 1e-6)
        )
        if mass <= target:
            break
        q *= 2.0
        if q > 2.0 ** 64:
            raise SmoothingError("no finite q found: eta too flat for the target mass")

    grid = np.linspace(lo, hi, n_transition)
    w = eta(grid) ** q * v.d1(grid)
    W = CubicSpline(grid, w).antiderivative()
    total = float(W(hi))
    vals = v(hi) - (total - W(grid))
    c = float(v(hi) - total)

    seg_const = ExprSegment(s, lo, "zero", val_offset=c)
    seg_trans = SplineSegment(lo, hi, grid, vals, d1a=0.0, d1b=float(v.d1(hi)))
    tail = v.restrict(hi, t)
    # value and slope are exact at both transition ends (clamped with the
    # analytic data); second-derivative continuity of the underlying C^inf
    # construction sits below what the sampled spline can certify, so the
    # junctions carry the C^{1,1} certificate (u'' never enters curvature)
    u = PiecewiseC2Function(
        [seg_const, seg_trans] + tail.segments,
        ["C1,1", "C1,1"] + tail.junctions,
    )

    # machine-check the three conclusions
    rs_head = np.linspace(s, hi, 2048)
    sup_dev = float(np.max(np.abs(u(rs_head) - v(hi))))
    if sup_dev > mu * (1 + 1e-9):
        raise SmoothingError(f"flattening overshoot: sup |u - v(s+mu)| = {sup_dev} > mu")
    rs_tail = np.linspace(hi, t, 1024)
    eq_dev = float(np.max(np.abs(u(rs_tail) - v(rs_tail))))
    if eq_dev > 1e-12 * max(1.0, abs(float(v(t)))):
        raise SmoothingError("u != v past the transition")
    allowed = -lam / (1.0 - math.sqrt(mu))
    floor, argmin = functional_floor(u, f_loc, s, t)
    if floor < allowed * (1 + 1e-9):
        raise SmoothingError(
            f"curvature floor violated: {floor:.9g} < {allowed:.9g} at r={argmin:.6g}"
        )
    # |u'| <= |v'| pointwise (u' = eta^q v')
    d1_ratio = np.abs(u.d1(rs_head)) - np.abs(v.d1(rs_head))
    if float(np.max(d1_ratio)) > 1e-9 * max(1.0, V):
        raise SmoothingError("|u'| exceeds |v'| in the transition")

    mu_bar = math.exp(float(u(s)) - float(v(s))) - 1.0
    cfg = SmoothingConfig(
        lam=lam, mu_requested=mu, mu=mu, q=q, interval=(s, t), eta_support=(lo, hi),
        measured={
            "floor": floor,
            "floor_allowed": allowed,
            "argmin": argmin,
            "sup_dev": sup_dev,
            "mu_bar": mu_bar,
            "const_value": c,
            "sup_abs_v_d1": V,
        },
    )
    return u, cfg


# ---------------------------------------------------------------------------


def _detect_kink(f_bar: PiecewiseC2Function, rel_tol=1e-9):
    """Largest d2 jump among breakpoints whose value/d1 match."""
    best = None
    best_jump = 0.0
    for e in f_bar.certify_junctions(rel_tol=rel_tol):
        if e["mismatch"]["value"] > rel_tol or e["mismatch"]["d1"] > _D1_KINK_TOL:
            continue
        if e["mismatch"]["d2"] > max(best_jump, rel_tol):
            best_jump = e["mismatch"]["d2"]
            best = e["r"]
    return best


def mollify_f(u: PiecewiseC2Function, f_bar: PiecewiseC2Function, lam: float,
              mu: float, kink: Optional[float] = None,
              n_window: int = 8193, check_noise: float = 0.0) -> PiecewiseC2Function:
    """Smooth a matched-C^1 kink of f_bar to C^inf inside (kink-mu, kink+mu).

    Outside the window f = f_bar exactly (value, slope and curvature agree at
    the seams).  Certifies ||f - f_bar||_{C^1} <= mu and the curvature floor
    Q(u, f) >= -(lam + mu); raises SmoothingError when the input kink is
    worse than C^{1,1} (first-derivative jump) or positivity fails.

    check_noise widens the two curvature-floor checks by an absolute
    allowance; callers whose piecewise representation carries a known
    evaluation noise in Q (e.g. log-scale splines near small radii) pass
    their measured bound here.
    """
    a, b = f_bar.domain
    if kink is None:
        kink = _detect_kink(f_bar)
        if kink is None:
            return f_bar  # already smooth: nothing to mollify
    kink = float(kink)
    halfwidth = min(kink - a, b - kink)
    if not (0.0 < mu < 0.5 * halfwidth):
        raise SmoothingError("need 0 < mu < half the distance to the domain ends")

    # classify the kink
    seg_left = None
    seg_right = None
    for i, brk in enumerate(f_bar.breakpoints()):
        if abs(brk - kink) <= 1e-12 * max(1.0, abs(kink)):
            seg_left = f_bar.segments[i]
            seg_right = f_bar.segments[i + 1]
            break
    if seg_left is None:
        # interior of a segment: smooth already
        return f_bar
    v_l = float(seg_left.value(np.float64(kink)))
    v_r = float(seg_right.value(np.float64(kink)))
    d1_l = float(seg_left.d1(np.float64(kink)))
    d1_r = float(seg_right.d1(np.float64(kink)))
    d2_l = float(seg_left.d2(np.float64(kink)))
    d2_r = float(seg_right.d2(np.float64(kink)))
    scale = max(1.0, abs(v_l), abs(v_r))
    if abs(v_l - v_r) > 1e-9 * scale:
        raise SmoothingError("value jump at the kink: not even C^0")
    if abs(d1_l - d1_r) > _D1_KINK_TOL * max(1.0, abs(d1_l), abs(d1_r)):
        raise SmoothingError(
            f"first-derivative jump {abs(d1_l - d1_r):.3g} at r={kink}: worse than C^{{1,1}}"
        )
    if abs(d2_l - d2_r) <= 1e-9 * max(1.0, abs(d2_l), abs(d2_r)):
        return f_bar  # d2 already continuous: idempotent no-op

    # hypothesis on both sides of the kink
    floor_l, _ = functional_floor(u, f_bar, max(a, kink - 2 * mu), kink)
    floor_r, _ = functional_floor(u, f_bar, kink, min(b, kink + 2 * mu))
    if min(floor_l, floor_r) < -lam * (1 + 1e-12) - 1e-12 - check_noise:
        raise SmoothingError(
            f"hypothesis fails: Q(u, f_bar) = {min(floor_l, floor_r):.6g} < "
            f"-lam = {-lam:.6g} beside the kink"
        )

    L, R = kink - mu, kink + mu
    # resolution vs rounding: the rebuilt spline's d2 amplifies stored-value
    # rounding (relative eps times the f scale) like eps/h^2, so cap the
    # window point count near the noise optimum for the accepted tolerance
    q_target = max(0.25 * mu, check_noise / 3.0, 1e-9)
    h_opt = math.sqrt(6.0 * 4e-16 / q_target)
    n_eff = int(min(n_window, max(129, 2.0 * mu / h_opt)))
    n_eff |= 1  # odd, symmetric about the kink
    x = np.linspace(L, R, n_eff)
    fpp = f_bar.d2(x)

    # chi: 1 within mu/2 of the kink, 0 beyond 3mu/4 (seams untouched)
    chi = smoothstep((0.75 * mu - np.abs(x - kink)) / (0.25 * mu))

    # kernel average of f'' (radius mu/8): for each x near the kink,
    # integrate over y in [-rad, rad] with a panel split at y = x - kink,
    # where f'' jumps
    rad = mu / 8.0
    nodes, weights = np.polynomial.legendre.leggauss(32)
    conv = np.zeros_like(x)
    active = chi > 0.0
    xa = x[active]

    def kernel(y):
        return bump(y / rad)

    conv_a = np.zeros_like(xa)
    for j, xc in enumerate(xa):
        cut = xc - kink
        panels = [(-rad, rad)] if abs(cut) >= rad else [(-rad, cut), (cut, rad)]
        acc = 0.0
        wacc = 0.0
        for plo, phi in panels:
            if phi <= plo:
                continue
            mid = 0.5 * (plo + phi)
            half = 0.5 * (phi - plo)
            ys = mid + half * nodes
            ww = half * weights
            kv = kernel(ys)
            acc += float(np.sum(ww * kv * f_bar.d2(xc - ys)))
            wacc += float(np.sum(ww * kv))
        conv_a[j] = acc / wacc
    conv[active] = conv_a

    base2 = (1.0 - chi) * fpp + chi * conv

    # two smooth corrections supported strictly inside the window restore the
    # exact C^1 data at the right seam after double integration
    raw_bump = bump((x - kink) / (0.5 * mu))
    bump_mass = float(CubicSpline(x, raw_bump).antiderivative()(R))
    b1 = raw_bump / bump_mass
    b2 = CubicSpline(x, raw_bump).derivative()(x) / bump_mass

    fL = float(f_bar(L))
    dL = float(f_bar.d1(L))
    fR = float(f_bar(R))
    dR = float(f_bar.d1(R))

    def integrate_twice(second):
        A1 = CubicSpline(x, second).antiderivative()
        d1 = dL + A1(x)
        A2 = CubicSpline(x, d1).antiderivative()
        val = fL + A2(x)
        return val, d1

    v_base, d_base = integrate_twice(base2)
    v_b1, d_b1 = integrate_twice(b1)
    v_b2, d_b2 = integrate_twice(b2)
    # subtract the L initial data contributions to isolate linear responses
    m = np.array(
        [
            [d_b1[-1] - dL, d_b2[-1] - dL],
            [v_b1[-1] - fL - dL * (R - L), v_b2[-1] - fL - dL * (R - L)],
        ]
    )
    rhs = np.array([dR - d_base[-1], fR - (v_base[-1])])
    c1, c2 = np.linalg.solve(m, rhs)

    second = base2 + c1 * b1 + c2 * b2
    vals, d1s = integrate_twice(second)

    seam_err = max(abs(vals[-1] - fR), abs(d1s[-1] - dR))
    if seam_err > 1e-10 * max(1.0, abs(fR)):
        raise SmoothingError(f"seam closure failed: residual {seam_err:.3g}")

    dev_c1 = max(
        float(np.max(np.abs(vals - f_bar(x)))), float(np.max(np.abs(d1s - f_bar.d1(x))))
    )
    if dev_c1 > mu * (1 + 1e-9):
        raise SmoothingError(f"C^1 deviation {dev_c1:.3g} exceeds mu = {mu}")
    if np.any(vals <= 0):
        raise SmoothingError("positivity lost after mollification")

    seg = SplineSegment(L, R, x, vals, d1a=dL, d1b=dR)
    left_part = f_bar.restrict(a, L)
    right_part = f_bar.restrict(R, b)
    # with a declared evaluation-noise allowance, d2 continuity at the seams
    # can only be certified to the noise level, not to the C^inf tolerance
    seam = "Cinf" if check_noise <= 1e-12 else "C1,1"
    f_new = PiecewiseC2Function(
        left_part.segments + [seg] + right_part.segments,
        left_part.junctions + [seam, seam] + right_part.junctions,
    )

    floor_new, argmin = functional_floor(u, f_new, L, R)
    if floor_new < -(lam + mu) * (1 + 1e-9) - check_noise:
        raise SmoothingError(
            f"mollified floor {floor_new:.9g} < -(lam+mu) = {-(lam + mu):.9g} at {argmin:.6g}"
        )
    return f_new
