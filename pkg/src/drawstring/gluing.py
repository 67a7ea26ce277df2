"""End-to-end gluing pipeline: drawstring core -> product collar ->
flattened hyperbolic outer zone, certified against the five headline
conditions (curvature floor -6-eps, exact hyperbolic outer form, small core,
radial length, cylinder volume).

Stages, in construction order:

1. select_parameters: find the collar radius rho*, the matching curvature
   level alpha and collar width r* so the product metric C^1-matches the
   (flattened) hyperbolic metric; rho* halves until four smallness
   conditions hold, and the flattening gap mu_bar feeds back into alpha.
2. flatten the hyperbolic u-factor on [rho*, r0] so it is constant near
   rho* (the product collar attaches at constant conformal level).
3. build the drawstring with k = alpha, then rescale it by e^{u1(rho*)}
   (a pure coordinate rescale; scalar curvature is untouched).
4. concatenate the three branches, mollify the one remaining C^{1,1}
   f-junction (collar meets hyperbolic zone), and verify.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from .drawstring_core import DrawstringResult, DrawstringSpec, build_product_drawstring
from .errors import ShootingError, SmoothingError
from .piecewise import ExprSegment, PiecewiseC2Function
from .smoothing import SmoothingConfig, flatten_u, mollify_f
from .warped import (
    WarpedProfile,
    curvature_scan,
    hyperbolic_profile,
    measure_profile,
)

__all__ = ["GlueParams", "select_parameters", "assemble_glued_profile",
           "verify_glued_conditions", "forge"]


@dataclass
class GlueParams:
    eps: float
    r0: float
    rho_star: float
    mu_bar: float
    alpha: float
    r_star: float
    c_level: float                  # u1(rho*) = log((1+mu_bar) sqrt(1+rho*^2))
    mu_flatten: float               # realized flattening width
    flatten_q: float
    r1: float                       # exact-hyperbolic outer radius
    r1_prime: float = float("nan")  # filled by the assembly stage
    ell_prime: float = float("nan")
    ell: float = float("nan")

    def to_dict(self):
        return {
            "eps": self.eps, "r0": self.r0, "rho_star": self.rho_star,
            "mu_bar": self.mu_bar, "alpha": self.alpha, "r_star": self.r_star,
            "c_level": self.c_level, "mu_flatten": self.mu_flatten,
            "flatten_q": self.flatten_q, "r1": self.r1,
            "r1_prime": self.r1_prime, "ell_prime": self.ell_prime,
            "ell": self.ell,
        }


def alpha_of(rho_star: float, mu_bar: float) -> float:
    """C^1-matching curvature level for the product collar."""
    return (1.0 + mu_bar) ** 2 * (3.0 + 4.0 * rho_star ** 2) / (1.0 + rho_star ** 2)


def r_star_of(rho_star: float, mu_bar: float) -> float:
    """Collar radius at which the product metric takes the matching value."""
    a = alpha_of(rho_star, mu_bar)
    return ((1.0 + mu_bar) * math.sqrt((1.0 + rho_star ** 2) / a)
            * math.asinh(math.sqrt(a) * rho_star / (1.0 + mu_bar)))


def c1_matching_residual(rho_star: float, mu_bar: float) -> float:
    """cosh(sqrt(a) e^{-c} r*) - (1+2 rho*^2)/sqrt(1+rho*^2); zero when the
    collar C^1-matches the hyperbolic zone."""
    a = alpha_of(rho_star, mu_bar)
    c = math.log((1.0 + mu_bar) * math.sqrt(1.0 + rho_star ** 2))
    r_st = r_star_of(rho_star, mu_bar)
    return (math.cosh(math.sqrt(a) * math.exp(-c) * r_st)
            - (1.0 + 2.0 * rho_star ** 2) / math.sqrt(1.0 + rho_star ** 2))


def expansion_constants(rhos=None) -> Tuple[float, float]:
    """Empirical expansion constants of the matching formulas, measured by a
    sweep over the collar radius (diagnostics only, never correctness gates):

    C1 bounds the collar-radius excess, r* <= rho* + C1 rho*^2, and C2 the
    matching-level excess per unit flattening gap,
    alpha <= 3 + rho*^2/(1+rho*^2) + C2 mu_bar.
    """
    if rhos is None:
        rhos = np.geomspace(1e-4, 0.2, 33)
    c1 = max((r_star_of(r, 0.0) - r) / (r * r) for r in rhos)
    mu_probe = 1e-3
    c2 = max((alpha_of(r, mu_probe) - alpha_of(r, 0.0)) / mu_probe for r in rhos)
    return float(c1), float(c2)


def flatten_width(eps: float) -> float:
    """Flattening width: the flattened zone's curvature floor
    -lam/(1-sqrt(mu)) must stay above -(6+eps)/2, which needs sqrt(mu) well
    under eps/(6+eps); the nominal eps/100 is kept as a cap."""
    return min(eps / 100.0, (eps / (2.0 * (6.0 + eps))) ** 2)


def _smallness_ok(eps, r0, rho_star, mu_bar):
    r_st = r_star_of(rho_star, mu_bar)
    return (
        (1.0 + eps / 100.0) * math.sqrt(1.0 + rho_star ** 2) < 2.0
        and rho_star < r0
        and 2.0 * r_st < 10.0 * r0
        and 400.0 * math.pi * (math.cosh(2.0 * r_st) - 1.0) < r0 ** 2
    )


def select_parameters(eps: float, r0: float
                      ) -> Tuple[GlueParams, PiecewiseC2Function,
                                 PiecewiseC2Function, SmoothingConfig]:
    """Pick (rho*, alpha, r*) and flatten the hyperbolic u-factor.

    Returns the parameter set plus the flattened u1 and the hyperbolic f1 on
    [rho*, r0] (the assembly stage reuses them), and the flattening config.
    rho* halves from r0/2 until the smallness conditions hold with the
    realized flattening gap mu_bar.
    """
    if not (0.0 < eps < 1.0 and 0.0 < r0 < 1.0):
        raise ValueError("eps and r0 must lie in (0, 1)")
    hyp = hyperbolic_profile(r0)
    mu_req = flatten_width(eps)

    rho = 0.5 * r0
    for _ in range(60):
        # the flattening construction is independent of the declared bound;
        # pass a provisional one and re-check the floor against alpha below
        u1, cfg = flatten_u(hyp.u, hyp.f, (rho, r0), lam=4.0, mu=mu_req,
                            mu_bar_cap=eps / 100.0)
        mu_bar = cfg.measured["mu_bar"]
        if _smallness_ok(eps, r0, rho, mu_bar):
            break
        rho *= 0.5
    else:
        raise ShootingError("no admissible rho* above float resolution")

    alpha = alpha_of(rho, mu_bar)
    r_st = r_star_of(rho, mu_bar)
    resid = c1_matching_residual(rho, mu_bar)
    if abs(resid) > 1e-10:
        raise ShootingError(f"collar C1 identity residual {resid:.3e}")
    # flattening floor against the final alpha
    allowed = -alpha / (1.0 - math.sqrt(cfg.mu))
    if cfg.measured["floor"] < allowed * (1 + 1e-9):
        raise SmoothingError("flattened curvature floor fails against alpha")

    c = math.log((1.0 + mu_bar) * math.sqrt(1.0 + rho ** 2))
    params = GlueParams(
        eps=eps, r0=r0, rho_star=rho, mu_bar=mu_bar, alpha=alpha, r_star=r_st,
        c_level=c, mu_flatten=cfg.mu, flatten_q=cfg.q,
        # the exact hyperbolic form holds past the flattening transition
        r1=r0 - rho - cfg.mu,
        r1_prime=0.0625 * r_st * math.exp(c),
    )
    f1 = hyp.f.restrict(rho, r0)
    return params, u1, f1, cfg


def assemble_glued_profile(params: GlueParams, inner: DrawstringResult,
                           flattened: Tuple[PiecewiseC2Function,
                                            PiecewiseC2Function]
                           ) -> WarpedProfile:
    """Concatenate drawstring, product collar, and hyperbolic zone.

    The drawstring (built with k = alpha in its own coordinates) is rescaled
    by e^{c}: f3(r) = e^c fbar(r e^{-c}), u3(r) = ubar(r e^{-c}) + c.  This
    is a coordinate change, so curvature certificates carry over verbatim.
    The collar continues the drawstring's outer product form exactly; the
    collar-to-hyperbolic junction is C^1 by the (alpha, r*) matching
    identities and its curvature-level kink in f is mollified.
    """
    u1, f1 = flattened
    c = params.c_level
    ec = math.exp(c)
    alpha = params.alpha

    u3 = inner.profile.u.transformed(arg_scale=math.exp(-c), val_offset=c)
    f3 = inner.profile.f.transformed(arg_scale=math.exp(-c), val_scale=ec)
    ell_prime = inner.ell_prime * ec
    r1_prime = inner.r1_prime * ec
    s3 = ell_prime + (params.r_star - 2.0 * r1_prime)
    ell = s3 + (params.r0 - params.rho_star)

    sqa = math.sqrt(alpha)
    f2_seg = ExprSegment(
        ell_prime, s3, "sinh",
        val_scale=ec / sqa,
        arg_scale=sqa / ec,
        arg_shift=sqa / ec * (2.0 * r1_prime - ell_prime),
    )
    u2_seg = ExprSegment(ell_prime, s3, "zero", val_offset=c)

    shift = s3 - params.rho_star
    u1_sh = u1.shifted(shift)
    f1_sh = f1.shifted(shift)

    u_fn = PiecewiseC2Function(
        u3.segments + [u2_seg] + u1_sh.segments,
        u3.junctions + ["Cinf", "Cinf"] + u1_sh.junctions,
    ).merged()
    f_fn = PiecewiseC2Function(
        f3.segments + [f2_seg] + f1_sh.segments,
        f3.junctions + ["Cinf", "C1,1"] + f1_sh.junctions,
    ).merged()

    # branch continuity is analytic; anything above rounding is a bug
    for g, name in ((u_fn, "u"), (f_fn, "f")):
        for brk, entry in zip(g.breakpoints(), g.certify_junctions(rel_tol=1e-9)):
            if entry["mismatch"]["value"] > 1e-9:
                raise ShootingError(
                    f"{name} branch C0 mismatch {entry['mismatch']['value']:.3e} "
                    f"at r={brk}"
                )

    # mollify the curvature-level f-kink where the collar meets the
    # hyperbolic zone; the flattened u is constant across this junction
    mu_m = min(params.eps / 100.0,
               0.3 * (params.r_star - 2.0 * r1_prime),
               0.3 * (params.r0 - params.rho_star))
    lam_m = alpha / (1.0 - math.sqrt(params.mu_flatten))
    h_eff = 2.0 * mu_m / 128.0
    moll_noise = 3.0 * 2.4e-15 / (h_eff * h_eff)
    f_fn = mollify_f(u_fn, f_fn, lam=lam_m, mu=mu_m, kink=s3,
                     check_noise=moll_noise)

    params.r1_prime = r1_prime
    params.ell_prime = ell_prime
    params.ell = ell

    meta = {
        "family": "glued",
        "params": params.to_dict(),
        "r1": params.r1,
        "cap_r": inner.profile.meta["cap_r"] * ec,
        "core_level": inner.profile.meta["core_level"] + c,
        "axis_cone_excess": inner.profile.meta["axis_cone_excess"],
        "axis_limit_R": inner.profile.meta["axis_limit_R"],
        "curvature_scan_floor": inner.profile.meta["curvature_scan_floor"] * ec,
        "curvature_eval_noise": inner.profile.meta["curvature_eval_noise"],
        "interior_certificate": {
            "zone": [0.0, inner.profile.meta["junction_r"] * ec],
            "construction_R_range": [-2.0 * (alpha + 0.5 * inner.profile.meta["eta"]),
                                     -2.0 * alpha],
            "ode_step_doubling_error":
                inner.profile.meta["construction"]["ode_step_doubling_error"],
        },
        "mollify": {"mu": mu_m, "lam": lam_m, "junction": s3,
                    "check_noise": moll_noise},
    }
    return WarpedProfile(u=u_fn, f=f_fn, axis_regular=False, meta=meta)


def verify_glued_conditions(profile: WarpedProfile, eps: float, r0: float,
                     tolerances: Optional[dict] = None) -> dict:
    """Pass/fail record for the five glued-metric conditions.

    The curvature entry reports the sampled minimum (the scan respects the
    profile's documented floor; the core below it carries the construction
    certificate, also echoed here).  Radial length and volume are checked
    against both the loose headline budgets and the tighter derived ones.
    """
    tol = {
        "curvature_slack": 1e-6,
        "outer_form": 1e-9,
        "radial_factor_strict": 30.0,
        "radial_factor_loose": 100.0,
        "volume_strict_coeff": 3.0 * math.pi,
        "volume_loose_coeff": 100.0,
    }
    if tolerances:
        tol.update(tolerances)

    report = {"eps": eps, "r0": r0, "conditions": {}, "tolerances": tol,
              "schema_version": 1}
    meta = profile.meta
    r1 = meta.get("r1", min(r0, profile.length) / 2)
    ell = profile.length

    scan = curvature_scan(profile)
    bound = -6.0 - eps - tol["curvature_slack"]
    entry = {
        "min_sampled_R": scan.min_R,
        "argmin_r": scan.argmin_r,
        "bound": -6.0 - eps,
        "margin": scan.min_R - bound,
        "pass": bool(scan.min_R >= bound),
    }
    if "interior_certificate" in meta:
        cert = meta["interior_certificate"]
        entry["interior_certificate"] = cert
        entry["pass"] = bool(entry["pass"]
                             and cert["construction_R_range"][0] >= bound)
    report["conditions"]["1_curvature"] = entry

    rs = np.linspace(ell - r1, ell, 1024)
    x = rs + r0 - ell
    e2u_ref = 1.0 + x * x
    f2_ref = (1.0 + x * x) * x * x
    resid = max(
        float(np.max(np.abs(np.exp(2.0 * profile.u(rs)) - e2u_ref))),
        float(np.max(np.abs(profile.f(rs) ** 2 - f2_ref))),
    )
    report["conditions"]["2_outer_form"] = {
        "residual": resid,
        "zone": [ell - r1, ell],
        "pass": bool(resid <= tol["outer_form"]),
    }

    cap_r = meta.get("cap_r", 1e-3 * ell)
    rs0 = np.linspace(0.0, cap_r, 64)
    sup_eu = float(np.max(np.exp(profile.u(rs0))))
    report["conditions"]["3_core_small"] = {
        "sup_e_u_near_0": sup_eu,
        "bound": eps,
        "margin": eps - sup_eu,
        "pass": bool(sup_eu <= eps),
    }

    radial, vol = measure_profile(profile)
    report["conditions"]["4_radial_length"] = {
        "value": radial,
        "bound_strict": tol["radial_factor_strict"] * r0,
        "bound_loose": tol["radial_factor_loose"] * r0,
        "pass": bool(radial <= tol["radial_factor_strict"] * r0),
    }
    report["conditions"]["5_volume"] = {
        "value": vol,
        "bound_strict": tol["volume_strict_coeff"] * r0 ** 2,
        "bound_loose": tol["volume_loose_coeff"] * r0 ** 2,
        "pass": bool(vol <= tol["volume_strict_coeff"] * r0 ** 2),
    }

    report["all_pass"] = all(c["pass"] for c in report["conditions"].values())
    return report


def forge(eps: float, r0: float, n_steps: int = 262144
          ) -> Tuple[WarpedProfile, GlueParams, dict]:
    """Full pipeline: parameters, drawstring, assembly, verification."""
    params, u1, f1, _cfg = select_parameters(eps, r0)
    spec = DrawstringSpec(k=params.alpha, eta=eps / 100.0, delta=eps / 2.0,
                          r0_prime=params.r_star / 4.0)
    inner = build_product_drawstring(spec, n_steps=n_steps)
    profile = assemble_glued_profile(params, inner, (u1, f1))
    report = verify_glued_conditions(profile, eps, r0)
    return profile, params, report
