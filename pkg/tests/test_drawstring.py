import math

import numpy as np
import pytest

from drawstring.drawstring_core import (
    DrawstringSpec,
    DrawstringResult,
    build_product_drawstring,
    verify_drawstring_contract,
)
from drawstring.warped import measure_profile, product_profile

SPEC = DrawstringSpec(k=3.01, eta=0.03, delta=0.05, r0_prime=0.025)


@pytest.fixture(scope="module")
def built():
    return build_product_drawstring(SPEC)


def test_degenerate_delta_rejected():
    with pytest.raises(ValueError):
        DrawstringSpec(k=3.0, eta=0.03, delta=1.0, r0_prime=0.025)


def test_contract_all_pass_with_margins(built):
    rep = verify_drawstring_contract(built, SPEC)
    assert rep["all_pass"]
    assert rep["properties"]["1_curvature"]["margin"] > 0
    assert rep["properties"]["3_core_small"]["margin"] > 0
    assert rep["properties"]["4_radial_length"]["margin"] > 0
    assert rep["properties"]["5_volume"]["margin"] > 0


def test_outer_form_values(built):
    # at r = l': f = sinh(2 sqrt(k) r1')/sqrt(k), f' = cosh(2 sqrt(k) r1')
    k = SPEC.k
    lp, r1p = built.ell_prime, built.r1_prime
    f = built.profile.f
    assert float(f(lp)) == pytest.approx(
        math.sinh(2 * math.sqrt(k) * r1p) / math.sqrt(k), rel=1e-12
    )
    assert float(f.d1(lp)) == pytest.approx(
        math.cosh(2 * math.sqrt(k) * r1p), rel=1e-12
    )


def test_r1_prime_is_quarter_budget(built):
    assert built.r1_prime == pytest.approx(SPEC.r0_prime / 4)
    assert built.r1_prime < SPEC.r0_prime


def test_V0_matches_reference_cylinder(built):
    # V0 equals the measured cylinder volume of the product profile with
    # radius 2 r1'
    ref = product_profile(SPEC.k, 0.0, 2 * built.r1_prime)
    _, vol = measure_profile(ref)
    assert vol == pytest.approx(built.V0, abs=1e-8)


def test_junctions_certified(built):
    assert built.profile.u.junctions_ok()
    assert built.profile.f.junctions_ok()


def test_cone_excess_documented(built):
    # the double-precision matching deficit lives at the axis, documented
    meta = built.meta
    assert 0 < meta["axis_cone_excess"] < 0.1
    assert not built.profile.axis_regular
    assert meta["curvature_scan_floor"] > 0


def test_contract_fails_without_drawstring():
    # a plain product metric (u = 0 everywhere) breaks the core-smallness
    prof = product_profile(SPEC.k, 0.0, 0.02)
    prof.meta["cap_r"] = 0.002
    fake = DrawstringResult(profile=prof, r1_prime=0.005, ell_prime=0.02,
                            V0=(2 * math.pi / SPEC.k)
                            * (math.cosh(2 * math.sqrt(SPEC.k) * 0.005) - 1))
    rep = verify_drawstring_contract(fake, SPEC)
    assert not rep["properties"]["3_core_small"]["pass"]


def test_contract_fails_with_wrong_outer_form(built):
    # replace the outer zone by flat f = r + shift: property 2 residual large
    from drawstring.piecewise import ExprSegment, PiecewiseC2Function
    from drawstring.warped import WarpedProfile

    lp = built.ell_prime
    u = built.profile.u
    f_flat = PiecewiseC2Function([ExprSegment(0.0, lp, "identity")])
    prof = WarpedProfile(u=u, f=f_flat, axis_regular=False,
                         meta=dict(built.profile.meta))
    fake = DrawstringResult(profile=prof, r1_prime=built.r1_prime,
                            ell_prime=lp, V0=built.V0)
    rep = verify_drawstring_contract(fake, SPEC)
    assert not rep["properties"]["2_outer_form"]["pass"]


def test_radial_length_equals_arclength(built):
    # int e^{-u} dr is the arclength of the construction: junction distance
    # plus the outer extension
    radial, _ = measure_profile(built.profile)
    meta = built.meta
    expected = meta["construction"]["window"][1] + (
        2 * built.r1_prime - meta["junction_d"]
    )
    assert radial == pytest.approx(expected, rel=1e-6)
