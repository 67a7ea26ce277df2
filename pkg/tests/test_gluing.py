import math

import numpy as np
import pytest

from drawstring.gluing import (
    alpha_of,
    c1_matching_residual,
    forge,
    r_star_of,
    select_parameters,
    verify_glued_conditions,
)
from drawstring.warped import hyperbolic_profile, scalar_curvature_samples


def test_alpha_limit_at_zero():
    # as rho* -> 0 with no flattening gap the matching level tends to 3
    assert alpha_of(0.0, 0.0) == 3.0
    assert alpha_of(1e-9, 0.0) == pytest.approx(3.0, abs=1e-15)


def test_alpha_and_r_star_reference_values():
    # direct evaluation at rho* = 0.1 with mu_bar = 0
    a = alpha_of(0.1, 0.0)
    assert a == pytest.approx(3.04 / 1.01, rel=1e-14)
    assert a == pytest.approx(3.009901, abs=1e-6)
    r_st = r_star_of(0.1, 0.0)
    expected = math.sqrt(1.01 / a) * math.asinh(math.sqrt(a) * 0.1)
    assert r_st == pytest.approx(expected, rel=1e-14)
    # direct IEEE evaluation of the closed form; just above rho* itself
    assert r_st == pytest.approx(0.1000013, abs=1e-6)
    assert r_st > 0.1


def test_c1_matching_identity():
    for rho in (0.3, 0.1, 0.02, 1e-3):
        for mu_bar in (0.0, 1e-4, 1e-2):
            assert abs(c1_matching_residual(rho, mu_bar)) < 1e-12


def test_expansion_constants_diagnostics():
    from drawstring.gluing import expansion_constants

    c1, c2 = expansion_constants()
    assert 0.0 < c1 < 1.0
    assert 0.0 < c2 < 10.0
    # the measured constants bound the sweep they came from
    rhos = np.geomspace(2e-4, 0.15, 9)
    for r in rhos:
        assert r_star_of(r, 0.0) <= r + c1 * r * r * (1 + 1e-12)


@pytest.fixture(scope="module")
def forged():
    return forge(0.1, 0.1)


def test_select_parameters_invariants(forged):
    _, params, _ = forged
    assert 3.0 < params.alpha < 4.0
    assert params.mu_bar > 0.0
    assert params.mu_bar < params.eps / 100.0
    assert 2.0 * params.r1_prime < params.r_star
    assert params.r1 > 0.0
    assert params.ell == pytest.approx(
        params.ell_prime + (params.r_star - 2 * params.r1_prime)
        + (params.r0 - params.rho_star), rel=1e-12,
    )


def test_outer_branch_identity(forged):
    profile, params, _ = forged
    ell, r0, r1 = params.ell, params.r0, params.r1
    rs = np.linspace(ell - r1, ell, 257)
    x = rs + r0 - ell
    assert np.max(np.abs(np.exp(2 * profile.u(rs)) - (1 + x**2))) <= 1e-9
    assert np.max(np.abs(profile.f(rs) ** 2 - (1 + x**2) * x**2)) <= 1e-9


def test_middle_branch_product_curvature(forged):
    # the collar carries the exact product metric: R = -2*alpha there
    profile, params, _ = forged
    lo = params.ell_prime + 0.1 * (params.r_star - 2 * params.r1_prime)
    hi = params.ell_prime + 0.6 * (params.r_star - 2 * params.r1_prime)
    rs = np.linspace(lo, hi, 65)
    R = scalar_curvature_samples(profile, rs)
    assert np.max(np.abs(R + 2 * params.alpha)) <= 1e-8


def test_junction_smoothness(forged):
    profile, params, _ = forged
    # all declared junction classes certified
    assert profile.u.junctions_ok()
    assert profile.f.junctions_ok()
    # across the mollified junction f'' is continuous (same spline)
    s3 = params.ell_prime + (params.r_star - 2 * params.r1_prime)
    d2l = float(profile.f.d2(s3 - 1e-12))
    d2r = float(profile.f.d2(s3 + 1e-12))
    assert abs(d2l - d2r) <= 1e-5 * max(1.0, abs(d2l))


def test_verify_conditions_pass(forged):
    _, _, report = forged
    assert report["all_pass"]
    c1 = report["conditions"]["1_curvature"]
    assert c1["min_sampled_R"] >= -6.0 - 0.1 - 1e-6
    assert report["conditions"]["4_radial_length"]["value"] <= 30 * 0.1
    assert report["conditions"]["5_volume"]["value"] <= 3 * math.pi * 0.01


def test_hyperbolic_alone_fails_core_condition():
    prof = hyperbolic_profile(0.1)
    report = verify_glued_conditions(prof, 0.1, 0.1)
    assert not report["conditions"]["3_core_small"]["pass"]
    # and the outer form is exact for the untouched hyperbolic metric
    assert report["conditions"]["2_outer_form"]["pass"]


def test_bad_inputs_rejected():
    with pytest.raises(ValueError):
        select_parameters(2.0, 0.1)
    with pytest.raises(ValueError):
        select_parameters(0.1, 0.0)


def test_glued_profile_json_round_trip(forged, tmp_path):
    # the full glued profile (closed-form, spline, and log-scale-spline
    # segments) survives serialization losslessly
    from drawstring.io import export_profile, load_profile

    profile, params, _ = forged
    path = export_profile(profile, tmp_path / "glued.json", "json")
    back = load_profile(path)
    rng = np.random.default_rng(2)
    rs = rng.uniform(0.0, profile.length, 100)
    assert np.max(np.abs(back.u(rs) - profile.u(rs))) <= 1e-12
    assert np.max(np.abs(back.f(rs) - profile.f(rs))) <= 1e-12
    assert back.meta["params"]["alpha"] == params.alpha


def test_glued_profile_csv_rows(forged, tmp_path):
    from drawstring.io import export_profile

    profile, _, _ = forged
    path = export_profile(profile, tmp_path / "glued.csv", "csv", resolution=1024)
    rows = path.read_text().strip().splitlines()
    assert len(rows) - 1 == 1024 + profile.breakpoints().size
