import math

import numpy as np
import pytest

from drawstring.gluing import forge
from drawstring.tube import (
    build_phi,
    build_tube_metrics,
    build_w,
    core_distance,
    core_length,
    project_to_core,
    stencil_anisotropy_bound,
    tube_distance,
    verify_squeeze_claims,
)

GRID = (24, 16, 16)


@pytest.fixture(scope="module")
def setup():
    profile, params, _ = forge(0.25, 0.25)
    models = build_tube_metrics(4, profile, grid=GRID)
    return profile, params, models


def test_phi_properties(setup):
    profile, params, _ = setup
    ell, r0, r1 = params.ell, params.r0, params.r1
    phi = build_phi(ell, r0, r1)
    # identity near zero
    rs = np.linspace(0, 0.05 * math.asinh(r0 - r1), 16)
    assert np.max(np.abs(phi(rs) - rs)) == 0.0
    # strictly increasing slope everywhere
    rs = np.linspace(0, ell, 2048)
    assert np.min(phi.d1(rs)) > 0
    # collar form
    rs = np.linspace(ell - r1, ell, 64)
    assert np.max(np.abs(phi(rs) - np.arcsinh(rs + r0 - ell))) <= 1e-12


def test_w_properties(setup):
    profile, params, _ = setup
    ell, r1 = params.ell, params.r1
    w = build_w(profile.u, ell, r1, profile.meta["core_level"])
    rs = np.geomspace(1e-250, ell, 4096)
    uv = profile.u(rs)
    wv = w(rs)
    assert np.all(wv >= np.maximum(uv, -math.log(2.0)) - 1e-12)
    # equals u on the outer half-collar
    rs_out = np.linspace(ell - r1 / 2, ell, 64)
    assert np.max(np.abs(w(rs_out) - profile.u(rs_out))) <= 1e-12
    # equals -log 2 near the core
    assert float(w(0.0)) == pytest.approx(-math.log(2.0), abs=1e-14)


def test_collar_agreement(setup):
    _, _, (g0, ghat, gi) = setup
    # outer quarter of the radial nodes lies in the exact collar
    q = len(g0.s_nodes) // 4
    for name in ("g_ss", "g_thth", "g_tt"):
        a = getattr(g0, name)[-q:]
        b = getattr(ghat, name)[-q:]
        assert np.max(np.abs(a - b)) <= 1e-9


def test_metric_ordering_and_equality_zone(setup):
    _, _, (g0, ghat, gi) = setup
    assert np.all(gi.g_tt >= ghat.g_tt - 1e-15)
    assert np.array_equal(gi.g_ss, ghat.g_ss)
    assert np.array_equal(gi.g_thth, ghat.g_thth)
    # w = u on the outer zone: identical tt-components there
    q = len(g0.s_nodes) // 4
    assert np.max(np.abs(gi.g_tt[-q:] - ghat.g_tt[-q:])) == 0.0


def test_core_lengths(setup):
    _, params, (g0, ghat, gi) = setup
    assert core_length(gi) / core_length(g0) == pytest.approx(0.5, abs=1e-15)
    assert core_length(ghat) / core_length(g0) <= params.eps


def test_zero_distance_same_point(setup):
    _, _, (g0, _, _) = setup
    p = (0.5 * g0.s0, 0.3, 0.7)
    assert tube_distance(g0, p, p) == 0.0


def test_boundary_to_core_g0(setup):
    _, _, (g0, _, _) = setup
    d = tube_distance(g0, (g0.s0, 0.0, 0.0), (0.0, 0.0, 0.0))
    assert d == pytest.approx(g0.s0, rel=0.05)


def test_boundary_to_core_ghat_bound(setup):
    _, params, (_, ghat, _) = setup
    d = tube_distance(ghat, (ghat.s0, 0.0, 0.0), (0.0, 0.0, 0.0))
    assert d < 100.0 * params.r0


def test_projection_identity_on_core(setup):
    _, _, (g0, _, _) = setup
    p = (0.0, 1.2, 0.4)
    assert project_to_core(g0, p) == (0.0, 1.2, 0.4)
    q = (g0.s0, 2.0, 1.1)
    assert project_to_core(g0, q) == (0.0, 2.0, 1.1)


def test_projection_lipschitz_sampled(setup):
    # 500 random pairs under both the background and the squeezed metric:
    # projections live on the core, and their distance never exceeds the
    # (overestimating) grid distance upstairs
    _, _, (g0, _, gi) = setup
    rng = np.random.default_rng(11)
    n_r, n_th, n_t = g0.grid
    n_src, n_tgt = 25, 20
    for model in (g0, gi):
        srcs = [model.node_index(int(j), int(k), int(m))
                for j, k, m in zip(rng.integers(0, n_r, n_src),
                                   rng.integers(0, n_th, n_src),
                                   rng.integers(0, n_t, n_src))]
        tgts = [model.node_index(int(j), int(k), int(m))
                for j, k, m in zip(rng.integers(0, n_r, n_tgt),
                                   rng.integers(0, n_th, n_tgt),
                                   rng.integers(0, n_t, n_tgt))]
        dmat = model.distances_from(srcs)
        for row, src in enumerate(srcs):
            t_src = ((src - n_t) % n_t if src >= n_t else src % n_t) * model.T / n_t
            for tgt in tgts:
                t_tgt = ((tgt - n_t) % n_t if tgt >= n_t else tgt % n_t) * model.T / n_t
                dcore = core_distance(model, t_src, t_tgt)
                assert dcore <= dmat[row, tgt] + 1e-9


def test_claims_report(setup):
    _, params, models = setup
    rep = verify_squeeze_claims(models, sample_count=40, seed=3)
    assert rep.monotone_violation <= 1e-12
    assert rep.sandwich_ok
    assert rep.c_i > 0
    assert rep.core_ratio_gi == pytest.approx(0.5, abs=0.02)
    assert rep.boundary_to_core_ghat < 100.0 * params.r0
    assert rep.anisotropy_bound >= 1.0


def test_identical_models_cauchy_zero(setup):
    _, _, (g0, _, _) = setup
    rng = np.random.default_rng(5)
    n_r, n_th, n_t = g0.grid
    nodes = [g0.node_index(int(j), int(k), int(m))
             for j, k, m in zip(rng.integers(0, n_r, 6),
                                rng.integers(0, n_th, 6),
                                rng.integers(0, n_t, 6))]
    d1 = g0.distances_from(nodes)
    d2 = g0.distances_from(nodes)
    assert np.max(np.abs(d1 - d2)) == 0.0


def test_grid_refinement_stability(setup):
    profile, _, (g0_c, _, _) = setup
    g0_f = build_tube_metrics(4, profile, grid=(48, 32, 32))[0]
    pairs = [((g0_c.s0, 0.0, 0.0), (0.0, 0.0, 0.0)),
             ((g0_c.s0, 0.0, 0.0), (g0_c.s0, math.pi, 0.0))]
    bound = stencil_anisotropy_bound(g0_c)
    for p, q in pairs:
        dc = tube_distance(g0_c, p, q)
        df = tube_distance(g0_f, p, q)
        assert abs(dc - df) <= (bound - 1.0) * max(dc, df) + 1e-9
