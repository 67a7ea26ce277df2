import math

import numpy as np
import pytest
from scipy.optimize import brentq

from drawstring.entropy import (
    GrowthModel,
    ball_growth_bfs,
    compare_entropy,
    fit_growth_rate,
    growth_rate_transfer,
)
from drawstring.errors import EnumerationBudgetError


def test_symmetric_rank2_is_log3():
    h = growth_rate_transfer(GrowthModel((1.0, 1.0)))
    assert h == pytest.approx(math.log(3.0), abs=1e-9)


def test_rank1_grows_linearly():
    assert growth_rate_transfer(GrowthModel((1.0,))) == 0.0
    assert growth_rate_transfer(GrowthModel((0.37,))) == 0.0


def test_mixed_lengths_match_polynomial_root():
    # with t = e^{-h/2} the unit-spectral-radius condition for lengths
    # (1, 1/2) collapses to 1 - t - t^2 - 3 t^3 = 0
    h = growth_rate_transfer(GrowthModel((1.0, 0.5)))
    t_root = brentq(lambda t: 1 - t - t * t - 3 * t**3, 0.1, 0.9, xtol=1e-15)
    h_poly = -2.0 * math.log(t_root)
    assert h == pytest.approx(h_poly, abs=1e-9)
    assert h == pytest.approx(1.5127, abs=1e-3)


def test_ball_counts_free_group():
    # unit lengths: the ball of radius n has 2*3^n - 1 elements
    counts = ball_growth_bfs(GrowthModel((1.0, 1.0)), 12.0)
    by_radius = dict(counts)
    assert by_radius[0.0] == 1
    assert by_radius[1.0] == 5
    assert by_radius[2.0] == 17
    assert by_radius[3.0] == 53
    for n in range(13):
        assert by_radius[float(n)] == 2 * 3**n - 1


def test_fit_agrees_with_transfer_unit_lengths():
    model = GrowthModel((1.0, 1.0))
    counts = ball_growth_bfs(model, 12.0)
    h_fit, _ = fit_growth_rate(counts)
    assert h_fit == pytest.approx(math.log(3.0), rel=0.02)


def test_fit_agrees_with_transfer_mixed_lengths():
    model = GrowthModel((1.0, 0.5))
    h = growth_rate_transfer(model)
    counts = ball_growth_bfs(model, 8.0)
    assert counts[-1][1] >= 10_000
    h_fit, _ = fit_growth_rate(counts)
    assert h_fit == pytest.approx(h, rel=0.02)


def test_budget_guard():
    with pytest.raises(EnumerationBudgetError):
        ball_growth_bfs(GrowthModel((1.0, 1.0, 1.0)), 16.0)


def test_scale_covariance():
    base = GrowthModel((1.0, 0.5))
    h0 = growth_rate_transfer(base)
    for c in (0.5, 2.0, 3.0):
        hc = growth_rate_transfer(GrowthModel((c * 1.0, c * 0.5)))
        assert hc == pytest.approx(h0 / c, abs=1e-10)


def test_monotone_in_each_length():
    # h never increases when any generator gets longer (5x5 grid)
    grid = np.linspace(0.5, 2.5, 5)
    H = np.array([[growth_rate_transfer(GrowthModel((a, b))) for b in grid]
                  for a in grid])
    assert np.all(np.diff(H, axis=0) <= 1e-12)
    assert np.all(np.diff(H, axis=1) <= 1e-12)


def test_compare_entropy_identity():
    rep = compare_entropy(GrowthModel((1.0, 1.0)), GrowthModel((1.0, 1.0)),
                          with_enumeration=False)
    assert rep["h_transfer_a"] == rep["h_transfer_b"]
    assert rep["ordering_ok"]


def test_compare_entropy_shortened_loop():
    rep = compare_entropy(GrowthModel((1.0, 1.0)), GrowthModel((1.0, 0.5)))
    assert rep["h_transfer_a"] == pytest.approx(math.log(3.0), abs=1e-9)
    assert rep["h_transfer_b"] == pytest.approx(1.5127, abs=1e-3)
    assert rep["ordering_ok"] and rep["strict"]
    # both enumeration cross-checks within 2%
    assert rep["h_fit_a"] == pytest.approx(rep["h_transfer_a"], rel=0.02)
    assert rep["h_fit_b"] == pytest.approx(rep["h_transfer_b"], rel=0.02)


def test_rank_mismatch_rejected():
    with pytest.raises(ValueError):
        compare_entropy(GrowthModel((1.0,)), GrowthModel((1.0, 1.0)))
