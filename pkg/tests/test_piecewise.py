import json

import numpy as np
import pytest

from drawstring.errors import DomainError, MalformedProfileError
from drawstring.piecewise import (
    ExprSegment,
    PiecewiseC2Function,
    SplineSegment,
    bump,
    const_function,
    smoothstep,
    smoothstep_d1,
)


def hyper_u(a, b):
    return PiecewiseC2Function([ExprSegment(a, b, "log_sqrt1p_sq")])


def test_segments_must_tile():
    s1 = ExprSegment(0.0, 1.0, "identity")
    s2 = ExprSegment(1.5, 2.0, "identity")
    with pytest.raises(MalformedProfileError):
        PiecewiseC2Function([s1, s2])


def test_no_extrapolation():
    g = hyper_u(0.0, 2.0)
    with pytest.raises(DomainError):
        g(2.5)
    with pytest.raises(DomainError):
        g(-0.1)


def test_expr_derivatives_match_fd():
    g = PiecewiseC2Function(
        [ExprSegment(0.1, 2.0, "x_sqrt1p_sq", val_scale=1.3, arg_scale=0.7, arg_shift=0.2)]
    )
    rs = np.linspace(0.2, 1.9, 11)
    h = 1e-5
    d1_fd = (g(rs + h) - g(rs - h)) / (2 * h)
    d2_fd = (g(rs + h) - 2 * g(rs) + g(rs - h)) / h**2
    assert np.allclose(g.d1(rs), d1_fd, atol=1e-8)
    assert np.allclose(g.d2(rs), d2_fd, atol=1e-5)


def test_spline_segment_reproduces_cubic():
    # a clamped spline through samples of an actual cubic is that cubic
    x = np.linspace(0.0, 1.0, 9)
    y = 2 * x**3 - x + 0.5
    seg = SplineSegment(0.0, 1.0, x, y, d1a=-1.0, d1b=6.0 - 1.0)
    rs = np.linspace(0.0, 1.0, 57)
    assert np.allclose(seg.value(rs), 2 * rs**3 - rs + 0.5, atol=1e-13)
    assert np.allclose(seg.d2(rs), 12 * rs, atol=1e-10)


def test_junction_certification_classes():
    left = ExprSegment(0.0, 1.0, "identity")           # value 1, slope 1 at 1
    right_c0 = ExprSegment(1.0, 2.0, "zero", val_offset=1.0)  # value matches, slope 0
    g = PiecewiseC2Function([left, right_c0], junctions=["C0"])
    assert g.junctions_ok()
    g_wrong = PiecewiseC2Function([left, right_c0], junctions=["C1"])
    assert not g_wrong.junctions_ok()


def test_restrict_is_exact_on_splines():
    rng = np.random.default_rng(3)
    x = np.linspace(0.0, 2.0, 41)
    y = np.sin(x) + 0.1 * rng.standard_normal(x.size)
    seg = SplineSegment(0.0, 2.0, x, y, d1a=1.0, d1b=np.cos(2.0))
    g = PiecewiseC2Function([seg])
    sub = g.restrict(0.37, 1.62)
    rs = np.linspace(0.37, 1.62, 301)
    assert np.allclose(sub(rs), g(rs), atol=1e-13)
    assert np.allclose(sub.d2(rs), g.d2(rs), atol=1e-9)


def test_transformed_matches_composition():
    g = hyper_u(0.0, 3.0)
    t = g.transformed(arg_scale=2.0, arg_shift=0.5, val_scale=-1.5, val_offset=0.25)
    rs = np.linspace(-0.2, 1.2, 31)
    assert np.allclose(t(rs), -1.5 * g(2.0 * rs + 0.5) + 0.25, atol=1e-14)
    assert np.allclose(t.d1(rs), -3.0 * g.d1(2.0 * rs + 0.5), atol=1e-14)


def test_json_round_trip_lossless():
    x = np.linspace(0.5, 1.0, 17)
    segs = [
        ExprSegment(0.0, 0.5, "sinh", val_scale=0.3, arg_scale=2.0),
        SplineSegment(0.5, 1.0, x, np.cosh(x), d1a=np.sinh(0.5), d1b=np.sinh(1.0)),
    ]
    g = PiecewiseC2Function(segs, junctions=["C0"])
    blob = json.dumps(g.to_dict())
    g2 = PiecewiseC2Function.from_dict(json.loads(blob))
    rs = np.linspace(0.0, 1.0, 100)
    assert np.max(np.abs(g(rs) - g2(rs))) <= 1e-12
    assert np.max(np.abs(g.d2(rs) - g2.d2(rs))) == 0.0


def test_concat_and_merge():
    s1 = ExprSegment(0.0, 1.0, "sinh")
    s2 = ExprSegment(1.0, 2.0, "sinh")
    g = PiecewiseC2Function([s1]).concat(PiecewiseC2Function([s2]))
    assert len(g.segments) == 2
    merged = g.merged()
    assert len(merged.segments) == 1
    assert merged.b == 2.0


def test_smoothstep_properties():
    x = np.linspace(-0.5, 1.5, 201)
    s = smoothstep(x)
    assert np.all(s[x <= 0] == 0)
    assert np.all(s[x >= 1] == 1)
    # strictly interior away from the right end (the flat exp(-1/x) tail
    # saturates to 1.0 in double precision beyond x ~ 0.97)
    interior = (x > 0.01) & (x < 0.95)
    assert np.all((s[interior] > 0) & (s[interior] < 1))
    # derivative consistent with FD
    h = 1e-7
    mid = np.linspace(0.05, 0.95, 19)
    fd = (smoothstep(mid + h) - smoothstep(mid - h)) / (2 * h)
    assert np.allclose(smoothstep_d1(mid), fd, atol=1e-5)
    assert bump(np.array([-1.0, 1.0, 2.0])).tolist() == [0.0, 0.0, 0.0]
    assert bump(np.array([0.0]))[0] == 1.0


def test_const_function():
    g = const_function(0.0, 4.0, -0.7)
    rs = np.linspace(0, 4, 9)
    assert np.all(g(rs) == -0.7)
    assert np.all(g.d1(rs) == 0)
