"""Piecewise-defined scalar functions of one variable with certified junctions.

A PiecewiseC2Function is an ordered list of segments tiling an interval.
Each segment evaluates value / first / second derivative, and is one of

* an expression segment: ``g(r) = val_scale * F(arg_scale * r + arg_shift)
  + val_offset`` for a base F from a small closed-form catalog (exact
  derivatives, lossless JSON round-trip), or
* a spline segment: a clamped C2 cubic interpolant through stored samples
  (the spline's own second derivative is used, never re-differenced).

Evaluation outside the domain raises; nothing is ever extrapolated.  Every
interior breakpoint carries a declared smoothness class which can be
numerically certified (value and derivatives matching across the junction).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import List, Sequence, Tuple, Union

import numpy as np
from scipy.interpolate import CubicSpline

from .errors import DomainError, MalformedProfileError

__all__ = [
    "ExprSegment",
    "SplineSegment",
    "LogSplineSegment",
    "PiecewiseC2Function",
    "const_function",
    "expr_function",
    "smoothstep",
    "smoothstep_d1",
    "bump",
]

# ---------------------------------------------------------------------------
# closed-form base catalog: name -> (F, F', F'')

def _sq(x):
    return x * x


_BASES = {
    "zero": (
        lambda x: np.zeros_like(x),
        lambda x: np.zeros_like(x),
        lambda x: np.zeros_like(x),
    ),
    "identity": (
        lambda x: x,
        lambda x: np.ones_like(x),
        lambda x: np.zeros_like(x),
    ),
    "sinh": (np.sinh, np.cosh, np.sinh),
    # u-factor of the hyperbolic metric about a geodesic line: 0.5*log(1+x^2)
    "log_sqrt1p_sq": (
        lambda x: 0.5 * np.log1p(_sq(x)),
        lambda x: x / (1.0 + _sq(x)),
        lambda x: (1.0 - _sq(x)) / _sq(1.0 + _sq(x)),
    ),
    # f-factor of the hyperbolic metric: x*sqrt(1+x^2)
    "x_sqrt1p_sq": (
        lambda x: x * np.sqrt(1.0 + _sq(x)),
        lambda x: (1.0 + 2.0 * _sq(x)) / np.sqrt(1.0 + _sq(x)),
        lambda x: x * (3.0 + 2.0 * _sq(x)) * (1.0 + _sq(x)) ** -1.5,
    ),
    "arcsinh": (
        np.arcsinh,
        lambda x: 1.0 / np.sqrt(1.0 + _sq(x)),
        lambda x: -x * (1.0 + _sq(x)) ** -1.5,
    ),
}


@dataclass(frozen=True)
class ExprSegment:
    """g(r) = val_scale * F(arg_scale*r + arg_shift) + val_offset on [a, b]."""

    a: float
    b: float
    base: str
    val_scale: float = 1.0
    arg_scale: float = 1.0
    arg_shift: float = 0.0
    val_offset: float = 0.0

    kind = "expr"

    def __post_init__(self):
        if self.base not in _BASES:
            raise MalformedProfileError(f"unknown expression base {self.base!r}")
        if not self.b > self.a:
            raise MalformedProfileError("segment interval is empty or reversed")

    def value(self, r):
        f, _, _ = _BASES[self.base]
        return self.val_scale * f(self.arg_scale * r + self.arg_shift) + self.val_offset

    def d1(self, r):
        _, f1, _ = _BASES[self.base]
        return self.val_scale * self.arg_scale * f1(self.arg_scale * r + self.arg_shift)

    def d2(self, r):
        _, _, f2 = _BASES[self.base]
        return (
            self.val_scale
            * self.arg_scale ** 2
            * f2(self.arg_scale * r + self.arg_shift)
        )

    def transformed(self, arg_scale=1.0, arg_shift=0.0, val_scale=1.0, val_offset=0.0):
        # new(r) = val_scale * old(arg_scale*r + arg_shift) + val_offset
        if arg_scale <= 0:
            raise MalformedProfileError("arg_scale must be positive")
        return ExprSegment(
            a=(self.a - arg_shift) / arg_scale,
            b=(self.b - arg_shift) / arg_scale,
            base=self.base,
            val_scale=val_scale * self.val_scale,
            arg_scale=self.arg_scale * arg_scale,
            arg_shift=self.arg_scale * arg_shift + self.arg_shift,
            val_offset=val_scale * self.val_offset + val_offset,
        )

    def restricted(self, a, b):
        return replace(self, a=float(a), b=float(b))

    def same_expression(self, other, tol=1e-13) -> bool:
        if not isinstance(other, ExprSegment) or other.base != self.base:
            return False
        mine = (self.val_scale, self.arg_scale, self.arg_shift, self.val_offset)
        theirs = (other.val_scale, other.arg_scale, other.arg_shift, other.val_offset)
        return all(
            abs(x - y) <= tol * max(1.0, abs(x), abs(y)) for x, y in zip(mine, theirs)
        )

    def to_dict(self):
        return {
            "kind": "expr",
            "a": self.a,
            "b": self.b,
            "base": self.base,
            "val_scale": self.val_scale,
            "arg_scale": self.arg_scale,
            "arg_shift": self.arg_shift,
            "val_offset": self.val_offset,
        }


@dataclass(frozen=True)
class SplineSegment:
    """Clamped C2 cubic through (x, y) with end slopes (d1a, d1b) on [a, b]."""

    a: float
    b: float
    x: np.ndarray
    y: np.ndarray
    d1a: float
    d1b: float
    _cs: CubicSpline = field(init=False, repr=False, compare=False)

    kind = "spline"

    def __post_init__(self):
        x = np.asarray(self.x, dtype=float)
        y = np.asarray(self.y, dtype=float)
        if x.ndim != 1 or x.size < 2 or y.shape != x.shape:
            raise MalformedProfileError("spline segment needs matching 1-d samples")
        if np.any(np.diff(x) <= 0):
            raise MalformedProfileError("spline knots must increase strictly")
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "y", y)
        cs = CubicSpline(x, y, bc_type=((1, float(self.d1a)), (1, float(self.d1b))))
        object.__setattr__(self, "_cs", cs)

    def value(self, r):
        return self._cs(r)

    def d1(self, r):
        return self._cs(r, 1)

    def d2(self, r):
        return self._cs(r, 2)

    def transformed(self, arg_scale=1.0, arg_shift=0.0, val_scale=1.0, val_offset=0.0):
        if arg_scale <= 0:
            raise MalformedProfileError("arg_scale must be positive")
        # affine reparametrizations map cubics to cubics, so rebuilding the
        # clamped interpolant from transformed data reproduces the function
        new_x = (self.x - arg_shift) / arg_scale
        new_y = val_scale * self.y + val_offset
        slope = val_scale * arg_scale
        return SplineSegment(
            a=(self.a - arg_shift) / arg_scale,
            b=(self.b - arg_shift) / arg_scale,
            x=new_x,
            y=new_y,
            d1a=slope * self.d1a,
            d1b=slope * self.d1b,
        )

    def restricted(self, a, b):
        a, b = float(a), float(b)
        inner = self.x[(self.x > a) & (self.x < b)]
        new_x = np.concatenate(([a], inner, [b]))
        new_y = self._cs(new_x)
        return SplineSegment(
            a=a,
            b=b,
            x=new_x,
            y=new_y,
            d1a=float(self._cs(a, 1)),
            d1b=float(self._cs(b, 1)),
        )

    def to_dict(self):
        return {
            "kind": "spline",
            "a": self.a,
            "b": self.b,
            "x": self.x.tolist(),
            "y": self.y.tolist(),
            "d1a": self.d1a,
            "d1b": self.d1b,
        }


@dataclass(frozen=True)
class LogSplineSegment:
    """G(lam) = base0 + base1*lam + S(lam) in lam = log(r); the value is
    G(lam) or exp(G(lam)).

    The natural representation for cusp-like zones spanning many decades of
    r, where d/dr-type splines overflow: derivatives come out as
    G'(lam)/r-combinations, stable at any representable r > 0.  The affine
    baseline keeps the stored spline values small, so the rounding noise that
    d2 evaluation amplifies scales with the residual, not with |G|.  With
    exp_value the segment is positive by construction (used for warp factors
    whose logarithm is the smooth quantity).
    """

    a: float
    b: float
    lam: np.ndarray          # knots in log(r), strictly increasing
    y: np.ndarray            # S values at the knots (residual after baseline)
    d1a: float               # dS/dlam at the ends
    d1b: float
    exp_value: bool = False
    base0: float = 0.0
    base1: float = 0.0
    _cs: CubicSpline = field(init=False, repr=False, compare=False)

    kind = "logspline"

    def __post_init__(self):
        lam = np.asarray(self.lam, dtype=float)
        y = np.asarray(self.y, dtype=float)
        if lam.ndim != 1 or lam.size < 2 or y.shape != lam.shape:
            raise MalformedProfileError("log-spline needs matching 1-d samples")
        if np.any(np.diff(lam) <= 0):
            raise MalformedProfileError("log-spline knots must increase strictly")
        if not self.a > 0:
            raise MalformedProfileError("log-spline segments live at r > 0")
        object.__setattr__(self, "lam", lam)
        object.__setattr__(self, "y", y)
        cs = CubicSpline(lam, y, bc_type=((1, float(self.d1a)), (1, float(self.d1b))))
        object.__setattr__(self, "_cs", cs)

    @classmethod
    def through(cls, a, b, lam, g_values, dg_a, dg_b, exp_value=False):
        """Build from full G data, detrending by the chord through the ends."""
        lam = np.asarray(lam, dtype=float)
        g = np.asarray(g_values, dtype=float)
        base1 = (g[-1] - g[0]) / (lam[-1] - lam[0])
        base0 = g[0] - base1 * lam[0]
        return cls(a=a, b=b, lam=lam, y=g - (base0 + base1 * lam),
                   d1a=dg_a - base1, d1b=dg_b - base1,
                   exp_value=exp_value, base0=base0, base1=base1)

    def _g(self, lam, order=0):
        if order == 0:
            return self.base0 + self.base1 * lam + self._cs(lam)
        if order == 1:
            return self.base1 + self._cs(lam, 1)
        return self._cs(lam, 2)

    def value(self, r):
        s = self._g(np.log(np.asarray(r, dtype=float)))
        return np.exp(s) if self.exp_value else s

    def d1(self, r):
        r = np.asarray(r, dtype=float)
        lam = np.log(r)
        g1 = self._g(lam, 1)
        if self.exp_value:
            return np.exp(self._g(lam)) * g1 / r
        return g1 / r

    def d2(self, r):
        # r*r may under/overflow at extreme radii; the result is then the
        # honest +-inf (d2 of cusp-type functions is astronomical there)
        r = np.asarray(r, dtype=float)
        lam = np.log(r)
        g1 = self._g(lam, 1)
        g2 = self._g(lam, 2)
        with np.errstate(divide="ignore", over="ignore"):
            if self.exp_value:
                return np.exp(self._g(lam)) * (g2 - g1 + g1 * g1) / (r * r)
            return (g2 - g1) / (r * r)

    def transformed(self, arg_scale=1.0, arg_shift=0.0, val_scale=1.0, val_offset=0.0):
        # new(r) = val_scale * old(arg_scale*r + arg_shift) + val_offset;
        # only transforms preserving the log-affine structure are supported
        if arg_scale <= 0:
            raise MalformedProfileError("arg_scale must be positive")
        if arg_shift != 0.0:
            raise MalformedProfileError("log-spline segments do not support arg shifts")
        dlam = math.log(arg_scale)
        if self.exp_value:
            if val_offset != 0.0:
                raise MalformedProfileError(
                    "exp-valued log-spline supports scaling only"
                )
            if val_scale <= 0:
                raise MalformedProfileError("exp-valued log-spline needs val_scale > 0")
            new_y = self.y
            d1a, d1b = self.d1a, self.d1b
            base0 = self.base0 + self.base1 * dlam + math.log(val_scale)
            base1 = self.base1
        else:
            new_y = val_scale * self.y
            d1a, d1b = val_scale * self.d1a, val_scale * self.d1b
            base0 = val_scale * (self.base0 + self.base1 * dlam) + val_offset
            base1 = val_scale * self.base1
        return LogSplineSegment(
            a=self.a / arg_scale,
            b=self.b / arg_scale,
            lam=self.lam - dlam,
            y=new_y,
            d1a=d1a,
            d1b=d1b,
            exp_value=self.exp_value,
            base0=base0,
            base1=base1,
        )

    def restricted(self, a, b):
        a, b = float(a), float(b)
        la, lb = math.log(a), math.log(b)
        inner = self.lam[(self.lam > la) & (self.lam < lb)]
        new_lam = np.concatenate(([la], inner, [lb]))
        return LogSplineSegment(
            a=a,
            b=b,
            lam=new_lam,
            y=self._cs(new_lam),
            d1a=float(self._cs(la, 1)),
            d1b=float(self._cs(lb, 1)),
            exp_value=self.exp_value,
            base0=self.base0,
            base1=self.base1,
        )

    def to_dict(self):
        return {
            "kind": "logspline",
            "a": self.a,
            "b": self.b,
            "lam": self.lam.tolist(),
            "y": self.y.tolist(),
            "d1a": self.d1a,
            "d1b": self.d1b,
            "exp_value": self.exp_value,
            "base0": self.base0,
            "base1": self.base1,
        }


Segment = Union[ExprSegment, SplineSegment, LogSplineSegment]


def _segment_from_dict(d) -> Segment:
    if d["kind"] == "expr":
        return ExprSegment(
            a=d["a"],
            b=d["b"],
            base=d["base"],
            val_scale=d["val_scale"],
            arg_scale=d["arg_scale"],
            arg_shift=d["arg_shift"],
            val_offset=d["val_offset"],
        )
    if d["kind"] == "spline":
        return SplineSegment(
            a=d["a"],
            b=d["b"],
            x=np.asarray(d["x"], dtype=float),
            y=np.asarray(d["y"], dtype=float),
            d1a=d["d1a"],
            d1b=d["d1b"],
        )
    if d["kind"] == "logspline":
        return LogSplineSegment(
            a=d["a"],
            b=d["b"],
            lam=np.asarray(d["lam"], dtype=float),
            y=np.asarray(d["y"], dtype=float),
            d1a=d["d1a"],
            d1b=d["d1b"],
            exp_value=d["exp_value"],
            base0=d.get("base0", 0.0),
            base1=d.get("base1", 0.0),
        )
    raise MalformedProfileError(f"unknown segment kind {d.get('kind')!r}")


JUNCTION_CLASSES = ("C0", "C1", "C1,1", "Cinf")
# how many derivative orders must match across the junction, per class
_ORDERS = {"C0": 1, "C1": 2, "C1,1": 2, "Cinf": 3}


class PiecewiseC2Function:
    """Ordered segments tiling an interval, with junction smoothness metadata."""

    def __init__(self, segments: Sequence[Segment], junctions: Sequence[str] = None):
        segments = list(segments)
        if not segments:
            raise MalformedProfileError("need at least one segment")
        scale = max(1.0, abs(segments[0].a), abs(segments[-1].b))
        for left, right in zip(segments[:-1], segments[1:]):
            if abs(left.b - right.a) > 1e-12 * scale:
                raise MalformedProfileError(
                    f"segments do not tile: gap between {left.b} and {right.a}"
                )
        if junctions is None:
            junctions = ["Cinf"] * (len(segments) - 1)
        junctions = list(junctions)
        if len(junctions) != len(segments) - 1:
            raise MalformedProfileError("need one junction class per interior breakpoint")
        for cls in junctions:
            if cls not in JUNCTION_CLASSES:
                raise MalformedProfileError(f"unknown junction class {cls!r}")
        self.segments: List[Segment] = segments
        self.junctions: List[str] = junctions
        self._breaks = np.array([s.b for s in segments[:-1]], dtype=float)
        self.a = float(segments[0].a)
        self.b = float(segments[-1].b)

    # -- evaluation ---------------------------------------------------------

    @property
    def domain(self) -> Tuple[float, float]:
        return (self.a, self.b)

    def breakpoints(self) -> np.ndarray:
        """Interior junction locations."""
        return self._breaks.copy()

    def _clip(self, r):
        r = np.asarray(r, dtype=float)
        tol = 1e-12 * max(1.0, abs(self.a), abs(self.b))
        if np.any(r < self.a - tol) or np.any(r > self.b + tol):
            bad_lo = float(np.min(r))
            bad_hi = float(np.max(r))
            raise DomainError(
                f"evaluation outside domain [{self.a}, {self.b}]: "
                f"got values in [{bad_lo}, {bad_hi}]"
            )
        return np.clip(r, self.a, self.b)

    def _eval(self, r, order: int):
        r = self._clip(r)
        scalar = r.ndim == 0
        rv = np.atleast_1d(r)
        out = np.empty_like(rv)
        idx = np.searchsorted(self._breaks, rv, side="right")
        for i, seg in enumerate(self.segments):
            mask = idx == i
            if not np.any(mask):
                continue
            fn = (seg.value, seg.d1, seg.d2)[order]
            out[mask] = fn(rv[mask])
        return float(out[0]) if scalar else out

    def value(self, r):
        return self._eval(r, 0)

    __call__ = value

    def d1(self, r):
        return self._eval(r, 1)

    def d2(self, r):
        return self._eval(r, 2)

    def segment_at(self, r: float) -> Segment:
        r = float(self._clip(r))
        i = int(np.searchsorted(self._breaks, r, side="right"))
        return self.segments[i]

    # -- junction certification ---------------------------------------------

    def certify_junctions(self, rel_tol: float = 1e-9):
        """Check declared smoothness numerically at every interior breakpoint.

        Returns a list of dicts with the measured one-sided mismatches; raises
        nothing (callers decide what a failure means).
        """
        report = []
        for i, (brk, cls) in enumerate(zip(self._breaks, self.junctions)):
            left = self.segments[i]
            right = self.segments[i + 1]
            entry = {"r": float(brk), "declared": cls, "ok": True, "mismatch": {}}
            for order, name in enumerate(("value", "d1", "d2")):
                lv = float((left.value, left.d1, left.d2)[order](np.float64(brk)))
                rv = float((right.value, right.d1, right.d2)[order](np.float64(brk)))
                rel = abs(lv - rv) / max(1.0, abs(lv), abs(rv))
                entry["mismatch"][name] = rel
                if order < _ORDERS[cls] and rel > rel_tol:
                    entry["ok"] = False
            report.append(entry)
        return report

    def junctions_ok(self, rel_tol: float = 1e-9) -> bool:
        return all(e["ok"] for e in self.certify_junctions(rel_tol))

    # -- structure manipulation ----------------------------------------------

    def transformed(self, arg_scale=1.0, arg_shift=0.0, val_scale=1.0, val_offset=0.0):
        """new(r) = val_scale * self(arg_scale*r + arg_shift) + val_offset."""
        segs = [
            s.transformed(arg_scale, arg_shift, val_scale, val_offset)
            for s in self.segments
        ]
        return PiecewiseC2Function(segs, list(self.junctions))

    def shifted(self, delta: float):
        """new(r) = self(r - delta): translate the graph right by delta."""
        return self.transformed(arg_scale=1.0, arg_shift=-delta)

    def restrict(self, a: float, b: float):
        a, b = float(a), float(b)
        tol = 1e-12 * max(1.0, abs(self.a), abs(self.b))
        if a < self.a - tol or b > self.b + tol or not b > a:
            raise DomainError(f"restriction [{a}, {b}] outside [{self.a}, {self.b}]")
        a = max(a, self.a)
        b = min(b, self.b)
        segs = []
        juncs = []
        for i, seg in enumerate(self.segments):
            lo = max(seg.a, a)
            hi = min(seg.b, b)
            if hi - lo <= tol:
                continue
            if lo > seg.a + tol or hi < seg.b - tol:
                segs.append(seg.restricted(lo, hi))
            else:
                segs.append(seg)
            if segs and len(segs) >= 2:
                juncs.append(self.junctions[i - 1])
        return PiecewiseC2Function(segs, juncs)

    def concat(self, other: "PiecewiseC2Function", junction: str = "Cinf"):
        tol = 1e-9 * max(1.0, abs(self.b))
        if abs(other.a - self.b) > tol:
            raise MalformedProfileError(
                f"cannot concatenate: domains meet at {self.b} vs {other.a}"
            )
        segs = self.segments + other.segments
        juncs = self.junctions + [junction] + other.junctions
        return PiecewiseC2Function(segs, juncs)

    def merged(self):
        """Fuse adjacent expression segments carrying the same closed form."""
        segs = [self.segments[0]]
        juncs = []
        for seg, junc in zip(self.segments[1:], self.junctions):
            prev = segs[-1]
            if (
                isinstance(prev, ExprSegment)
                and isinstance(seg, ExprSegment)
                and prev.same_expression(seg)
            ):
                segs[-1] = replace(prev, b=seg.b)
            else:
                segs.append(seg)
                juncs.append(junc)
        return PiecewiseC2Function(segs, juncs)

    # -- (de)serialization ----------------------------------------------------

    def to_dict(self):
        return {
            "domain": [self.a, self.b],
            "segments": [s.to_dict() for s in self.segments],
            "junctions": list(self.junctions),
        }

    @classmethod
    def from_dict(cls, d):
        return cls([_segment_from_dict(s) for s in d["segments"]], d["junctions"])


def const_function(a: float, b: float, value: float) -> PiecewiseC2Function:
    return PiecewiseC2Function([ExprSegment(a, b, "zero", val_offset=value)])


def expr_function(a: float, b: float, base: str, **kw) -> PiecewiseC2Function:
    return PiecewiseC2Function([ExprSegment(a, b, base, **kw)])


# ---------------------------------------------------------------------------
# C-infinity transition profiles built from exp(-1/x)

def _sigma(x):
    x = np.asarray(x, dtype=float)
    out = np.zeros_like(x)
    pos = x > 0
    out[pos] = np.exp(-1.0 / x[pos])
    return out


def smoothstep(x):
    """C^inf step: 0 for x<=0, 1 for x>=1, strictly inside (0,1) between.

    All derivatives vanish at both ends, so compositions stay smooth and
    pieces glued along the flat ends are exactly constant there.
    """
    x = np.asarray(x, dtype=float)
    a = _sigma(x)
    b = _sigma(1.0 - x)
    return a / (a + b + np.where(a + b == 0.0, 1.0, 0.0))


def smoothstep_d1(x):
    x = np.asarray(x, dtype=float)
    a = _sigma(x)
    b = _sigma(1.0 - x)
    d = a + b
    out = np.zeros_like(x)
    inside = (x > 0) & (x < 1)
    xi = x[inside]
    ai = a[inside]
    bi = b[inside]
    da = ai / xi ** 2
    db = -bi / (1.0 - xi) ** 2
    out[inside] = (da * bi - ai * db) / d[inside] ** 2
    return out


def bump(x):
    """C^inf bump supported on (-1, 1), normalized to bump(0) = 1."""
    x = np.asarray(x, dtype=float)
    out = np.zeros_like(x)
    inside = np.abs(x) < 1.0
    xi = x[inside]
    out[inside] = np.exp(1.0 - 1.0 / (1.0 - xi * xi))
    return out
