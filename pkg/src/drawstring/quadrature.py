"""Adaptive Simpson quadrature with breakpoint-aware segment splitting.

Integrands in this package are piecewise smooth: smooth on each segment of a
piecewise function, with limited regularity at junctions.  The integrator
therefore never straddles a supplied breakpoint; each sub-interval is handled
by classic adaptive Simpson with the 15x error rule.
"""

from __future__ import annotations

import math
from typing import Callable, Iterable, Sequence

from .errors import QuadratureError

_MAX_DEPTH = 52


def _simpson(f, a, fa, b, fb, m, fm):
    return (b - a) / 6.0 * (fa + 4.0 * fm + fb)


def _adaptive(f, a, fa, b, fb, m, fm, whole, tol, depth):
    lm = 0.5 * (a + m)
    rm = 0.5 * (m + b)
    flm = f(lm)
    frm = f(rm)
    left = _simpson(f, a, fa, m, fm, lm, flm)
    right = _simpson(f, m, fm, b, fb, rm, frm)
    err = left + right - whole
    if abs(err) <= 15.0 * tol or (b - a) < 1e-15 * (1.0 + abs(a)):
        return left + right + err / 15.0
    if depth >= _MAX_DEPTH:
        raise QuadratureError(
            f"adaptive Simpson did not converge on [{a}, {b}] "
            f"(residual {abs(err):.3e} > 15*{tol:.3e})"
        )
    return _adaptive(f, a, fa, m, fm, lm, flm, left, 0.5 * tol, depth + 1) + _adaptive(
        f, m, fm, b, fb, rm, frm, right, 0.5 * tol, depth + 1
    )


def adaptive_simpson(f: Callable[[float], float], a: float, b: float,
                     abs_tol: float = 1e-8) -> float:
    """Integrate f over [a, b] to absolute tolerance abs_tol."""
    if b == a:
        return 0.0
    if b < a:
        return -adaptive_simpson(f, b, a, abs_tol)
    fa, fb = f(a), f(b)
    m = 0.5 * (a + b)
    fm = f(m)
    whole = _simpson(f, a, fa, b, fb, m, fm)
    return _adaptive(f, a, fa, b, fb, m, fm, whole, abs_tol, 0)


def integrate_with_breakpoints(f: Callable[[float], float], a: float, b: float,
                               breakpoints: Iterable[float] = (),
                               abs_tol: float = 1e-8) -> float:
    """Integrate f over [a, b], splitting at every interior breakpoint."""
    if b < a:
        return -integrate_with_breakpoints(f, b, a, breakpoints, abs_tol)
    cuts = sorted({float(x) for x in breakpoints if a < x < b})
    knots = [a] + cuts + [b]
    n = len(knots) - 1
    tol_piece = abs_tol / max(n, 1)
    total = 0.0
    for lo, hi in zip(knots[:-1], knots[1:]):
        if hi > lo:
            total += adaptive_simpson(f, lo, hi, tol_piece)
    return total


def power_of_two_search(pred: Callable[[float], bool], start: float = 1.0,
                        cap: float = 2.0 ** 64) -> float:
    """Smallest power-of-two multiple of `start` satisfying `pred`, by doubling."""
    q = start
    while not pred(q):
        q *= 2.0
        if q > cap:
            raise QuadratureError("doubling search exceeded its cap")
    return q


def check_monotone_decreasing(values: Sequence[float]) -> bool:
    return all(y <= x + 1e-15 for x, y in zip(values[:-1], values[1:]))


def fsum(parts: Iterable[float]) -> float:
    return math.fsum(parts)
