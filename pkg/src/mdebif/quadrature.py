"""Adaptive Simpson quadrature with Richardson correction.

Works for scalar and array-valued integrands; the error test uses the
max-abs norm of the difference between the one- and two-panel estimates.
"""
from __future__ import annotations

import math
from typing import Callable, Sequence

import numpy as np

from .errors import QuadratureError

MAX_DEPTH = 60
DEFAULT_TOL = 1e-10
_EPS = np.finfo(float).eps


def _check(v, t):
    arr = np.asarray(v, dtype=float)
    if not np.all(np.isfinite(arr)):
        raise QuadratureError(f"integrand is not finite at t={t!r}")
    return arr


def adaptive_simpson(fn: Callable[[float], object], a: float, b: float,
                     tol: float = DEFAULT_TOL, max_depth: int = MAX_DEPTH,
                     panels: int = 8):
    """Integrate ``fn`` over ``[a, b]`` to absolute tolerance ``tol``.

    The interval is first cut into ``panels`` pieces so that integrands
    vanishing at the coarse Simpson nodes are not accepted spuriously.
    Returns a float for scalar integrands, an ndarray otherwise.
    """
    if b == a:
        return _zero_like(fn, a)
    if b < a:
        return -adaptive_simpson(fn, b, a, tol, max_depth, panels)
    edges = np.linspace(a, b, panels + 1)
    total = None
    for lo, hi in zip(edges[:-1], edges[1:]):
        piece = _simpson_panel(fn, float(lo), float(hi), tol * (hi - lo) / (b - a), max_depth)
        total = piece if total is None else total + piece
    return float(total) if np.ndim(total) == 0 else total


def _zero_like(fn, a):
    v = _check(fn(a), a)
    return 0.0 if v.ndim == 0 else np.zeros_like(v)


def _simpson_panel(fn, a, b, tol, max_depth):
    fa = _check(fn(a), a)
    fb = _check(fn(b), b)
    m = 0.5 * (a + b)
    fm = _check(fn(m), m)
    whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb)
    total = np.zeros_like(whole)
    stack = [(a, b, fa, fm, fb, whole, tol, 0)]
    while stack:
        a, b, fa, fm, fb, whole, tol, depth = stack.pop()
        m = 0.5 * (a + b)
        lm, rm = 0.5 * (a + m), 0.5 * (m + b)
        flm = _check(fn(lm), lm)
        frm = _check(fn(rm), rm)
        left = (m - a) / 6.0 * (fa + 4.0 * flm + fm)
        right = (b - m) / 6.0 * (fm + 4.0 * frm + fb)
        diff = left + right - whole
        err = float(np.max(np.abs(diff)))
        scale = float(np.max(np.abs(left))) + float(np.max(np.abs(right)))
        if err <= 15.0 * tol or err <= 64.0 * _EPS * scale:
            total = total + left + right + diff / 15.0
            continue
        if depth + 1 >= max_depth:
            raise QuadratureError(
                f"adaptive Simpson did not converge on [{a!r}, {b!r}] within depth {max_depth}"
            )
        stack.append((a, m, fa, flm, fm, left, 0.5 * tol, depth + 1))
        stack.append((m, b, fm, frm, fb, right, 0.5 * tol, depth + 1))
    return total


def integrate_pieces(fn, a: float, b: float, breaks: Sequence[float] = (),
                     tol: float = DEFAULT_TOL):
    """Integrate over ``[a, b]`` without any panel straddling a point of ``breaks``.

    ``tol`` is shared among the pieces in proportion to their length.
    """
    if b == a:
        return _zero_like(fn, a)
    if b < a:
        return -integrate_pieces(fn, b, a, breaks, tol)
    cuts = [a] + sorted(p for p in set(breaks) if a < p < b) + [b]
    total = None
    for lo, hi in zip(cuts[:-1], cuts[1:]):
        piece = adaptive_simpson(fn, lo, hi, tol * (hi - lo) / (b - a))
        total = piece if total is None else total + piece
    return total


def bisect_root(fn: Callable[[float], float], a: float, b: float, xtol: float = 1e-12,
                max_iter: int = 200) -> float:
    """Plain bisection for a sign change of ``fn`` on ``[a, b]``."""
    fa = fn(a)
    if fa == 0.0:
        return a
    fb = fn(b)
    if fb == 0.0:
        return b
    if math.copysign(1.0, fa) == math.copysign(1.0, fb):
        raise ValueError("bisect_root needs a sign change")
    for _ in range(max_iter):
        if b - a <= xtol:
            break
        m = 0.5 * (a + b)
        fm = fn(m)
        if fm == 0.0:
            return m
        if (fm < 0.0) == (fa < 0.0):
            a, fa = m, fm
        else:
            b = m
    return 0.5 * (a + b)
