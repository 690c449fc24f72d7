"""Kurzweil-Stieltjes integrals against integrators with finitely many jumps.

For ``h = int density + sum of right jumps`` the integral reduces to

    int_a^b phi dh = int_a^b phi(s) density(s) ds + sum_{a <= tau_j < b} phi(tau_j) size_j

where ``phi(tau_j)`` is the value *at* the jump time. That makes indefinite
integrals left-continuous and the integral additive over adjacent intervals.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .errors import QuadratureError
from .quadrature import DEFAULT_TOL, integrate_pieces
from .regulated import Integrator, JumpRecord, RegulatedPath, Segment


@dataclass(frozen=True)
class IntegrandFn:
    """A regulated integrand and the times where it may be discontinuous."""

    fn: Callable[[float], object]
    discontinuities: tuple[float, ...] = ()

    def __call__(self, t: float):
        return self.fn(t)

    @classmethod
    def of(cls, phi) -> "IntegrandFn":
        return phi if isinstance(phi, IntegrandFn) else cls(phi)

    @classmethod
    def along_path(cls, fn: Callable[[float], object], path: RegulatedPath) -> "IntegrandFn":
        """Integrand built from a path; inherits the path's jump times."""
        return cls(fn, path.jump_times)


def ks_integral(phi, h: Integrator, a: float, b: float, tol: float = DEFAULT_TOL):
    """``int_a^b phi dh``; scalar, vector or matrix valued like ``phi``.

    The jump at ``a`` (if any) is included and the jump at ``b`` excluded.
    Reversed limits flip the sign.
    """
    phi = IntegrandFn.of(phi)
    if b < a:
        return -ks_integral(phi, h, b, a, tol)
    if a < 0.0 or b > h.T:
        raise ValueError(f"[{a!r}, {b!r}] is not inside [0, {h.T!r}]")
    total = None
    if not h.density_is_zero and b > a:
        breaks = tuple(phi.discontinuities) + h.jump_times
        total = integrate_pieces(lambda s: phi(s) * h.density_at(s), a, b, breaks, tol)
    for tau, size in h.jumps:
        if a <= tau < b:
            v = np.asarray(phi(tau), dtype=float) * size
            if not np.all(np.isfinite(v)):
                raise QuadratureError(f"integrand is not finite at jump t={tau!r}")
            total = v if total is None else total + v
    if total is None:
        v = np.asarray(phi(a), dtype=float)
        total = np.zeros_like(v)
    return float(total) if np.ndim(total) == 0 else np.asarray(total)


def riemann_integral(phi, a: float, b: float, tol: float = DEFAULT_TOL):
    """``int_a^b phi(s) ds`` honouring the integrand's discontinuity list."""
    phi = IntegrandFn.of(phi)
    out = integrate_pieces(phi, a, b, phi.discontinuities, tol)
    return float(out) if np.ndim(out) == 0 else out


def cumulative(phi, h: Integrator, grid: Sequence[float], tol: float = DEFAULT_TOL) -> list:
    """``[int_{grid[0]}^{t} phi dh for t in grid]`` using additivity.

    ``grid`` must be nondecreasing; the tolerance is spent per subinterval.
    """
    phi = IntegrandFn.of(phi)
    out = []
    acc = None
    prev = grid[0]
    for t in grid:
        piece = ks_integral(phi, h, prev, t, tol)
        acc = piece if acc is None else acc + piece
        out.append(acc)
        prev = t
    return out


def _scalar(v) -> float:
    return float(np.asarray(v, dtype=float).reshape(-1)[0])


def indefinite(phi, h: Integrator, tol: float = DEFAULT_TOL) -> RegulatedPath:
    """``H(t) = int_0^t phi dh`` as a scalar left-continuous path.

    Between jumps ``H`` is evaluated lazily by quadrature from the preceding
    segment start, so each evaluation costs one adaptive integral.
    """
    phi = IntegrandFn.of(phi)
    cuts = [0.0, *h.jump_times, h.T]
    segments = []
    jumps = []
    start_value = 0.0
    for k, (lo, hi) in enumerate(zip(cuts[:-1], cuts[1:])):
        # within (lo, hi] no jump of h contributes except the one at lo
        jump_lo = h.jump_at(lo) if k > 0 else 0.0
        base = start_value

        def seg_fn(t, lo=lo, base=base, jump_lo=jump_lo):
            if t == lo:
                return np.array([base])
            v = base + (_scalar(phi(lo)) * jump_lo if jump_lo else 0.0)
            if not h.density_is_zero:
                v += integrate_pieces(lambda s: _scalar(phi(s)) * h.density_at(s), lo, t,
                                      phi.discontinuities, tol)
            return np.array([v])

        segments.append(Segment(lo, hi, seg_fn))
        left = float(seg_fn(hi)[0])
        if hi < h.T:
            right = left + _scalar(phi(hi)) * h.jump_at(hi)
            jumps.append(JumpRecord(hi, np.array([left]), np.array([right])))
            start_value = left
    return RegulatedPath(segments, jumps, 1)
