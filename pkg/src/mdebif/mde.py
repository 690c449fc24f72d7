"""Measure differential equations in integral form.

A solution of ``Dx = f(lambda, x, t) + g(x, t) Dh`` satisfies

    x(t) = x(0) + int_0^t f(lambda, x(s), s) ds + int_0^t g(x(s), s) dh(s).

Between the jump times of ``h`` this is the ODE ``x' = f + g * density``;
at a jump ``tau`` the state moves to ``x(tau+) = x(tau) + g(x(tau), tau) * size``
using the left value, and the path stays left-continuous.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.integrate import solve_ivp as _scipy_solve_ivp

from . import expr as ex
from .errors import DomainExitError, StepSizeError, ValidationError
from .kstieltjes import IntegrandFn, cumulative
from .regulated import Integrator, JumpRecord, RegulatedPath, Segment

_COMPILED_FAILURES = (ValueError, ZeroDivisionError, OverflowError, TypeError)


@dataclass(frozen=True)
class SolveSettings:
    rk_tol: float = 1e-9
    max_step: float = math.inf
    domain_check: bool = True
    method: str = "RK45"

    def __post_init__(self):
        if not self.rk_tol > 0:
            raise ValidationError(f"rk_tol must be positive, got {self.rk_tol!r}")
        if not self.max_step > 0:
            raise ValidationError(f"max_step must be positive, got {self.max_step!r}")

    def replace(self, **kw) -> "SolveSettings":
        from dataclasses import replace

        return replace(self, **kw)


@dataclass(frozen=True)
class ProblemDef:
    """Periodic measure differential equation on ``[0, T]``.

    ``f`` may use ``t``, ``lambda`` and ``x1..xn``; ``g`` must not use
    ``lambda``. ``omega_box`` is the open box the state has to stay in.
    ``reference_x0``, when given, is a state whose solution is T-periodic for
    every lambda (a known trivial branch).
    """

    n: int
    T: float
    f: tuple[ex.ExprNode, ...]
    g: tuple[ex.ExprNode, ...]
    h: Integrator
    lambda_interval: tuple[float, float]
    omega_box: tuple[tuple[float, float], ...]
    description: str = ""
    reference_x0: tuple[float, ...] | None = None
    _f_fn: Callable = field(init=False, repr=False, compare=False)
    _g_fn: Callable = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        n = self.n
        if not (isinstance(n, int) and n >= 1):
            raise ValidationError(f"dimension n must be a positive integer, got {n!r}")
        if len(self.f) != n or len(self.g) != n:
            raise ValidationError(f"f and g need {n} components each")
        if self.h.T != self.T:
            raise ValidationError(f"integrator period {self.h.T!r} differs from T={self.T!r}")
        ok_f = ex.allowed_variables(n)
        ok_g = ex.allowed_variables(n, allow_lambda=False)
        for i, e in enumerate(self.f):
            bad = [v for v in e.variables() if not ok_f(v)]
            if bad:
                raise ValidationError(f"f[{i}] uses unknown variables {sorted(bad)}")
        for i, e in enumerate(self.g):
            bad = [v for v in e.variables() if not ok_g(v)]
            if bad:
                raise ValidationError(f"g[{i}] may not use {sorted(bad)}")
        lo, hi = self.lambda_interval
        if not lo < hi:
            raise ValidationError(f"empty lambda interval {self.lambda_interval!r}")
        if len(self.omega_box) != n or any(not a < b for a, b in self.omega_box):
            raise ValidationError(f"omega box must have {n} nonempty intervals")
        if self.reference_x0 is not None and len(self.reference_x0) != n:
            raise ValidationError("reference_x0 has the wrong length")
        object.__setattr__(self, "_f_fn", ex.compile_tuple(self.f))
        object.__setattr__(self, "_g_fn", ex.compile_tuple(self.g))

    @classmethod
    def from_strings(cls, n: int, T: float, f: Sequence[str], g: Sequence[str], h: Integrator,
                     lambda_interval, omega_box, description: str = "",
                     reference_x0=None) -> "ProblemDef":
        fs = tuple(ex.parse(s, n) for s in f)
        gs = tuple(ex.parse(s, n, allow_lambda=False) for s in g)
        return cls(n, float(T), fs, gs, h, tuple(map(float, lambda_interval)),
                   tuple((float(a), float(b)) for a, b in omega_box), description,
                   None if reference_x0 is None else tuple(map(float, reference_x0)))

    @property
    def g_is_zero(self) -> bool:
        return all(e.is_zero() for e in self.g)

    def f_eval(self, lam: float, x, t: float) -> np.ndarray:
        xs = list(x)
        try:
            return np.array(self._f_fn(t, lam, xs), dtype=float)
        except _COMPILED_FAILURES:
            ex.explain_failure(self.f, t, lam, xs)

    def g_eval(self, x, t: float) -> np.ndarray:
        xs = list(x)
        try:
            return np.array(self._g_fn(t, 0.0, xs), dtype=float)
        except _COMPILED_FAILURES:
            ex.explain_failure(self.g, t, 0.0, xs)

    def in_omega(self, x) -> bool:
        return all(a < v < b for v, (a, b) in zip(x, self.omega_box))

    def in_lambda(self, lam: float) -> bool:
        lo, hi = self.lambda_interval
        return lo <= lam <= hi


class _SegmentFn:
    """Dense output of one smooth stretch, exact at the stored endpoint."""

    def __init__(self, sol, b: float, end: np.ndarray):
        self.sol = sol
        self.b = b
        self.end = end

    def __call__(self, t: float) -> np.ndarray:
        if t == self.b:
            return self.end.copy()
        return self.sol(t)


def _domain_events(p: ProblemDef):
    events = []
    for i, (lo, hi) in enumerate(p.omega_box):
        if math.isfinite(lo):
            ev = lambda t, y, i=i, lo=lo: y[i] - lo  # noqa: E731
            ev.terminal, ev.direction = True, -1
            events.append(ev)
        if math.isfinite(hi):
            ev = lambda t, y, i=i, hi=hi: hi - y[i]  # noqa: E731
            ev.terminal, ev.direction = True, -1
            events.append(ev)
    return events


def flow_segment(rhs, a: float, b: float, y0: np.ndarray, s: SolveSettings, events=None):
    """Integrate ``y' = rhs(t, y)`` on ``[a, b]`` with dense output.

    Returns ``(segment_fn, y_end)``; raises on step-size collapse or when a
    terminal event fires.
    """
    sol = _scipy_solve_ivp(rhs, (a, b), y0, method=s.method, rtol=s.rk_tol, atol=s.rk_tol,
                           max_step=s.max_step, dense_output=True, events=events or None)
    if sol.status == -1:
        raise StepSizeError(f"integration failed near t={sol.t[-1]!r}: {sol.message}")
    if sol.status == 1:
        t_exit = min(te[0] for te in sol.t_events if len(te))
        raise DomainExitError("state left the domain Omega", float(t_exit), sol.y[:, -1].copy())
    end = sol.y[:, -1].copy()
    return _SegmentFn(sol.sol, b, end), end


def solve_ivp(p: ProblemDef, lam: float, x0, s: SolveSettings | None = None) -> RegulatedPath:
    """Solve the initial value problem on ``[0, T]`` from ``x(0) = x0``."""
    s = s or SolveSettings()
    x = np.array(x0, dtype=float).reshape(-1)
    if x.shape != (p.n,):
        raise ValidationError(f"x0 must have {p.n} components, got {x.size}")
    if not p.in_lambda(lam):
        raise ValidationError(f"lambda={lam!r} outside {p.lambda_interval!r}")
    if s.domain_check and not p.in_omega(x):
        raise ValidationError(f"x0={x.tolist()!r} outside the domain box {p.omega_box!r}")

    h = p.h
    use_g = not (h.density_is_zero or p.g_is_zero)

    def rhs(t, y):
        dy = p.f_eval(lam, y, t)
        if use_g:
            dy = dy + p.g_eval(y, t) * h.density_at(t)
        return dy

    events = _domain_events(p) if s.domain_check else None
    cuts = [0.0, *h.jump_times, p.T]
    segments, jumps = [], []
    for lo, hi in zip(cuts[:-1], cuts[1:]):
        fn, left = flow_segment(rhs, lo, hi, x, s, events)
        segments.append(Segment(lo, hi, fn))
        if hi < p.T:
            right = left + p.g_eval(left, hi) * h.jump_at(hi)
            if s.domain_check and not p.in_omega(right):
                raise DomainExitError("post-jump state outside Omega", hi, right)
            jumps.append(JumpRecord(hi, left, right))
            x = right
    return RegulatedPath(segments, jumps, p.n)


def residual_sie(p: ProblemDef, lam: float, path: RegulatedPath, t_grid: Sequence[float],
                 tol: float = 1e-10) -> float:
    """Defect of ``path`` in the integral equation, max over ``t_grid``.

    The integrals are evaluated by the Stieltjes engine directly from the
    path values, independently of how the path was produced.
    """
    grid = sorted(set([0.0, *map(float, t_grid)]))
    ident = Integrator.identity(p.T)
    f_part = cumulative(IntegrandFn.along_path(lambda s: p.f_eval(lam, path(s), s), path),
                        ident, grid, tol)
    g_part = cumulative(IntegrandFn.along_path(lambda s: p.g_eval(path(s), s), path),
                        p.h, grid, tol)
    x0 = path(0.0)
    worst = 0.0
    for t, fi, gi in zip(grid, f_part, g_part):
        worst = max(worst, float(np.max(np.abs(path(t) - x0 - fi - gi))))
    return worst


def uniform_grid(T: float, points: int = 101) -> list[float]:
    return np.linspace(0.0, T, points).tolist()
