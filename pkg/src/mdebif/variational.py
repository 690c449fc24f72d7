"""Linearization along a reference path and the monodromy matrix.

Along a path ``x*`` the variational equation is

    Z' = [f_x(lambda, x*(t), t) + g_x(x*(t), t) density(t)] Z      between jumps,
    Z(tau+) = (I + g_x(x*(tau), tau) size) Z(tau)                   at jumps,

with ``Z(0) = I``. ``M = Z(T)``; the linearized periodic problem has a
nontrivial solution exactly when ``det(I - M) = 0``.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import expr as ex
from .errors import SingularJumpFactorError
from .mde import _COMPILED_FAILURES, ProblemDef, SolveSettings, flow_segment, solve_ivp
from .regulated import JumpRecord, RegulatedPath, Segment

JUMP_DET_MIN = 1e-12
FD_TOL_FACTOR = 1e-7


@dataclass(frozen=True)
class JacobianPair:
    fprime: tuple[tuple[ex.ExprNode, ...], ...]
    gprime: tuple[tuple[ex.ExprNode, ...], ...]
    _f_fn: object = field(init=False, repr=False, compare=False)
    _g_fn: object = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "_f_fn", ex.compile_tuple(e for row in self.fprime for e in row))
        object.__setattr__(self, "_g_fn", ex.compile_tuple(e for row in self.gprime for e in row))

    @property
    def n(self) -> int:
        return len(self.fprime)

    @property
    def g_is_zero(self) -> bool:
        return all(e.is_zero() for row in self.gprime for e in row)

    def f_at(self, lam: float, x, t: float) -> np.ndarray:
        xs = list(x)
        try:
            vals = self._f_fn(t, lam, xs)
        except _COMPILED_FAILURES:
            ex.explain_failure([e for row in self.fprime for e in row], t, lam, xs)
        return np.array(vals, dtype=float).reshape(self.n, self.n)

    def g_at(self, x, t: float) -> np.ndarray:
        xs = list(x)
        try:
            vals = self._g_fn(t, 0.0, xs)
        except _COMPILED_FAILURES:
            ex.explain_failure([e for row in self.gprime for e in row], t, 0.0, xs)
        return np.array(vals, dtype=float).reshape(self.n, self.n)

    def strings(self) -> dict:
        return {
            "fprime": [[ex.to_string(e) for e in row] for row in self.fprime],
            "gprime": [[ex.to_string(e) for e in row] for row in self.gprime],
        }


def jacobians(p: ProblemDef) -> JacobianPair:
    """Symbolic ``df/dx`` and ``dg/dx``; entry ``(i, j)`` is ``d comp_i / d x_{j+1}``."""
    names = [f"x{j + 1}" for j in range(p.n)]
    fp = tuple(tuple(ex.differentiate(fi, v) for v in names) for fi in p.f)
    gp = tuple(tuple(ex.differentiate(gi, v) for v in names) for gi in p.g)
    return JacobianPair(fp, gp)


def degeneracy_threshold(M: np.ndarray) -> float:
    """Scale-aware cut below which ``|det(I - M)|`` counts as zero."""
    n = M.shape[0]
    return 1e-8 * (1.0 + np.linalg.norm(M, 2) ** n)


@dataclass
class MonodromyReport:
    lam: float
    M: np.ndarray
    det_I_minus_M: float
    eigenvalues: np.ndarray
    jump_factors: list[tuple[float, np.ndarray]]
    threshold: float
    fundamental: RegulatedPath | None = field(default=None, repr=False)

    @property
    def degenerate(self) -> bool:
        return abs(self.det_I_minus_M) < self.threshold

    def to_dict(self) -> dict:
        return {
            "lambda": self.lam,
            "M": self.M.tolist(),
            "det_I_minus_M": self.det_I_minus_M,
            "eigenvalues": [{"re": float(z.real), "im": float(z.imag)} for z in self.eigenvalues],
            "jump_factors": [{"t": tau, "factor": J.tolist()} for tau, J in self.jump_factors],
            "threshold": self.threshold,
            "degenerate": self.degenerate,
        }


def _report(lam, M, jump_factors, fundamental=None) -> MonodromyReport:
    n = M.shape[0]
    det = float(np.linalg.det(np.eye(n) - M))
    eig = np.linalg.eigvals(M)
    eig = eig[np.lexsort((eig.imag, eig.real))]
    return MonodromyReport(lam, M, det, eig, jump_factors, degeneracy_threshold(M), fundamental)


def monodromy(p: ProblemDef, lam: float, ref: RegulatedPath, s: SolveSettings | None = None,
              jac: JacobianPair | None = None) -> MonodromyReport:
    """Fundamental matrix at ``T`` of the equation linearized along ``ref``.

    Raises :class:`SingularJumpFactorError` when some ``I + g_x size`` is
    not invertible.
    """
    s = (s or SolveSettings()).replace(domain_check=False)
    jac = jac or jacobians(p)
    n = p.n
    h = p.h
    use_g = not (h.density_is_zero or jac.g_is_zero)

    def rhs(t, z):
        x = ref(t)
        A = jac.f_at(lam, x, t)
        if use_g:
            A = A + jac.g_at(x, t) * h.density_at(t)
        return (A @ z.reshape(n, n)).reshape(-1)

    Z = np.eye(n).reshape(-1)
    cuts = [0.0, *h.jump_times, p.T]
    segments, records, factors = [], [], []
    for lo, hi in zip(cuts[:-1], cuts[1:]):
        fn, left = flow_segment(rhs, lo, hi, Z, s)
        segments.append(Segment(lo, hi, fn))
        if hi < p.T:
            J = np.eye(n) + jac.g_at(ref(hi), hi) * h.jump_at(hi)
            dJ = np.linalg.det(J)
            if abs(dJ) <= JUMP_DET_MIN:
                raise SingularJumpFactorError(
                    f"jump factor at t={hi!r} is singular (det={dJ!r})"
                )
            factors.append((hi, J))
            right = (J @ left.reshape(n, n)).reshape(-1)
            records.append(JumpRecord(hi, left, right))
            Z = right
        else:
            Z = left
    M = Z.reshape(n, n)
    return _report(lam, M, factors, RegulatedPath(segments, records, n * n))


def monodromy_fd_check(p: ProblemDef, lam: float, x0, eps: float = 1e-6,
                       s: SolveSettings | None = None) -> np.ndarray:
    """Central-difference Jacobian of the period map ``x0 -> x(T; x0)``.

    The solves run at ``rk_tol <= 1e-7 * eps`` so that the absolute part of
    the error control stays well below the perturbation size.
    """
    s = s or SolveSettings()
    s = s.replace(domain_check=False, rk_tol=min(s.rk_tol, FD_TOL_FACTOR * eps))
    x0 = np.asarray(x0, dtype=float)
    n = p.n
    J = np.empty((n, n))
    for j in range(n):
        e = np.zeros(n)
        e[j] = eps
        plus = solve_ivp(p, lam, x0 + e, s).final()
        minus = solve_ivp(p, lam, x0 - e, s).final()
        J[:, j] = (plus - minus) / (2.0 * eps)
    return J


def homogeneous_solution(report: MonodromyReport, z0) -> RegulatedPath:
    """The solution ``z(s) = Z(s) z0`` of the linearized equation."""
    if report.fundamental is None:
        raise ValueError("report carries no fundamental matrix path")
    Zp = report.fundamental
    z0 = np.asarray(z0, dtype=float)
    n = z0.size
    segs = [Segment(sg.a, sg.b, lambda t, fn=sg.fn: np.asarray(fn(t)).reshape(n, n) @ z0)
            for sg in Zp.segments]
    recs = [JumpRecord(j.tau, j.left.reshape(n, n) @ z0, j.right.reshape(n, n) @ z0)
            for j in Zp.jumps]
    return RegulatedPath(segs, recs, n)
