"""Bifurcation scans along a branch of periodic solutions.

The local index of the fixed point is read off as ``sign det(I - M(lambda))``.
A sign change between two parameter values brackets a bifurcation value;
``det(I - M) != 0`` rules one out at that parameter (the linearized periodic
problem is then uniquely solvable), and ``det(I - M) = 0`` is the necessary
condition a bifurcation value has to meet.
"""
from __future__ import annotations

import csv
import io
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .errors import ConvergenceError, MdeError
from .mde import ProblemDef, SolveSettings, solve_ivp
from .periodic import ShootResult, shoot
from .variational import JacobianPair, MonodromyReport, jacobians, monodromy

UNVERIFIED_HYPOTHESES = (
    "equicontinuity of f in lambda (uniform bound on |int_s^t [f(l2,x,r) - f(l1,x,r)] dr|) is assumed, not checked",
    "equicontinuity of the Jacobians in (lambda, x) is assumed, not checked",
    "isolation of the branch solution is evidenced only by the determinant margin",
    "the radius of the exclusion neighbourhood is not quantified",
)

Branch = Callable[[float], ShootResult]


class PinnedBranch:
    """Branch given by one initial state that is periodic for every lambda.

    The state is accepted as periodic when ``|x(T) - x(0)|`` is within
    ``tol`` (default ``1e3 * rk_tol * (1 + |x0|)``, i.e. solver accuracy).
    """

    def __init__(self, p: ProblemDef, x0_star, s: SolveSettings | None = None,
                 tol: float | None = None):
        self.p = p
        self.x0 = np.asarray(x0_star, dtype=float)
        self.s = s or SolveSettings()
        if tol is None:
            tol = 1e3 * self.s.rk_tol * (1.0 + float(np.linalg.norm(self.x0)))
        self.tol = tol

    def __call__(self, lam: float) -> ShootResult:
        path = solve_ivp(self.p, lam, self.x0, self.s)
        res = float(np.linalg.norm(path.final() - path(0.0)))
        if res > self.tol:
            raise ConvergenceError(
                f"pinned state is not periodic at lambda={lam!r} (|x(T)-x(0)|={res:.3e})"
            )
        return ShootResult(self.x0.copy(), path, res, 0, True, lam)


class ShootingBranch:
    """Branch found by shooting from a fixed guess at every lambda."""

    def __init__(self, p: ProblemDef, guess, s: SolveSettings | None = None,
                 tol: float = 1e-10, max_iter: int = 50):
        self.p = p
        self.guess = np.asarray(guess, dtype=float)
        self.s = s or SolveSettings()
        self.tol = tol
        self.max_iter = max_iter
        self.jac = jacobians(p)

    def __call__(self, lam: float) -> ShootResult:
        return shoot(self.p, lam, self.guess, self.tol, self.max_iter, self.s, self.jac)


@dataclass
class IndexSign:
    sign: int
    det: float
    report: MonodromyReport
    branch_point: ShootResult


def index_sign(p: ProblemDef, lam: float, branch: Branch, s: SolveSettings | None = None,
               jac: JacobianPair | None = None) -> IndexSign:
    """``sign det(I - M(lambda))`` along the branch, ``0`` when degenerate."""
    sol = branch(lam)
    rep = monodromy(p, lam, sol.path, s, jac)
    sign = 0 if rep.degenerate else int(np.sign(rep.det_I_minus_M))
    return IndexSign(sign, rep.det_I_minus_M, rep, sol)


@dataclass
class GridPoint:
    lam: float
    det: float
    index_sign: int
    threshold: float
    error: str | None = None

    @property
    def ok(self) -> bool:
        return self.error is None


@dataclass
class Candidate:
    lambda0: float
    abs_det: float
    iterations: int
    interval: tuple[float, float]
    trace: list[tuple[float, float]] = field(default_factory=list)


@dataclass
class CertifiedRegion:
    kind: str  # "non_bifurcation" | "candidate_necessary_condition_met"
    lambda0: float
    margin: float
    threshold: float
    note: str

    def __post_init__(self):
        if self.kind == "non_bifurcation" and not self.margin > self.threshold:
            raise ValueError("non_bifurcation certificate needs margin above threshold")
        if self.kind == "candidate_necessary_condition_met" and not self.margin <= self.threshold:
            raise ValueError("candidate certificate needs margin at or below threshold")


@dataclass
class ScanReport:
    grid: list[GridPoint]
    sign_change_intervals: list[tuple[float, float]]
    candidates: list[Candidate]
    certificates: list[CertifiedRegion]
    failures: list[str]
    all_degenerate: bool
    disclaimer: tuple[str, ...] = UNVERIFIED_HYPOTHESES

    def to_dict(self) -> dict:
        return {
            "grid": [{"lambda": g.lam, "det_I_minus_M": g.det, "index_sign": g.index_sign,
                      "threshold": g.threshold, "error": g.error} for g in self.grid],
            "sign_change_intervals": [list(iv) for iv in self.sign_change_intervals],
            "candidates": [{"lambda0": c.lambda0, "abs_det": c.abs_det,
                            "bisection_iterations": c.iterations, "interval": list(c.interval)}
                           for c in self.candidates],
            "certificates": [{"kind": c.kind, "lambda0": c.lambda0, "margin": c.margin,
                              "threshold": c.threshold, "note": c.note}
                             for c in self.certificates],
            "failures": list(self.failures),
            "all_degenerate": self.all_degenerate,
            "unverified_hypotheses": list(self.disclaimer),
        }

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["lambda", "det_I_minus_M", "index_sign"])
        for g in self.grid:
            w.writerow([format(g.lam, ".17g"), format(g.det, ".17g"), g.index_sign])
        return buf.getvalue()


def _evaluate(p, branch, lam, s, jac) -> GridPoint:
    try:
        r = index_sign(p, lam, branch, s, jac)
    except MdeError as exc:
        return GridPoint(lam, float("nan"), 0, float("nan"), f"{type(exc).__name__}: {exc}")
    return GridPoint(lam, r.det, r.sign, r.report.threshold)


def _brackets(points: Sequence[GridPoint]) -> list[tuple[GridPoint, GridPoint]]:
    """Adjacent nonzero-sign points of opposite sign; degenerate points in
    between are skipped over, failed points break the bracket."""
    out = []
    last = None
    for g in points:
        if not g.ok:
            last = None
            continue
        if g.index_sign == 0:
            continue
        if last is not None and last.index_sign == -g.index_sign:
            out.append((last, g))
        last = g
    return out


def _bisect(det_at: Callable[[float], float], a: GridPoint, b: GridPoint, bisect_tol: float):
    lo, hi = a.lam, b.lam
    dlo = a.det
    trace = []
    it = 0
    while hi - lo > bisect_tol:
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        dmid = det_at(mid)
        it += 1
        trace.append((mid, dmid))
        if dmid == 0.0:
            return mid, it, trace
        if np.sign(dmid) == np.sign(dlo):
            lo, dlo = mid, dmid
        else:
            hi = mid
    return 0.5 * (lo + hi), it, trace


def scan(p: ProblemDef, branch: Branch, lambda_grid: Sequence[float], bisect_tol: float = 1e-10,
         s: SolveSettings | None = None, workers: int = 1) -> ScanReport:
    """Evaluate the index sign on a parameter grid and localize sign changes.

    Every bracketing pair is bisected on ``det(I - M)`` down to width
    ``bisect_tol``. Grid points with a determinant margin above the
    degeneracy threshold get an exclusion certificate; candidates whose
    determinant falls to the threshold get a necessary-condition certificate.
    """
    jac = jacobians(p)
    lams = sorted(set(float(l) for l in lambda_grid))

    def run(lam):
        return _evaluate(p, branch, lam, s, jac)

    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            grid = list(pool.map(run, lams))
    else:
        grid = [run(lam) for lam in lams]
    failures = [f"lambda={g.lam!r}: {g.error}" for g in grid if not g.ok]

    def det_at(lam):
        return index_sign(p, lam, branch, s, jac).det

    intervals, candidates, certs = [], [], []
    for a, b in _brackets(grid):
        intervals.append((a.lam, b.lam))
        try:
            lam0, iters, trace = _bisect(det_at, a, b, bisect_tol)
            r0 = index_sign(p, lam0, branch, s, jac)
        except MdeError as exc:
            failures.append(f"bisection on [{a.lam!r}, {b.lam!r}]: {type(exc).__name__}: {exc}")
            continue
        cand = Candidate(lam0, abs(r0.det), iters, (a.lam, b.lam), trace)
        candidates.append(cand)
        thr = r0.report.threshold
        if cand.abs_det <= thr:
            certs.append(CertifiedRegion(
                "candidate_necessary_condition_met", lam0, cand.abs_det, thr,
                "index changes sign across the interval and the linearized periodic "
                "problem has a nontrivial solution here"))
        else:
            failures.append(
                f"candidate {lam0!r}: |det(I-M)|={cand.abs_det:.3e} above threshold {thr:.3e}; "
                "refine bisect_tol")
    for g in grid:
        if g.ok and abs(g.det) > g.threshold:
            certs.append(CertifiedRegion(
                "non_bifurcation", g.lam, abs(g.det), g.threshold,
                "I - M is invertible: the linearized periodic problem is uniquely solvable, "
                "so no bifurcation from the branch occurs near this parameter"))
    ok = [g for g in grid if g.ok]
    all_degenerate = bool(ok) and all(g.index_sign == 0 for g in ok)
    return ScanReport(grid, intervals, candidates, certs, failures, all_degenerate)


@dataclass
class FredholmResult:
    kind: str  # "invertible" | "degenerate"
    lam: float
    det: float
    kernel_dim: int
    kernel_basis: list[np.ndarray]
    singular_values: np.ndarray
    report: MonodromyReport

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "lambda": self.lam,
            "det_I_minus_M": self.det,
            "kernel_dim": self.kernel_dim,
            "kernel_basis": [v.tolist() for v in self.kernel_basis],
            "singular_values": self.singular_values.tolist(),
        }


def fredholm_classify(p: ProblemDef, lam0: float, branch: Branch,
                      s: SolveSettings | None = None) -> FredholmResult:
    """Decide which side of the Fredholm alternative holds at ``lam0``.

    ``invertible``: the linearized periodic problem is uniquely solvable for
    every forcing. ``degenerate``: it has nontrivial solutions; the kernel of
    ``I - M`` gives their initial values (expand with
    :func:`mdebif.variational.homogeneous_solution`).
    """
    r = index_sign(p, lam0, branch, s)
    rep = r.report
    n = p.n
    if not rep.degenerate:
        return FredholmResult("invertible", lam0, rep.det_I_minus_M, 0, [],
                              np.linalg.svd(np.eye(n) - rep.M, compute_uv=False), rep)
    _, sv, vt = np.linalg.svd(np.eye(n) - rep.M)
    cut = max(rep.threshold, 1e-6 * (1.0 + np.linalg.norm(rep.M, 2)))
    dim = max(1, int(np.sum(sv <= cut)))
    basis = []
    for v in vt[n - dim:]:
        v = v / np.linalg.norm(v)
        k = int(np.argmax(np.abs(v)))
        basis.append(v if v[k] > 0 else -v)
    return FredholmResult("degenerate", lam0, rep.det_I_minus_M, dim, basis, sv, rep)
