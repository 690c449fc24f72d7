"""Periodic solutions by Newton shooting on the period map."""
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .errors import ConvergenceError, NumericalError, SingularJacobianError, ValidationError
from .mde import ProblemDef, SolveSettings, solve_ivp
from .regulated import RegulatedPath
from .variational import JacobianPair, degeneracy_threshold, jacobians, monodromy

MAX_HALVINGS = 20


@dataclass
class ShootResult:
    x0_star: np.ndarray
    path: RegulatedPath
    residual: float
    iterations: int
    converged: bool
    lam: float = 0.0

    def to_dict(self) -> dict:
        return {
            "lambda": self.lam,
            "x0_star": self.x0_star.tolist(),
            "residual": self.residual,
            "iterations": self.iterations,
            "converged": self.converged,
        }


def _period_residual(path: RegulatedPath) -> np.ndarray:
    return path.final() - path(0.0)


def shoot(p: ProblemDef, lam: float, x0_guess, tol: float = 1e-10, max_iter: int = 50,
          s: SolveSettings | None = None, jac: JacobianPair | None = None) -> ShootResult:
    """Damped Newton iteration on ``r(x0) = x(T; x0) - x0``.

    The Newton matrix is ``M - I`` with ``M`` the monodromy along the current
    trajectory. Trial steps are halved (at most 20 times) until ``|r|``
    decreases; trial trajectories may leave Omega, the converged one may not
    when ``s.domain_check`` is set (trial initial states outside the box are
    then rejected like failed trials).
    """
    s = s or SolveSettings()
    x = np.array(x0_guess, dtype=float).reshape(-1)
    if x.shape != (p.n,):
        raise ValidationError(f"initial guess must have {p.n} components")
    if s.domain_check and not p.in_omega(x):
        raise ValidationError(f"initial guess {x.tolist()!r} outside the domain box")
    free = s.replace(domain_check=False)
    jac = jac or jacobians(p)

    path = solve_ivp(p, lam, x, free)
    r = _period_residual(path)
    norm = float(np.linalg.norm(r))
    it = 0
    while norm > tol:
        if it >= max_iter:
            raise ConvergenceError(
                f"shooting did not converge in {max_iter} iterations (|r|={norm:.3e})"
            )
        rep = monodromy(p, lam, path, free, jac)
        A = rep.M - np.eye(p.n)
        if abs(np.linalg.det(A)) < degeneracy_threshold(rep.M):
            raise SingularJacobianError(
                f"Newton matrix M - I is singular at lambda={lam!r} (det={np.linalg.det(A):.3e})"
            )
        step = np.linalg.solve(A, -r)
        it += 1
        alpha = 1.0
        for _ in range(MAX_HALVINGS + 1):
            trial = x + alpha * step
            if s.domain_check and not p.in_omega(trial):
                # a periodic state in Omega starts in Omega
                alpha *= 0.5
                continue
            try:
                tpath = solve_ivp(p, lam, trial, free)
                tr = _period_residual(tpath)
                tnorm = float(np.linalg.norm(tr))
            except NumericalError:
                tnorm = np.inf
            if tnorm < norm:
                x, path, r, norm = trial, tpath, tr, tnorm
                break
            alpha *= 0.5
        else:
            raise ConvergenceError(
                f"no decrease of |r| after {MAX_HALVINGS} step halvings (|r|={norm:.3e})"
            )
    if s.domain_check:
        # re-run with the event checks armed; raises DomainExitError on exit
        path = solve_ivp(p, lam, x, s)
    return ShootResult(x, path, norm, it, True, lam)


def multistart(p: ProblemDef, lam: float, per_axis: int = 3, tol: float = 1e-10,
               max_iter: int = 50, s: SolveSettings | None = None, workers: int = 1,
               dedup: float = 1e-6) -> list[ShootResult]:
    """Shoot from a uniform interior grid of Omega and keep distinct orbits."""
    axes = [np.linspace(a, b, per_axis + 2)[1:-1] for a, b in p.omega_box]
    starts = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, p.n)
    jac = jacobians(p)

    def attempt(x0):
        try:
            return shoot(p, lam, x0, tol, max_iter, s, jac)
        except (NumericalError, ValidationError):
            return None

    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            results = list(pool.map(attempt, starts))
    else:
        results = [attempt(x0) for x0 in starts]
    found: list[ShootResult] = []
    for res in results:
        if res is None:
            continue
        if all(np.linalg.norm(res.x0_star - other.x0_star) > dedup for other in found):
            found.append(res)
    return found
