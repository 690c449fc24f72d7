"""Uniqueness criterion for ``y'' + q(t) y = 0`` with periodic conditions.

If ``Q- = int_0^T q_-`` and ``Q+ = int_0^T q_+`` are both positive and

    Q- < (1 - pi/2 Q-) Q+      and      Q- < 2/pi,

the only T-periodic solution is ``y = 0`` (Lomtatidze).
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import expr as ex
from .mde import ProblemDef
from .quadrature import adaptive_simpson, bisect_root
from .regulated import Integrator

SIGN_SAMPLES = 4096


@dataclass
class CriterionVerdict:
    Qminus: float
    Qplus: float
    factor: float  # 1 - (pi/2) Q-
    product: float  # factor * Q+
    two_over_pi: float
    positivity_ok: bool
    lhs_ok: bool
    bound_ok: bool
    sign_changes: list[float]

    @property
    def verdict(self) -> str:
        return "unique_trivial" if (self.positivity_ok and self.lhs_ok and self.bound_ok) else "inconclusive"

    def to_dict(self) -> dict:
        return {
            "Qminus": self.Qminus,
            "Qplus": self.Qplus,
            "one_minus_half_pi_Qminus": self.factor,
            "product": self.product,
            "two_over_pi": self.two_over_pi,
            "positivity_ok": self.positivity_ok,
            "lhs_ok": self.lhs_ok,
            "bound_ok": self.bound_ok,
            "verdict": self.verdict,
        }


def _as_q(q) -> ex.ExprNode:
    if isinstance(q, str):
        return ex.parse(q, 0, allow_lambda=False, allow_x=False)
    bad = q.variables() - {"t"}
    if bad:
        raise ex.ExprSyntaxError(f"q may only depend on t, found {sorted(bad)}", -1)
    return q


def sign_changes(fn, a: float, b: float, samples: int = SIGN_SAMPLES, xtol: float = 1e-12) -> list[float]:
    """Zeros of ``fn`` where it changes sign, bracketed on a uniform grid and
    refined by bisection."""
    ts = np.linspace(a, b, samples + 1)
    vals = [fn(t) for t in ts]
    roots = []
    for i in range(samples):
        va, vb = vals[i], vals[i + 1]
        if va == 0.0:
            if 0 < i and vals[i - 1] * vb < 0:
                roots.append(float(ts[i]))
            continue
        if va * vb < 0:
            roots.append(bisect_root(fn, float(ts[i]), float(ts[i + 1]), xtol))
    return roots


def lomtatidze_check(q, T: float, tol: float = 1e-9) -> CriterionVerdict:
    """Evaluate the criterion for ``q`` on ``[0, T]``.

    ``Q-`` and ``Q+`` come from adaptive quadrature of ``q`` between its sign
    changes. Each strict inequality must hold with margin ``tol``.
    """
    q = _as_q(q)
    qfn = ex.compile_scalar(q)

    def fn(t):
        try:
            return qfn(t, 0.0, ())
        except (ValueError, ZeroDivisionError, OverflowError):
            return ex.evaluate(q, ex.EvalContext(t=t))

    roots = sign_changes(fn, 0.0, T)
    cuts = [0.0, *roots, T]
    qminus = qplus = 0.0
    for lo, hi in zip(cuts[:-1], cuts[1:]):
        if hi <= lo:
            continue
        piece = adaptive_simpson(fn, lo, hi, 1e-13 * max(1.0, hi - lo))
        if piece >= 0:
            qplus += piece
        else:
            qminus -= piece
    factor = 1.0 - 0.5 * math.pi * qminus
    product = factor * qplus
    two_over_pi = 2.0 / math.pi
    return CriterionVerdict(
        Qminus=qminus,
        Qplus=qplus,
        factor=factor,
        product=product,
        two_over_pi=two_over_pi,
        positivity_ok=qminus > tol and qplus > tol,
        lhs_ok=qminus < product - tol,
        bound_ok=qminus < two_over_pi - tol,
        sign_changes=roots,
    )


def second_order_to_system(q, T: float, hill_form: bool = False,
                           lambda_interval=(-1.0, 1.0), bound: float = 1e6) -> ProblemDef:
    """Planar first-order system of a second-order linear equation.

    Default: ``z'' = q(t) z`` (the form the linearization produces), i.e.
    ``x1' = x2, x2' = q x1``. With ``hill_form=True`` the system is
    ``y'' + q(t) y = 0``, the equation the criterion speaks about.
    """
    q = _as_q(q)
    qs = ex.to_string(q)
    second = f"-({qs})*x1" if hill_form else f"({qs})*x1"
    return ProblemDef.from_strings(
        n=2, T=T, f=["x2", second], g=["0", "0"], h=Integrator.zero(T),
        lambda_interval=lambda_interval, omega_box=[(-bound, bound)] * 2,
        description=f"companion system of z'' = {'-' if hill_form else ''}q z, q = {qs}",
        reference_x0=(0.0, 0.0),
    )
