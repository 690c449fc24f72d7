"""Built-in problems, addressable by stable names."""
from __future__ import annotations

import math

from . import expr as ex
from .errors import ValidationError
from .mde import ProblemDef
from .regulated import Integrator

LIEBAU_R = "6.6 - 5.7*cos(t) - 9*cos(t)^2"
LIEBAU_Q = "3*(6 - 7*cos(t) - 10*cos(t)^2)/(10*(2 + cos(t))^2)"


def _param(src: str, name: str) -> str:
    # parameters are functions of t only
    ex.parse(src, 0, allow_lambda=False, allow_x=False)
    return f"({src})"


def impulsive_scalar(b: str = "1", c: str = "0") -> ProblemDef:
    """Scalar impulsive problem ``x' = lambda b(t) x + c(t) x^2`` with
    ``Delta+ x(1/2) = x(1/2)^2`` and period 1.

    ``x = 0`` is periodic for every lambda; with ``int_0^1 b != 0`` the only
    bifurcation from it happens at lambda = 0.
    """
    b, c = _param(b, "b"), _param(c, "c")
    return ProblemDef.from_strings(
        n=1, T=1.0,
        f=[f"lambda*{b}*x1 + {c}*x1^2"],
        g=["x1^2"],
        h=Integrator.from_spec("0", [(0.5, 1.0)], 1.0),
        lambda_interval=(-1.0, 1.0),
        omega_box=[(-0.5, 0.5)],
        description=f"impulsive scalar problem, b={b}, c={c}",
        reference_x0=(0.0,),
    )


def liebau() -> ProblemDef:
    """Planar system of the valveless pumping example.

    ``u = (2 + cos t)^3`` solves it for every lambda; the jump at ``pi`` has
    size ``2u^3 - u^2 - 4u + 3``, which vanishes at ``u(pi) = 1``.
    """
    T = 2.0 * math.pi
    return ProblemDef.from_strings(
        n=2, T=T,
        f=["x2",
           f"lambda*((2 + cos(t))*x2 + 3*sin(t)*x1) + ({LIEBAU_R})*x1^(1/3) - 0.3*x1^(2/3)"],
        g=["2*x1^3 - x1^2 - 4*x1 + 3", "0"],
        h=Integrator.from_spec("0", [(math.pi, 1.0)], T),
        lambda_interval=(-1.0, 1.0),
        omega_box=[(0.5, 28.0), (-20.0, 20.0)],
        description="Liebau valveless pumping model with an impulse at pi",
        reference_x0=(27.0, 0.0),
    )


def trivial(n: str = "1", T: str = "1") -> ProblemDef:
    """``f = g = 0``: every state is periodic, fully degenerate."""
    dim, period = int(n), float(T)
    return ProblemDef.from_strings(
        n=dim, T=period, f=["0"] * dim, g=["0"] * dim,
        h=Integrator.from_spec("0", [(period / 2, 1.0)], period),
        lambda_interval=(-1.0, 1.0), omega_box=[(-10.0, 10.0)] * dim,
        description="constant dynamics", reference_x0=(0.0,) * dim,
    )


def pure_jump(a: str = "0.5") -> ProblemDef:
    """``x' = 0`` with jump ``a x`` at ``1/2``; monodromy ``1 + a``."""
    return ProblemDef.from_strings(
        n=1, T=1.0, f=["0"], g=[f"({float(a)!r})*x1"],
        h=Integrator.from_spec("0", [(0.5, 1.0)], 1.0),
        lambda_interval=(-1.0, 1.0), omega_box=[(-10.0, 10.0)],
        description=f"pure jump toy, a={a}", reference_x0=(0.0,),
    )


REGISTRY = {
    "example-5.7": impulsive_scalar,
    "liebau": liebau,
    "trivial": trivial,
    "pure-jump": pure_jump,
}


def get(name: str, **params: str) -> ProblemDef:
    try:
        factory = REGISTRY[name]
    except KeyError:
        raise ValidationError(f"unknown problem {name!r}; known: {', '.join(REGISTRY)}") from None
    try:
        return factory(**params)
    except TypeError as exc:
        raise ValidationError(f"bad parameters for {name!r}: {exc}") from None
