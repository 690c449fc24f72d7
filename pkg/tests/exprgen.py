"""Random well-conditioned expression sources for property tests.

Sub-expressions that would leave a function's domain are shifted into it
(``ln(1 + u^2)``, ``sqrt(2 + sin(u))``...), so every generated expression is
finite and differentiable for moderate inputs.
"""
import random

from mdebif import expr as ex
from mdebif.errors import MdeError

LEAVES = ["x1", "t", "lambda"]


def random_source(rng: random.Random, depth: int = 4) -> str:
    if depth == 0 or rng.random() < 0.2:
        r = rng.random()
        if r < 0.5:
            return rng.choice(LEAVES + ["x1"])
        return repr(round(rng.uniform(-2.0, 2.0), 3))
    u = random_source(rng, depth - 1)
    v = random_source(rng, depth - 1)
    kind = rng.randrange(15)
    if kind == 0:
        return f"({u}) + ({v})"
    if kind == 1:
        return f"({u}) - ({v})"
    if kind == 2:
        return f"({u}) * ({v})"
    if kind == 3:
        return f"({u}) / (1.5 + sin({v}))"
    if kind == 4:
        return f"({u})^{rng.choice([2, 3])}"
    if kind == 5:
        return f"(1 + ({u})^2)^({rng.choice(['0.5', '-1', '1/3', '-0.25'])})"
    if kind == 6:
        return f"sin({u})"
    if kind == 7:
        return f"cos({u})"
    if kind == 8:
        return f"exp(sin({u}))"
    if kind == 9:
        return f"ln(1 + ({u})^2)"
    if kind == 10:
        return f"sqrt(2 + cos({u}))"
    if kind == 11:
        return f"-({u})"
    if kind == 12:
        return f"pow(2 + sin({u}), {v} * 0.25)"
    if kind == 13:
        return f"tan(0.5*sin({u}))"
    return f"{rng.choice(['max', 'min'])}({u}, {v})"


def fd_check(rng: random.Random, src: str) -> tuple[bool, float] | None:
    """Central difference against the symbolic derivative at a random point.

    Returns ``(passed, error)`` or ``None`` when the point leaves a domain.
    """
    e = ex.parse(src, 1)
    d = ex.differentiate(e, "x1")
    x, t, lam = rng.uniform(-1.5, 1.5), rng.uniform(0.0, 2.0), rng.uniform(-1.0, 1.0)
    h = 1e-6

    def f(xx):
        return ex.evaluate(e, ex.EvalContext(t, lam, (xx,)))

    try:
        exact = ex.evaluate(d, ex.EvalContext(t, lam, (x,)))
        fd = (f(x + h) - f(x - h)) / (2 * h)
    except MdeError:
        return None
    if abs(exact) > 1e-3:
        err = abs(exact - fd) / abs(exact)
    else:
        err = abs(exact - fd)
    return err <= 1e-6, err
