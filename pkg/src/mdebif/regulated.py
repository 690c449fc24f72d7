"""Left-continuous integrators and regulated solution paths."""
from __future__ import annotations

import bisect
import csv
import io
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

import numpy as np

from . import expr as ex
from .errors import ValidationError
from .quadrature import DEFAULT_TOL, integrate_pieces


@dataclass(frozen=True)
class Integrator:
    """The integrator ``h(t) = int_0^t density + sum_{tau_j < t} size_j``.

    ``h`` is normalized to ``h(0) = 0`` and is left-continuous: its only
    discontinuities are right jumps ``h(tau+) - h(tau) = size`` at interior
    points of ``(0, T)``. Zero-size jumps are dropped on construction.
    """

    density: ex.ExprNode
    jumps: tuple[tuple[float, float], ...]
    T: float
    _density_fn: Callable = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if not self.T > 0:
            raise ValidationError(f"period T must be positive, got {self.T!r}")
        bad = self.density.variables() - {"t"}
        if bad:
            raise ValidationError(f"integrator density may only use t, found {sorted(bad)}")
        jumps = tuple((float(tau), float(size)) for tau, size in self.jumps if size != 0.0)
        prev = 0.0
        for tau, _ in jumps:
            if not (0.0 < tau < self.T):
                raise ValidationError(f"jump time {tau!r} not inside (0, {self.T!r})")
            if tau <= prev and prev > 0.0:
                raise ValidationError("jump times must be strictly increasing")
            prev = tau
        object.__setattr__(self, "jumps", jumps)
        object.__setattr__(self, "T", float(self.T))
        object.__setattr__(self, "_density_fn", ex.compile_scalar(self.density))

    @classmethod
    def from_spec(cls, density: str | ex.ExprNode = "0", jumps: Iterable = (), T: float = 1.0):
        if isinstance(density, str):
            density = ex.parse(density, 0, allow_lambda=False, allow_x=False)
        return cls(density, tuple(jumps), T)

    @classmethod
    def identity(cls, T: float) -> "Integrator":
        """Lebesgue integrator ``h(t) = t``."""
        return cls(ex.const(1.0), (), T)

    @classmethod
    def zero(cls, T: float) -> "Integrator":
        return cls(ex.const(0.0), (), T)

    @property
    def density_is_zero(self) -> bool:
        return self.density.is_zero()

    @property
    def jump_times(self) -> tuple[float, ...]:
        return tuple(tau for tau, _ in self.jumps)

    def density_at(self, t: float) -> float:
        return self._density_fn(t, 0.0, ())

    def jump_at(self, t: float) -> float:
        for tau, size in self.jumps:
            if tau == t:
                return size
        return 0.0

    def __add__(self, other: "Integrator") -> "Integrator":
        if other.T != self.T:
            raise ValidationError("integrators must share the same period")
        merged: dict[float, float] = {}
        for tau, size in self.jumps + other.jumps:
            merged[tau] = merged.get(tau, 0.0) + size
        return Integrator(ex.add(self.density, other.density), tuple(sorted(merged.items())), self.T)

    def scale(self, c: float) -> "Integrator":
        return Integrator(ex.mul(ex.const(c), self.density),
                          tuple((tau, c * size) for tau, size in self.jumps), self.T)

    def to_dict(self) -> dict:
        return {
            "density": ex.to_string(self.density),
            "jumps": [{"t": tau, "size": size} for tau, size in self.jumps],
            "T": self.T,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Integrator":
        return cls.from_spec(d.get("density", "0"),
                             [(j["t"], j["size"]) for j in d.get("jumps", [])], d["T"])


def eval_h(h: Integrator, t: float, tol: float = DEFAULT_TOL) -> float:
    """Value of the reconstructed integrator at ``t`` (``0`` for ``t < 0``)."""
    if t <= 0.0:
        return 0.0
    if t > h.T:
        raise ValueError(f"t={t!r} beyond the period {h.T!r}")
    value = sum(size for tau, size in h.jumps if tau < t)
    if not h.density_is_zero:
        value += integrate_pieces(h.density_at, 0.0, t, h.jump_times, tol)
    return float(value)


def variation(h: Integrator, a: float = 0.0, b: float | None = None, tol: float = DEFAULT_TOL) -> float:
    """Total variation of ``h`` over ``[a, b]`` (default the whole period).

    Jumps are counted with the same convention as the Stieltjes integral:
    a jump at ``a`` is inside, one at ``b`` is not.
    """
    b = h.T if b is None else b
    total = sum(abs(size) for tau, size in h.jumps if a <= tau < b)
    if not h.density_is_zero:
        total += integrate_pieces(lambda s: abs(h.density_at(s)), a, b, h.jump_times, tol)
    return float(total)


@dataclass(frozen=True)
class Segment:
    a: float
    b: float
    fn: Callable[[float], np.ndarray]


@dataclass(frozen=True)
class JumpRecord:
    tau: float
    left: np.ndarray
    right: np.ndarray


class RegulatedPath:
    """Piecewise-smooth, left-continuous vector path on ``[t0, T]``.

    Segments meet at the recorded jump times; the value at a jump time is the
    stored left value, and :meth:`right_limit` gives ``x(tau+)``.
    """

    def __init__(self, segments: Sequence[Segment], jumps: Sequence[JumpRecord], n: int):
        if not segments:
            raise ValueError("a path needs at least one segment")
        self.segments = tuple(segments)
        self.jumps = tuple(jumps)
        self.n = n
        self._ends = [s.b for s in self.segments]
        self._jump_index = {j.tau: j for j in self.jumps}
        for j in self.jumps:
            j.left.setflags(write=False)
            j.right.setflags(write=False)

    @classmethod
    def constant(cls, c: Sequence[float], T: float, t0: float = 0.0) -> "RegulatedPath":
        value = np.array(c, dtype=float)
        value.setflags(write=False)
        return cls([Segment(t0, T, lambda t: value.copy())], [], len(value))

    @property
    def t0(self) -> float:
        return self.segments[0].a

    @property
    def T(self) -> float:
        return self.segments[-1].b

    @property
    def jump_times(self) -> tuple[float, ...]:
        return tuple(j.tau for j in self.jumps)

    def __call__(self, t: float) -> np.ndarray:
        return path_eval(self, t)

    def right_limit(self, t: float) -> np.ndarray:
        return path_right_limit(self, t)

    def sample(self, ts: Iterable[float]) -> np.ndarray:
        return np.array([path_eval(self, t) for t in ts])

    def final(self) -> np.ndarray:
        return path_eval(self, self.T)


def path_eval(p: RegulatedPath, t: float) -> np.ndarray:
    """Left-continuous evaluation; at a jump time the stored left value is returned."""
    j = p._jump_index.get(t)
    if j is not None:
        return j.left.copy()
    slack = 1e-12 * max(1.0, abs(p.T))
    if t < p.t0 - slack or t > p.T + slack:
        raise ValueError(f"t={t!r} outside the path domain [{p.t0!r}, {p.T!r}]")
    t = min(max(t, p.t0), p.T)
    k = min(bisect.bisect_left(p._ends, t), len(p.segments) - 1)
    return np.asarray(p.segments[k].fn(t), dtype=float).reshape(p.n)


def path_right_limit(p: RegulatedPath, t: float) -> np.ndarray:
    j = p._jump_index.get(t)
    if j is not None:
        return j.right.copy()
    if t >= p.T:
        return path_eval(p, p.T)
    k = bisect.bisect_right(p._ends, t)
    return np.asarray(p.segments[k].fn(t), dtype=float).reshape(p.n)


def path_to_csv(p: RegulatedPath, samples: int = 1001, names: Sequence[str] | None = None) -> str:
    """CSV text with columns ``t, x1..xn, is_jump_left, is_jump_right``.

    Uniform samples plus two rows at every jump time (left value, then right
    limit). Floats are written with 17 significant digits.
    """
    names = list(names) if names is not None else [f"x{i + 1}" for i in range(p.n)]
    grid = set(np.linspace(p.t0, p.T, samples).tolist()) | set(p.jump_times)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["t", *names, "is_jump_left", "is_jump_right"])
    fmt = lambda v: format(float(v), ".17g")  # noqa: E731
    for t in sorted(grid):
        if t in p._jump_index:
            j = p._jump_index[t]
            w.writerow([fmt(t), *map(fmt, j.left), 1, 0])
            w.writerow([fmt(t), *map(fmt, j.right), 0, 1])
        else:
            w.writerow([fmt(t), *map(fmt, path_eval(p, t)), 0, 0])
    return buf.getvalue()
