"""Command-line front end.

Exit codes: 0 success, 2 invalid input, 3 numerical failure.
"""
from __future__ import annotations

import argparse
import sys
import time
from pathlib import Path

import numpy as np

from . import bifurcation as bf
from . import criteria, periodic, problems, variational
from . import expr as ex
from .errors import NumericalError, ValidationError
from .files import ProblemFile, dumps, load_problem, write_text
from .mde import residual_sie, solve_ivp, uniform_grid
from .regulated import path_to_csv

EXIT_OK, EXIT_VALIDATION, EXIT_NUMERIC = 0, 2, 3


def _number(text: str) -> float:
    """A real given as a constant expression, e.g. ``0.3`` or ``2*pi``."""
    node = ex.parse(text, 0, allow_lambda=False, allow_x=False)
    if node.variables():
        raise ValidationError(f"{text!r} is not a constant")
    return ex.evaluate(node, ex.EvalContext())


def _vector(text: str) -> list[float]:
    try:
        return [_number(part) for part in text.split(",")]
    except ValidationError as exc:
        raise ValidationError(f"bad vector {text!r}: {exc}") from None


def _params(items) -> dict:
    out = {}
    for item in items or []:
        key, sep, value = item.partition("=")
        if not sep:
            raise ValidationError(f"--param expects KEY=VALUE, got {item!r}")
        out[key.strip()] = value.strip()
    return out


def _load(args) -> ProblemFile:
    pf = load_problem(args.problem, _params(args.param))
    if getattr(args, "rk_tol", None) is not None:
        pf = ProblemFile(pf.problem, pf.settings.replace(rk_tol=args.rk_tol), pf.bisect_tol)
    return pf


def _x0(args, pf: ProblemFile) -> list[float]:
    if args.x0 is not None:
        x0 = _vector(args.x0)
    elif pf.problem.reference_x0 is not None:
        x0 = list(pf.problem.reference_x0)
    else:
        raise ValidationError("--x0 is required for this problem")
    if len(x0) != pf.problem.n:
        raise ValidationError(f"--x0 needs {pf.problem.n} components, got {len(x0)}")
    if not pf.problem.in_omega(x0):
        raise ValidationError(f"x0={x0!r} lies outside the domain box {list(pf.problem.omega_box)!r}")
    return x0


def _lambda(args, pf: ProblemFile) -> float:
    lam = _number(args.lam)
    if not pf.problem.in_lambda(lam):
        raise ValidationError(f"lambda={lam!r} outside {pf.problem.lambda_interval!r}")
    return lam


def _branch(args, pf: ProblemFile, x0):
    if args.branch == "pinned":
        return bf.PinnedBranch(pf.problem, x0, pf.settings)
    return bf.ShootingBranch(pf.problem, x0, pf.settings)


def _emit(args, suffix: str, text: str):
    if args.out:
        write_text(Path(str(args.out) + suffix), text)


def _fmt(v: float) -> str:
    return format(v, ".6g")


# ---------------------------------------------------------------------------
# subcommands


def cmd_solve(args) -> int:
    pf = _load(args)
    p = pf.problem
    lam, x0 = _lambda(args, pf), _x0(args, pf)
    start = time.perf_counter()
    path = solve_ivp(p, lam, x0, pf.settings)
    res = residual_sie(p, lam, path, uniform_grid(p.T))
    wall = time.perf_counter() - start
    summary = {
        "lambda": lam,
        "x0": x0,
        "x_T": path.final().tolist(),
        "residual_sie": res,
        "jumps": [{"t": j.tau, "left": j.left.tolist(), "right": j.right.tolist()} for j in path.jumps],
        "wall_time": wall,
    }
    _emit(args, ".csv", path_to_csv(path, args.samples))
    _emit(args, ".json", dumps(summary) + "\n")
    print(f"solved on [0, {_fmt(p.T)}]: x(T) = {[_fmt(v) for v in path.final()]}, "
          f"residual {res:.3e}, {len(path.jumps)} jump(s), {wall:.3f} s")
    return EXIT_OK


def cmd_periodic(args) -> int:
    pf = _load(args)
    p = pf.problem
    lam = _lambda(args, pf)
    if args.multistart:
        found = periodic.multistart(p, lam, args.multistart, args.tol, args.max_iter,
                                    pf.settings, args.workers)
        _emit(args, ".json", dumps({"lambda": lam, "orbits": [r.to_dict() for r in found]}) + "\n")
        print(f"{len(found)} distinct periodic orbit(s) from {args.multistart ** p.n} starts")
        for r in found:
            print(f"  x0* = {[_fmt(v) for v in r.x0_star]} ({r.iterations} iterations)")
        return EXIT_OK
    res = periodic.shoot(p, lam, _x0(args, pf), args.tol, args.max_iter, pf.settings)
    _emit(args, ".json", dumps(res.to_dict()) + "\n")
    _emit(args, ".csv", path_to_csv(res.path, args.samples))
    print(f"converged in {res.iterations} iteration(s): x0* = {[_fmt(v) for v in res.x0_star]}, "
          f"|x(T)-x(0)| = {res.residual:.3e}")
    return EXIT_OK


def cmd_monodromy(args) -> int:
    pf = _load(args)
    p = pf.problem
    lam, x0 = _lambda(args, pf), _x0(args, pf)
    if args.shoot:
        x0 = periodic.shoot(p, lam, x0, s=pf.settings).x0_star.tolist()
    path = solve_ivp(p, lam, x0, pf.settings)
    rep = variational.monodromy(p, lam, path, pf.settings)
    doc = rep.to_dict()
    doc["x0"] = x0
    if args.fd_eps:
        fd = variational.monodromy_fd_check(p, lam, x0, args.fd_eps, pf.settings)
        doc["fd_jacobian"] = fd.tolist()
        doc["fd_max_abs_diff"] = float(np.max(np.abs(fd - rep.M)))
    _emit(args, ".json", dumps(doc) + "\n")
    print(f"det(I - M) = {rep.det_I_minus_M:.6g} ({'degenerate' if rep.degenerate else 'nondegenerate'})")
    print("M =", np.array2string(rep.M, precision=6))
    return EXIT_OK


def cmd_scan(args) -> int:
    pf = _load(args)
    p = pf.problem
    lo, hi = _number(args.lambda_min), _number(args.lambda_max)
    if not (p.in_lambda(lo) and p.in_lambda(hi) and lo <= hi):
        raise ValidationError(f"scan range [{lo!r}, {hi!r}] not inside {p.lambda_interval!r}")
    if args.steps < 2:
        raise ValidationError("--steps must be at least 2")
    x0 = _x0(args, pf)
    grid = np.linspace(lo, hi, args.steps).tolist()
    tol = args.bisect_tol if args.bisect_tol is not None else pf.bisect_tol
    rep = bf.scan(p, _branch(args, pf, x0), grid, tol, pf.settings, args.workers)
    _emit(args, ".csv", rep.to_csv())
    _emit(args, ".json", dumps(rep.to_dict()) + "\n")
    print(f"{len(rep.grid)} grid points, {len(rep.sign_change_intervals)} sign change(s), "
          f"{len(rep.candidates)} candidate(s)")
    for c in rep.candidates:
        print(f"  candidate lambda0 = {c.lambda0:.12g} (|det| = {c.abs_det:.3e})")
    n_ex = sum(c.kind == "non_bifurcation" for c in rep.certificates)
    print(f"  {n_ex} non-bifurcation certificate(s)")
    if rep.all_degenerate:
        print("  every grid point is degenerate: index identically zero")
    for f in rep.failures:
        print(f"  failure: {f}")
    return EXIT_OK


def cmd_classify(args) -> int:
    pf = _load(args)
    lam, x0 = _lambda(args, pf), _x0(args, pf)
    res = bf.fredholm_classify(pf.problem, lam, _branch(args, pf, x0), pf.settings)
    _emit(args, ".json", dumps(res.to_dict()) + "\n")
    if res.kind == "invertible":
        print(f"invertible: det(I - M) = {res.det:.6g}; linearized periodic problem uniquely solvable")
    else:
        print(f"degenerate: kernel dimension {res.kernel_dim}, basis "
              f"{[[_fmt(v) for v in b] for b in res.kernel_basis]}")
    return EXIT_OK


def cmd_criterion(args) -> int:
    T = _number(args.T)
    if not T > 0:
        raise ValidationError("T must be positive")
    v = criteria.lomtatidze_check(args.q, T, args.tol)
    _emit(args, ".json", dumps(v.to_dict()) + "\n")
    print(f"Q- = {v.Qminus:.6g}, Q+ = {v.Qplus:.6g}, 1-(pi/2)Q- = {v.factor:.6g}, "
          f"product = {v.product:.6g}, 2/pi = {v.two_over_pi:.6g}: {v.verdict}")
    return EXIT_OK


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="mdebif", description=(
        "Periodic solutions and bifurcation analysis of measure differential equations."))
    sub = ap.add_subparsers(dest="command", required=True)

    def problem_args(sp, lam=True, x0=True):
        sp.add_argument("--problem", required=True,
                        help=f"built-in name ({', '.join(problems.REGISTRY)}) or JSON file")
        sp.add_argument("--param", action="append", metavar="KEY=VALUE",
                        help="parameter of a built-in problem, e.g. c=1")
        sp.add_argument("--rk-tol", type=float, dest="rk_tol", help="override the solver tolerance")
        sp.add_argument("--out", help="output prefix; writes PREFIX.json / PREFIX.csv")
        if lam:
            sp.add_argument("--lambda", dest="lam", default="0", help="parameter value (default 0)")
        if x0:
            sp.add_argument("--x0", help="comma-separated state (default: problem reference state)")

    sp = sub.add_parser("solve", help="solve the initial value problem on one period")
    problem_args(sp)
    sp.add_argument("--samples", type=int, default=1001)
    sp.set_defaults(func=cmd_solve)

    sp = sub.add_parser("periodic", help="find a periodic solution by shooting")
    problem_args(sp)
    sp.add_argument("--tol", type=float, default=1e-10)
    sp.add_argument("--max-iter", type=int, default=50, dest="max_iter")
    sp.add_argument("--multistart", type=int, metavar="K",
                    help="shoot from a K^n grid over the domain box")
    sp.add_argument("--workers", type=int, default=1)
    sp.add_argument("--samples", type=int, default=1001)
    sp.set_defaults(func=cmd_periodic)

    sp = sub.add_parser("monodromy", help="monodromy matrix along a solution")
    problem_args(sp)
    sp.add_argument("--shoot", action="store_true", help="shoot for a periodic orbit from --x0 first")
    sp.add_argument("--fd-eps", type=float, dest="fd_eps",
                    help="also report the finite-difference period-map Jacobian")
    sp.set_defaults(func=cmd_monodromy)

    sp = sub.add_parser("scan", help="scan lambda for index sign changes")
    problem_args(sp, lam=False)
    sp.add_argument("--lambda-min", dest="lambda_min", required=True)
    sp.add_argument("--lambda-max", dest="lambda_max", required=True)
    sp.add_argument("--steps", type=int, default=21)
    sp.add_argument("--bisect-tol", type=float, dest="bisect_tol")
    sp.add_argument("--branch", choices=("pinned", "shoot"), default="pinned")
    sp.add_argument("--workers", type=int, default=1)
    sp.set_defaults(func=cmd_scan)

    sp = sub.add_parser("classify", help="Fredholm alternative at one parameter value")
    problem_args(sp)
    sp.add_argument("--branch", choices=("pinned", "shoot"), default="pinned")
    sp.set_defaults(func=cmd_classify)

    sp = sub.add_parser("criterion", help="Lomtatidze criterion for y'' + q(t) y = 0")
    sp.add_argument("--q", required=True, help="expression in t")
    sp.add_argument("--T", required=True, help="period, e.g. 2*pi")
    sp.add_argument("--tol", type=float, default=1e-9)
    sp.add_argument("--out", help="output prefix; writes PREFIX.json")
    sp.set_defaults(func=cmd_criterion)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
