"""Measure differential equations: periodic solutions, monodromy and bifurcation tests."""
from .expr import EvalContext, ExprNode, differentiate, evaluate, parse, to_string
from .regulated import Integrator, RegulatedPath, eval_h, path_eval, path_right_limit, variation
from .kstieltjes import IntegrandFn, indefinite, ks_integral
from .mde import ProblemDef, SolveSettings, residual_sie, solve_ivp
from .variational import JacobianPair, MonodromyReport, jacobians, monodromy, monodromy_fd_check
from .periodic import ShootResult, shoot
from .bifurcation import (PinnedBranch, ScanReport, ShootingBranch, fredholm_classify,
                          index_sign, scan)
from .criteria import CriterionVerdict, lomtatidze_check, second_order_to_system

__version__ = "0.1.0"
