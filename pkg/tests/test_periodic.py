import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mdebif import mde, problems
from mdebif.errors import ConvergenceError, SingularJacobianError, ValidationError
from mdebif.periodic import multistart, shoot
from mdebif.regulated import Integrator


@pytest.fixture(scope="module")
def liebau():
    return problems.liebau()


@pytest.fixture(scope="module")
def liebau_orbit(liebau):
    return shoot(liebau, 0.0, [26.5, 0.3])


class TestShoot:
    def test_liebau_converges_to_known_orbit(self, liebau_orbit):
        assert liebau_orbit.converged
        assert np.allclose(liebau_orbit.x0_star, [27.0, 0.0], atol=1e-8)
        ts = np.linspace(0, 2 * math.pi, 501)
        err = max(abs(liebau_orbit.path(t)[0] - (2 + math.cos(t)) ** 3) for t in ts)
        assert err <= 1e-6

    def test_liebau_invariants(self, liebau, liebau_orbit):
        assert liebau_orbit.residual <= 1e-10
        path = liebau_orbit.path
        assert np.linalg.norm(path.final() - path(0.0)) <= 1e-10
        assert mde.residual_sie(liebau, 0.0, path, mde.uniform_grid(liebau.T)) <= 100 * 1e-9

    def test_impulsive_scalar_trivial_branch(self):
        res = shoot(problems.impulsive_scalar(), 0.5, [0.01])
        assert res.converged
        assert abs(res.x0_star[0]) <= 1e-10

    def test_zero_dynamics_no_iterations(self):
        res = shoot(problems.trivial("2"), 0.0, [1.0, -2.0])
        assert res.iterations == 0 and res.residual == 0.0
        assert np.array_equal(res.x0_star, [1.0, -2.0])

    def test_degenerate_newton_matrix(self):
        # x' = 1: M = I everywhere while x(T) - x(0) = T never vanishes
        p = mde.ProblemDef.from_strings(1, 1.0, ["1"], ["0"], Integrator.zero(1.0),
                                        (-1, 1), [(-10, 10)])
        with pytest.raises(SingularJacobianError):
            shoot(p, 0.0, [0.0])

    def test_slow_but_convergent_at_degenerate_lambda(self):
        # at lambda = 0 the Newton matrix is 2*x0, so the iteration only halves x0
        res = shoot(problems.impulsive_scalar(), 0.0, [0.01], max_iter=60)
        assert res.converged and res.iterations > 8

    def test_max_iter(self, liebau):
        with pytest.raises(ConvergenceError):
            shoot(liebau, 0.0, [26.5, 0.3], max_iter=1)

    def test_guess_outside_omega(self, liebau):
        with pytest.raises(ValidationError):
            shoot(liebau, 0.0, [0.0, 0.0])

    def test_to_dict(self, liebau_orbit):
        d = liebau_orbit.to_dict()
        assert d["converged"] is True and len(d["x0_star"]) == 2


@pytest.mark.parametrize("lam", [-0.5, 0.0, 0.7])
def test_lambda_independent_dynamics_give_identical_results(lam):
    p = problems.pure_jump("0.5")
    ref = shoot(p, -1.0, [0.3])
    res = shoot(p, lam, [0.3])
    assert res.x0_star.tobytes() == ref.x0_star.tobytes()
    assert res.iterations == ref.iterations


@settings(max_examples=10, deadline=None)
@given(st.floats(-0.005, 0.005), st.floats(-0.1, 0.1))
def test_fast_local_convergence_liebau(d, lam):
    # neighbouring periodic orbits sit about 0.1 away in x2, so the basin of
    # (27, 0) is probed along the x1 axis
    res = shoot(problems.liebau(), lam, [27.0 * (1 + d), 0.0])
    assert res.iterations <= 8
    assert np.allclose(res.x0_star, [27.0, 0.0], atol=1e-8)


@settings(max_examples=10, deadline=None)
@given(st.floats(-0.01, 0.01), st.floats(-1, 1).filter(lambda v: abs(v) > 0.05))
def test_fast_local_convergence_impulsive_scalar(d, lam):
    res = shoot(problems.impulsive_scalar(), lam, [d])
    assert res.iterations <= 8 and abs(res.x0_star[0]) <= 1e-9


def test_multistart_finds_trivial_orbit():
    found = multistart(problems.impulsive_scalar(), 0.5, per_axis=5)
    assert any(abs(r.x0_star[0]) <= 1e-9 for r in found)
    par = multistart(problems.impulsive_scalar(), 0.5, per_axis=5, workers=3)
    assert [r.x0_star.tobytes() for r in par] == [r.x0_star.tobytes() for r in found]
