import math
import random

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import quad

from mdebif import mde, problems
from mdebif import expr as ex
from mdebif.errors import QuadratureError
from mdebif.kstieltjes import IntegrandFn, cumulative, indefinite, ks_integral
from mdebif.regulated import Integrator, eval_h, variation

CHI = Integrator.from_spec("0", [(0.5, 1.0)], 1.0)
TOL = 1e-10


def q_minus(t):
    q = 3 * (6 - 7 * math.cos(t) - 10 * math.cos(t) ** 2) / (10 * (2 + math.cos(t)) ** 2)
    return max(-q, 0.0)


class TestKsIntegral:
    def test_single_jump_convention(self):
        assert ks_integral(lambda s: s * s, CHI, 0.0, 1.0) == 0.25

    def test_q_minus_against_identity(self):
        # kinks of q_- at pi/3 and 5pi/3 declared as discontinuities
        phi = IntegrandFn(q_minus, (math.pi / 3, 5 * math.pi / 3))
        val = ks_integral(phi, Integrator.identity(2 * math.pi), 0.0, 2 * math.pi)
        assert val == pytest.approx(0.513543, abs=1e-4)
        assert val == pytest.approx(0.513543308174105, abs=1e-9)

    def test_total_measure(self):
        assert ks_integral(lambda s: 1.0, CHI, 0.0, 1.0) == 1.0
        # jump at b excluded, jump at a included
        assert ks_integral(lambda s: 1.0, CHI, 0.0, 0.5) == 0.0
        assert ks_integral(lambda s: 1.0, CHI, 0.5, 1.0) == 1.0

    def test_orientation(self):
        h = Integrator.from_spec("1 + t", [(0.3, 2.0)], 1.0)
        f = lambda s: math.sin(3 * s)  # noqa: E731
        assert ks_integral(f, h, 0.8, 0.1) == -ks_integral(f, h, 0.1, 0.8)

    def test_vector_and_matrix(self):
        h = Integrator.from_spec("1", [(0.5, 2.0)], 1.0)
        v = ks_integral(lambda s: np.array([1.0, s]), h, 0.0, 1.0)
        assert np.allclose(v, [1.0 + 2.0, 0.5 + 1.0])
        m = ks_integral(lambda s: np.eye(2) * s, h, 0.0, 1.0)
        assert m.shape == (2, 2) and m[0, 0] == pytest.approx(1.5)

    def test_nan_integrand(self):
        with pytest.raises(QuadratureError):
            ks_integral(lambda s: float("nan"), Integrator.identity(1.0), 0.0, 1.0)

    def test_out_of_range(self):
        with pytest.raises(ValueError):
            ks_integral(lambda s: 1.0, CHI, 0.0, 2.0)

    def test_discontinuous_integrand(self):
        phi = IntegrandFn(lambda s: 1.0 if s > 0.3 else -1.0, (0.3,))
        assert ks_integral(phi, Integrator.identity(1.0), 0.0, 1.0) == pytest.approx(0.4, abs=1e-12)


smooth_phi = st.sampled_from([
    lambda s: math.sin(5 * s),
    lambda s: s ** 3 - s,
    lambda s: math.exp(-s) * math.cos(2 * s),
    lambda s: 1.0 / (1.0 + s * s),
])
integrators = st.sampled_from([
    CHI,
    Integrator.identity(1.0),
    Integrator.from_spec("1 + cos(4*t)", [(0.25, -1.0), (0.5, 3.0)], 1.0),
    Integrator.from_spec("t^2", [(0.7, 0.5)], 1.0),
])
times = st.sampled_from([0.0, 0.1, 0.25, 0.5, 0.7, 0.9, 1.0])


@settings(max_examples=60, deadline=None)
@given(smooth_phi, integrators, times, times, times)
def test_additivity(phi, h, a, b, c):
    a, b, c = sorted((a, b, c))
    whole = ks_integral(phi, h, a, c, TOL)
    parts = ks_integral(phi, h, a, b, TOL) + ks_integral(phi, h, b, c, TOL)
    assert whole == pytest.approx(parts, abs=2 * TOL)


@settings(max_examples=40, deadline=None)
@given(smooth_phi, smooth_phi, integrators, integrators, st.floats(-2, 2), st.floats(-2, 2))
def test_linearity(f1, f2, h1, h2, alpha, beta):
    lhs = ks_integral(lambda s: alpha * f1(s) + beta * f2(s), h1, 0.0, 1.0, TOL)
    rhs = alpha * ks_integral(f1, h1, 0.0, 1.0, TOL) + beta * ks_integral(f2, h1, 0.0, 1.0, TOL)
    assert lhs == pytest.approx(rhs, abs=2 * TOL * (1 + abs(alpha) + abs(beta)))
    both = ks_integral(f1, h1 + h2, 0.0, 1.0, TOL)
    split = ks_integral(f1, h1, 0.0, 1.0, TOL) + ks_integral(f1, h2, 0.0, 1.0, TOL)
    assert both == pytest.approx(split, abs=2 * TOL)


@settings(max_examples=40, deadline=None)
@given(smooth_phi, integrators, times, times)
def test_variation_bound(phi, h, a, b):
    a, b = sorted((a, b))
    sup = max(abs(phi(s)) for s in np.linspace(a, b, 2001))
    assert abs(ks_integral(phi, h, a, b, TOL)) <= sup * variation(h, a, b) + TOL


def test_henstock_reduction_against_quadpack():
    rng = random.Random(0)
    h = Integrator.identity(1.0)
    for _ in range(20):
        c = [rng.uniform(-2, 2) for _ in range(4)]
        f = lambda s, c=c: c[0] + c[1] * s ** 3 + c[2] * math.sin(7 * s) + c[3] * math.cos(s * s)  # noqa: E731
        ref = quad(f, 0.0, 1.0, epsabs=1e-13, epsrel=1e-13)[0]
        assert ks_integral(f, h, 0.0, 1.0) == pytest.approx(ref, abs=1e-9)


class TestIndefinite:
    def test_reproduces_h(self):
        H = indefinite(lambda s: 1.0, CHI)
        assert H(0.5)[0] == 0.0
        assert H(0.5 + 1e-9)[0] == 1.0
        assert H(1.0)[0] == 1.0

    def test_riemann_case(self):
        H = indefinite(lambda s: s, Integrator.identity(1.0))
        for t in (0.0, 0.3, 1.0):
            assert H(t)[0] == pytest.approx(t * t / 2, abs=1e-12)

    def test_jump_of_solution_squared(self):
        p = problems.impulsive_scalar()
        x0 = mde.solve_ivp(p, 0.3, [0.1])
        phi = IntegrandFn.along_path(lambda s: x0(s)[0] ** 2, x0)
        H = indefinite(phi, p.h)
        assert H.jump_times == (0.5,)
        (j,) = H.jumps
        assert j.right[0] - j.left[0] == pytest.approx(x0(0.5)[0] ** 2, rel=1e-14)

    def test_matches_cumulative(self):
        h = Integrator.from_spec("1 + t", [(0.3, 2.0), (0.6, -1.0)], 1.0)
        f = lambda s: math.cos(2 * s)  # noqa: E731
        H = indefinite(f, h)
        grid = np.linspace(0, 1, 11).tolist()
        for t, c in zip(grid, cumulative(f, h, grid)):
            assert H(t)[0] == pytest.approx(c, abs=1e-9)

    def test_left_continuity_matches_eval_h(self):
        h = Integrator.from_spec("2", [(0.3, 2.0), (0.6, -1.0)], 1.0)
        H = indefinite(lambda s: 1.0, h)
        for t in (0.0, 0.3, 0.45, 0.6, 0.61, 1.0):
            assert H(t)[0] == pytest.approx(eval_h(h, t), abs=1e-12)
