import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import quad
from scipy.linalg import expm

from mdebif import mde
from mdebif.criteria import lomtatidze_check, second_order_to_system, sign_changes
from mdebif.problems import LIEBAU_Q
from mdebif.variational import monodromy


def monodromy_of(q, T, hill_form=False):
    p = second_order_to_system(q, T, hill_form=hill_form)
    return monodromy(p, 0.0, mde.solve_ivp(p, 0.0, [0.0, 0.0]))


def expm_oracle(A, T):
    """Scaling and squaring with a Taylor core, independent of the solver."""
    X = np.asarray(A, float) * T
    k = max(0, int(math.ceil(math.log2(max(np.linalg.norm(X, 1), 1e-300)))) + 4)
    X = X / 2 ** k
    E, term = np.eye(len(X)), np.eye(len(X))
    for j in range(1, 20):
        term = term @ X / j
        E = E + term
    for _ in range(k):
        E = E @ E
    return E


class TestLomtatidze:
    def test_liebau_numbers(self):
        v = lomtatidze_check(LIEBAU_Q, 2 * math.pi)
        assert v.Qminus == pytest.approx(0.513543, abs=1e-4)
        assert v.Qplus == pytest.approx(3.06682, abs=1e-4)
        assert v.factor == pytest.approx(0.193328, abs=1e-4)
        assert v.product == pytest.approx(0.592902, abs=1e-4)
        assert v.two_over_pi == pytest.approx(0.63662, abs=1e-4)
        assert v.verdict == "unique_trivial"
        assert v.sign_changes == pytest.approx([math.pi / 3, 5 * math.pi / 3], abs=1e-11)

    def test_liebau_high_precision(self):
        v = lomtatidze_check(LIEBAU_Q, 2 * math.pi)
        # reference values from 30-digit quadrature
        assert v.Qminus == pytest.approx(0.513543308174105, abs=1e-11)
        assert v.Qplus == pytest.approx(3.0668198845991204, abs=1e-10)

    def test_one_signed(self):
        v = lomtatidze_check("1", 1.0)
        assert v.Qminus == 0.0 and v.Qplus == pytest.approx(1.0)
        assert not v.positivity_ok and v.verdict == "inconclusive"

    def test_sine(self):
        v = lomtatidze_check("sin(t)", 2 * math.pi)
        assert v.Qminus == pytest.approx(2.0, abs=1e-9)
        assert v.Qplus == pytest.approx(2.0, abs=1e-9)
        assert not v.bound_ok and v.verdict == "inconclusive"

    def test_rejects_state_variables(self):
        with pytest.raises(Exception):
            lomtatidze_check("x1*t", 1.0)

    def test_to_dict(self):
        d = lomtatidze_check(LIEBAU_Q, 2 * math.pi).to_dict()
        assert d["verdict"] == "unique_trivial"
        assert set(d) >= {"Qminus", "Qplus", "one_minus_half_pi_Qminus", "product", "two_over_pi"}


q_family = st.builds(lambda a, b, c: f"({a}) + ({b})*cos(t) + ({c})*sin(2*t)",
                     st.floats(-1, 1), st.floats(-2, 2), st.floats(-2, 2))


@settings(max_examples=30, deadline=None)
@given(q_family)
def test_decomposition_consistency(q):
    tol = 1e-9
    v = lomtatidze_check(q, 2 * math.pi, tol)
    from mdebif import expr as ex

    fn = ex.compile_scalar(ex.parse(q))
    pts = v.sign_changes or None
    total = quad(lambda t: fn(t, 0.0, ()), 0, 2 * math.pi, points=pts, epsabs=1e-13, limit=200)[0]
    absolute = quad(lambda t: abs(fn(t, 0.0, ())), 0, 2 * math.pi, points=pts, epsabs=1e-13, limit=200)[0]
    assert v.Qplus - v.Qminus == pytest.approx(total, abs=10 * tol)
    assert v.Qplus + v.Qminus == pytest.approx(absolute, abs=10 * tol)
    assert (v.verdict == "unique_trivial") == (v.positivity_ok and v.lhs_ok and v.bound_ok)


@settings(max_examples=15, deadline=None)
@given(q_family)
def test_unique_trivial_implies_invertible_companion(q):
    v = lomtatidze_check(q, 2 * math.pi)
    if v.verdict == "unique_trivial":
        rep = monodromy_of(q, 2 * math.pi, hill_form=True)
        assert not rep.degenerate


def test_sign_changes_tangent_zero_ignored():
    # cos(t)^2 - 1 touches zero without crossing
    assert sign_changes(lambda t: math.cos(t) ** 2 - 1, 0.1, 3.0) == []


class TestCompanion:
    def test_liebau_both_forms_nondegenerate(self):
        assert abs(monodromy_of(LIEBAU_Q, 2 * math.pi).det_I_minus_M) > 1e-3
        assert abs(monodromy_of(LIEBAU_Q, 2 * math.pi, hill_form=True).det_I_minus_M) > 1e-3

    def test_free_particle(self):
        T = 2.5
        rep = monodromy_of("0", T)
        assert np.allclose(rep.M, [[1, T], [0, 1]], atol=1e-12)
        assert rep.degenerate

    def test_oracle_for_minus_one(self):
        T = 2 * math.pi
        ref = expm_oracle([[0, 1], [-1, 0]], T)
        assert np.allclose(ref, expm(np.array([[0, 1], [-1, 0]]) * T), atol=1e-12)
        assert np.allclose(ref, np.eye(2), atol=1e-12)
        rep = monodromy_of("-1", T)
        assert np.allclose(rep.M, ref, atol=1e-6)
        assert rep.degenerate

    def test_plus_one_hyperbolic(self):
        T = 2 * math.pi
        ref = expm_oracle([[0, 1], [1, 0]], T)
        assert np.allclose(ref, [[math.cosh(T), math.sinh(T)], [math.sinh(T), math.cosh(T)]], rtol=1e-12)
        rep = monodromy_of("1", T)
        assert np.allclose(rep.M, ref, rtol=1e-6)
        assert rep.det_I_minus_M == pytest.approx(2 - 2 * math.cosh(T), rel=1e-6)
        assert not rep.degenerate

    def test_hill_form_flips_sign(self):
        T = 2 * math.pi
        rep = monodromy_of("1", T, hill_form=True)
        assert rep.degenerate
