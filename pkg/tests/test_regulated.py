import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mdebif import mde, problems
from mdebif.errors import ValidationError
from mdebif.regulated import (Integrator, JumpRecord, RegulatedPath, Segment, eval_h,
                              path_eval, path_right_limit, path_to_csv, variation)

CHI = Integrator.from_spec("0", [(0.5, 1.0)], 1.0)


class TestIntegrator:
    def test_chi_left_continuous(self):
        assert eval_h(CHI, 0.5) == 0.0
        assert eval_h(CHI, 0.5 + 1e-12) == 1.0
        assert eval_h(CHI, 1.0) == 1.0

    def test_identity(self):
        h = Integrator.identity(3.0)
        for t in (0.0, 0.7, 2.5, 3.0):
            assert eval_h(h, t) == pytest.approx(t, abs=1e-12)

    def test_liebau_integrator(self):
        h = Integrator.from_spec("0", [(math.pi, 1.0)], 2 * math.pi)
        assert eval_h(h, 2 * math.pi) == 1.0
        assert eval_h(h, math.pi) == 0.0

    def test_negative_time_is_zero(self):
        assert eval_h(Integrator.identity(1.0), -0.3) == 0.0

    @pytest.mark.parametrize("h, expected", [
        (CHI, 1.0),
        (Integrator.identity(1.0), 1.0),
        (Integrator.from_spec("cos(t)", [], 2 * math.pi), 4.0),
        (Integrator.from_spec("-1", [(0.2, -0.5), (0.4, 2.0)], 1.0), 3.5),
    ])
    def test_variation(self, h, expected):
        assert variation(h) == pytest.approx(expected, abs=1e-9)

    @pytest.mark.parametrize("jumps", [[(0.0, 1.0)], [(1.0, 1.0)], [(0.6, 1.0), (0.4, 1.0)],
                                       [(0.5, 1.0), (0.5, 2.0)]])
    def test_invalid_jumps(self, jumps):
        with pytest.raises(ValidationError):
            Integrator.from_spec("0", jumps, 1.0)

    def test_zero_jumps_dropped(self):
        h = Integrator.from_spec("0", [(0.3, 0.0), (0.5, 1.0)], 1.0)
        assert h.jumps == ((0.5, 1.0),)

    def test_density_must_be_in_t(self):
        with pytest.raises(Exception):
            Integrator.from_spec("x1", [], 1.0)

    def test_dict_round_trip(self):
        h = Integrator.from_spec("1 + sin(t)", [(0.25, 2.0)], 1.0)
        assert Integrator.from_dict(h.to_dict()) == h

    def test_sum_merges_jumps(self):
        a = Integrator.from_spec("1", [(0.5, 1.0)], 1.0)
        b = Integrator.from_spec("t", [(0.5, -1.0), (0.7, 2.0)], 1.0)
        c = a + b
        assert c.jumps == ((0.7, 2.0),)
        assert eval_h(c, 1.0) == pytest.approx(1.0 + 0.5 + 2.0)


monotone_h = st.builds(
    lambda c, taus, sizes: Integrator.from_spec(
        f"{c} + t^2", sorted(zip(sorted(set(taus)), sizes)), 1.0),
    st.floats(0.0, 2.0),
    st.lists(st.floats(0.01, 0.99), max_size=4),
    st.lists(st.floats(0.0, 3.0), min_size=4, max_size=4),
)


@settings(max_examples=40, deadline=None)
@given(monotone_h, st.lists(st.floats(0.0, 1.0), min_size=2, max_size=6))
def test_monotone_integrator_properties(h, ts):
    ts = sorted(ts)
    vals = [eval_h(h, t) for t in ts]
    assert all(b >= a - 1e-12 for a, b in zip(vals, vals[1:]))
    assert eval_h(h, 1.0) - eval_h(h, 0.0) == pytest.approx(variation(h), abs=1e-9)


@settings(max_examples=40, deadline=None)
@given(st.floats(-2, 2), st.lists(st.tuples(st.floats(0.01, 0.99), st.floats(-3, 3)), max_size=4))
def test_increment_bounded_by_variation(c, jumps):
    taus = {}
    for tau, size in jumps:
        taus.setdefault(tau, size)
    h = Integrator.from_spec(f"{c}*cos(3*t)", sorted(taus.items()), 1.0)
    assert eval_h(h, 1.0) - eval_h(h, 0.0) <= variation(h) + 1e-9


def _jump_path(v):
    left = np.array([v])
    right = np.array([v + v * v])
    segs = [Segment(0.0, 0.5, lambda t: left.copy()), Segment(0.5, 1.0, lambda t: right.copy())]
    return RegulatedPath(segs, [JumpRecord(0.5, left, right)], 1)


class TestPath:
    def test_constant(self):
        p = RegulatedPath.constant([1.5, -2.0], 3.0)
        for t in (0.0, 1.1, 3.0):
            assert np.array_equal(path_eval(p, t), [1.5, -2.0])

    def test_jump_record(self):
        p = _jump_path(0.2)
        assert path_eval(p, 0.5)[0] == 0.2
        assert path_right_limit(p, 0.5)[0] == pytest.approx(0.24)
        assert path_eval(p, 0.75)[0] == pytest.approx(0.24)

    def test_liebau_start(self):
        p = problems.liebau()
        path = mde.solve_ivp(p, 0.0, [27.0, 0.0])
        assert np.allclose(path_eval(path, 0.0), [27.0, 0.0], atol=1e-14)

    def test_outside_domain(self):
        with pytest.raises(ValueError):
            path_eval(RegulatedPath.constant([1.0], 1.0), 1.5)

    def test_left_value_is_bit_equal(self):
        p = problems.impulsive_scalar()
        path = mde.solve_ivp(p, 0.4, [0.1])
        (j,) = path.jumps
        assert path_eval(path, 0.5).tobytes() == j.left.tobytes()

    def test_csv_has_two_rows_per_jump(self):
        text = path_to_csv(_jump_path(0.2), samples=11)
        rows = [r.split(",") for r in text.strip().splitlines()]
        assert rows[0] == ["t", "x1", "is_jump_left", "is_jump_right"]
        at_jump = [r for r in rows[1:] if float(r[0]) == 0.5]
        assert [r[2:] for r in at_jump] == [["1", "0"], ["0", "1"]]
        assert float(at_jump[0][1]) == 0.2 and float(at_jump[1][1]) == pytest.approx(0.24)
