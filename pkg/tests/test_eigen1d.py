"""Eigenpair module: quadrature constant, shooting solver, tabulated evaluators.

Oracle values come from the closed form pi_p = 2*pi / (p*sin(pi/p)) and the
closed-form eigenvalue (p-1)*(pi_p/L)^p, both independent of the quadrature
and shooting implementations under test.
"""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from anisolap import pi_p, solve_eigenpair, check_slope_sign, eval_v, eval_dv
from anisolap.domain import Interval
from anisolap.eigen1d import Eigenpair1D
from anisolap.errors import DomainError, InvalidExponentError


def pi_p_closed_form(p: float) -> float:
    return 2.0 * math.pi / (p * math.sin(math.pi / p))


class TestPiP:
    def test_p_two_is_pi(self):
        assert pi_p(2.0) == pytest.approx(math.pi, rel=1e-12)

    @pytest.mark.parametrize("p", [1.1, 1.5, 2.0, 2.5, 3.0, 4.0, 7.0, 20.0])
    def test_matches_closed_form(self, p):
        assert pi_p(p) == pytest.approx(pi_p_closed_form(p), rel=1e-10)

    def test_rejects_p_at_or_below_one(self):
        with pytest.raises(InvalidExponentError):
            pi_p(1.0)
        with pytest.raises(InvalidExponentError):
            pi_p(0.5)

    @given(st.floats(min_value=1.05, max_value=50.0))
    @settings(max_examples=30, deadline=None)
    def test_closed_form_property(self, p):
        assert pi_p(p) == pytest.approx(pi_p_closed_form(p), rel=1e-9)


class TestSolveEigenpair:
    def test_linear_case_eigenvalue(self):
        pair = solve_eigenpair(2.0, Interval(0.0, 1.0))
        assert pair.eta == pytest.approx(math.pi**2, abs=1e-8)

    def test_linear_case_eigenfunction_is_sine(self):
        pair = solve_eigenpair(2.0, Interval(0.0, 1.0))
        xs = np.linspace(0.0, 1.0, 1001)
        assert np.max(np.abs(pair.value(xs) - np.sin(math.pi * xs))) < 1e-6
        assert np.max(np.abs(pair.derivative(xs) - math.pi * np.cos(math.pi * xs))) < 1e-5

    @pytest.mark.parametrize("p", [1.5, 3.0])
    def test_eigenvalue_closed_form(self, p):
        pair = solve_eigenpair(p, Interval(0.0, 1.0))
        exact = (p - 1.0) * pi_p_closed_form(p) ** p
        assert pair.eta == pytest.approx(exact, rel=1e-8)

    def test_translation_invariance(self):
        a = solve_eigenpair(3.0, Interval(0.0, 1.0))
        b = solve_eigenpair(3.0, Interval(2.0, 3.0))
        assert b.eta == pytest.approx(a.eta, rel=1e-9)
        assert b.value(2.3) == pytest.approx(a.value(0.3), abs=1e-9)

    def test_length_scaling(self):
        # eta scales as L^(-p): on a length-2 interval the linear eigenvalue
        # is pi^2/4
        pair = solve_eigenpair(2.0, Interval(0.0, 2.0))
        assert pair.eta == pytest.approx(math.pi**2 / 4.0, rel=1e-9)

    def test_normalization_and_boundary(self):
        pair = solve_eigenpair(4.0, Interval(0.0, 1.0))
        assert pair.vs[0] == 0.0 and pair.vs[-1] == 0.0
        assert np.max(pair.vs) == pytest.approx(1.0, abs=1e-9)
        assert np.all(pair.vs >= 0.0)
        assert pair.endpoint_residual < 1e-6

    def test_slope_signs(self):
        pair = solve_eigenpair(1.5, Interval(0.0, 1.0))
        assert check_slope_sign(pair)

    def test_rejects_bad_arguments(self):
        with pytest.raises(InvalidExponentError):
            solve_eigenpair(1.0, Interval(0.0, 1.0))
        with pytest.raises(ValueError):
            solve_eigenpair(2.0, Interval(0.0, 1.0), tol=0.0)


@pytest.fixture(scope="module")
def pair():
    return solve_eigenpair(2.0, Interval(0.0, 1.0))


class TestEvaluators:
    def test_clamps_just_outside(self, pair):
        cell = pair.xs[1] - pair.xs[0]
        assert pair.value(-0.5 * cell) == 0.0
        assert pair.value(1.0 + 0.5 * cell) == 0.0

    def test_raises_far_outside(self, pair):
        with pytest.raises(DomainError):
            pair.value(-0.1)
        with pytest.raises(DomainError):
            eval_dv(pair, 1.1)

    def test_scalar_and_array_evaluation(self, pair):
        v = eval_v(pair, 0.5)
        assert isinstance(v, float)
        arr = eval_v(pair, np.array([0.25, 0.5, 0.75]))
        assert arr.shape == (3,)
        assert arr[1] == pytest.approx(v)

    def test_record_roundtrip(self, pair):
        rec = pair.to_record()
        back = Eigenpair1D.from_record(rec)
        xs = np.linspace(0.0, 1.0, 37)
        assert back.eta == pair.eta
        assert np.allclose(back.value(xs), pair.value(xs), atol=1e-12)
