import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from bergquant.errors import NonConvergent
from bergquant.quadrature import circle_mean, integrate, Integrand1D, moment, panel_rule, polar_disk_rule, quad
from bergquant.weights import RadialWeight, ReinhardtDomain

import oracles


def test_gaussian_over_real_line():
    assert quad(lambda t: np.exp(-t * t), -math.inf, math.inf, tol=1e-13) == pytest.approx(
        math.sqrt(math.pi), rel=1e-13)


def test_semi_infinite_tails():
    assert quad(lambda t: np.exp(-t), 0.0, math.inf) == pytest.approx(1.0, rel=1e-12)
    assert quad(lambda t: np.exp(t), -math.inf, 0.0) == pytest.approx(1.0, rel=1e-12)
    assert quad(lambda t: 1.0 / (1.0 + t * t), -math.inf, math.inf) == pytest.approx(math.pi, rel=1e-10)


def test_kink_at_declared_point():
    res = integrate(Integrand1D(np.abs, -1.0, 2.0, (0.0,)), tol=1e-12)
    assert res.value == pytest.approx(2.5, abs=1e-14)
    assert res.evaluations == 30


def test_divergent_integral_raises():
    with pytest.raises(NonConvergent):
        quad(lambda t: 1.0 / t, 0.0, 1.0, limit=200)


def test_nonpositive_tolerance_rejected():
    with pytest.raises(ValueError):
        quad(np.exp, 0.0, 1.0, tol=0.0)


@settings(max_examples=40, deadline=None)
@given(st.lists(st.floats(-3, 3), min_size=1, max_size=8), st.floats(-2, 0), st.floats(0.1, 3))
def test_polynomials_against_antiderivative(coeffs, a, width):
    p = np.polynomial.Polynomial(coeffs)
    b = a + width
    exact = p.integ()(b) - p.integ()(a)
    assert quad(p, a, b, tol=1e-13, abs_tol=1e-13) == pytest.approx(exact, rel=1e-11, abs=1e-12)


def test_panel_rule_is_exact_for_degree_31():
    x, w = panel_rule(np.array([0.0, 0.5, 2.0]), order=16)
    assert math.fsum(w * x ** 31) == pytest.approx(2.0 ** 32 / 32, rel=1e-14)


def test_polar_disk_rule_moments():
    z, w = polar_disk_rule(1.0, 32, 32)
    assert np.sum(w) == pytest.approx(math.pi, rel=1e-14)
    assert np.sum(w * np.abs(z) ** 2) == pytest.approx(math.pi / 2, rel=1e-14)
    assert abs(np.sum(w * z)) < 1e-14


def test_circle_mean_of_harmonic_function():
    assert circle_mean(lambda z: np.real(z ** 3) + 2.0, 0.3 + 0.1j, 0.5) == pytest.approx(
        np.real((0.3 + 0.1j) ** 3) + 2.0, abs=1e-14)


@pytest.mark.parametrize("a,m", [(0.0, 0), (0.5, 1), (2.0, 3), (5.0, 0)])
def test_radial_moment_against_polar_oracle(a, m):
    val = moment(ReinhardtDomain.unit_disk(), RadialWeight.gaussian(a), (m,))
    assert val == pytest.approx(oracles.radial_moment_polar(a, m), rel=1e-12)


def test_ball_moment_closed_form():
    # int_{B^2} |z_1|^2 = pi^2 / 6
    val = moment(ReinhardtDomain.ball(1.0, 2), RadialWeight.zero(2), (1, 0))
    assert val == pytest.approx(math.pi ** 2 / 6, rel=1e-13)


def test_moment_rejects_bad_multi_index():
    with pytest.raises(ValueError):
        moment(ReinhardtDomain.unit_disk(), RadialWeight.zero(), (1, 1))
