import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from bergquant.errors import SlopeViolation, WindowTooSmall
from bergquant.weights import (FS, LogTailPotential, PlanarWeight, Profile, RadialWeight,
                               ReinhardtDomain, SmoothFunction, SoftplusMixture, SplinePotential,
                               check_window, default_grid, domain_from_config, fs_curvature,
                               fs_potential, fs_slope, function_from_config, log_fs_curvature,
                               make_test_potential, potential_from_config, random_mixture,
                               random_radial_weight, weight_from_config)


def _fd(f, t, h=1e-5):
    return (f(t + h) - f(t - h)) / (2 * h)


def test_fs_functions_are_stable_far_out():
    t = np.array([-800.0, -40.0, 0.0, 40.0, 800.0])
    assert np.all(np.isfinite(fs_potential(t)))
    assert fs_potential(800.0) == 800.0
    assert fs_potential(0.0) == pytest.approx(math.log(2.0), rel=1e-15)
    assert fs_curvature(0.0) == 0.25
    assert log_fs_curvature(-800.0) == pytest.approx(-800.0, rel=1e-15)


def test_fs_derivatives_consistent():
    t = np.linspace(-6, 6, 25)
    assert np.allclose(_fd(fs_potential, t), fs_slope(t), atol=1e-9)
    assert np.allclose(_fd(fs_slope, t), fs_curvature(t), atol=1e-9)


FUNCTIONS = [SmoothFunction.tanh(0.5, 2.0), SmoothFunction.sigmoid(3.0, -1.0),
             SmoothFunction.lorentzian(1.0), SmoothFunction.bump(-1.2, 0.3, 0.5),
             SmoothFunction.tanh() * -0.3 + SmoothFunction.constant(2.0)]


@pytest.mark.parametrize("f", FUNCTIONS, ids=lambda f: f.name)
def test_smooth_function_derivatives(f):
    t = np.linspace(-4, 4, 33)
    assert np.allclose(_fd(f, t), f.df(t), atol=1e-8)
    assert np.allclose(_fd(f.df, t), f.d2f(t), atol=1e-7)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2 ** 32 - 1))
def test_random_mixture_is_admissible(seed):
    p = random_mixture(np.random.default_rng(seed))
    p.check_admissible()
    assert p.is_full_mass()
    t = np.linspace(-30, 30, 61)
    assert np.allclose(p.rel(t), p.phi(t) - fs_potential(t), atol=1e-10)
    assert np.allclose(_fd(p.phi, t), p.dphi(t), atol=1e-8)


def test_relative_potential_bounded_for_mixture():
    p = SoftplusMixture([0.5, 0.5], [0.0, 4.0])
    t = np.array([-700.0, 700.0])
    # rel -> 0 at -inf and -> -sum w_i c_i = -2 at +inf
    assert np.allclose(p.rel(t), [0.0, -2.0], atol=1e-12)


def test_test_potential_bounds_are_exact():
    p = make_test_potential(0.5, 1.0)
    b = p.curvature_bounds(np.linspace(-60, 60, 20001))
    assert b.a == pytest.approx(p.known_bounds.a, rel=1e-9)
    assert b.A == pytest.approx(p.known_bounds.A, rel=1e-9)


def test_invalid_potentials_rejected():
    with pytest.raises(SlopeViolation):
        make_test_potential(1.5)
    with pytest.raises(SlopeViolation):
        SoftplusMixture([0.7, 0.7], [0.0, 1.0])
    with pytest.raises(SlopeViolation):
        SplinePotential([0.0, 1.0, 2.0], [0.5, 0.2, 0.9])
    with pytest.raises(SlopeViolation):
        SplinePotential([0.0, 1.0], [0.5, 1.2])
    with pytest.raises(SlopeViolation):
        LogTailPotential(2.0)


def test_spline_potential_is_piecewise_quadratic():
    s = SplinePotential([0.0, 1.0, 3.0], [0.0, 0.5, 1.0], phi0=1.0)
    assert s.phi(1.0) == pytest.approx(1.25)
    assert s.phi(3.0) == pytest.approx(1.25 + 1.5)
    assert s.phi(-2.0) == pytest.approx(1.0)
    assert s.phi(5.0) == pytest.approx(4.75)
    assert s.dphi(2.0) == pytest.approx(0.75)


def test_spline_from_values_recovers_fs():
    t = np.linspace(-40, 40, 8001)
    s = SplinePotential.from_values(t, fs_potential(t))
    assert np.max(np.abs(s.phi(t) - fs_potential(t))) < 1e-4


def test_logtail_is_full_mass_but_unbounded():
    p = LogTailPotential(1.0)
    p.check_admissible(np.linspace(-200, 200, 4001))
    assert p.rel(-1e6) < -10
    t = np.linspace(-5, 5, 21)
    assert np.allclose(_fd(p.dphi, t), p.d2phi(t), atol=1e-8)


def test_check_window():
    assert check_window(FS) == (-40.0, 40.0)
    with pytest.raises(WindowTooSmall):
        check_window(LogTailPotential(1.0))


def test_radial_weight_curvature_data():
    w = RadialWeight.gaussian(2.0, n=2)
    assert w.declared_lower_bound == pytest.approx(2.0)
    assert w.declared_laplacian_sup == pytest.approx(16.0)
    assert w(np.array([0.5, 0.5j])) == pytest.approx(1.0)


def test_profile_levi_form():
    p = Profile.polynomial([0.0, 1.0, 0.5])
    # d/ds (s g'(s)) = 1 + 2 s
    assert p.levi(0.3) == pytest.approx(1.6)
    assert Profile.log1p(2.0).scaled(3.0)(1.0) == pytest.approx(3 * math.log(3.0))


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2 ** 32 - 1))
def test_random_radial_weights_are_psh(seed):
    w = random_radial_weight(np.random.default_rng(seed))
    assert w.is_psh()


def test_planar_weight_laplacian():
    w = PlanarWeight.gaussian_plus_harmonic(1.5, 0.3, 3)
    assert w.declared_lower_bound == pytest.approx(1.5, abs=1e-5)
    assert PlanarWeight.real_part(2.0).is_subharmonic()


def test_config_builders():
    assert potential_from_config({"kind": "fs"}) is FS
    p = potential_from_config({"kind": "random", "seed": 4})
    q = potential_from_config({"kind": "random", "seed": 4})
    t = default_grid()
    assert np.array_equal(p.phi(t), q.phi(t))
    assert p.name == "mix3(seed=4)"
    d = domain_from_config({"kind": "ball", "n": 2})
    assert d.kind == "ball" and d.n == 2
    assert isinstance(weight_from_config({"kind": "planar", "form": "exp_real"},
                                         ReinhardtDomain.unit_disk()), PlanarWeight)
    f = function_from_config({"kind": "lorentzian", "scale": -1.0})
    assert f(0.0) == -1.0
    for bad in ({"kind": "nope"},):
        with pytest.raises(ValueError):
            potential_from_config(bad)
        with pytest.raises(ValueError):
            function_from_config(bad)
        with pytest.raises(ValueError):
            weight_from_config(bad, ReinhardtDomain.unit_disk())
