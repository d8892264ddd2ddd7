import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from bergquant import toric_cp1 as tc
from bergquant.errors import DegenerateLevelSet, LevelMismatch
from bergquant.weights import (FS, TWO_PI, LogTailPotential, MaxPotential, default_grid, fs_slope,
                               make_test_potential, random_mixture)

import oracles


@pytest.mark.parametrize("k", [1, 7, 100, 500])
def test_fs_norms_match_beta_integrals(k):
    spec = tc.hilbert_norms(FS, k)
    assert np.allclose(spec.log_norms, np.log(oracles.fs_norms(k)), rtol=0, atol=1e-11)
    assert np.allclose(tc.fs_log_norms(k), np.log(oracles.fs_norms(k)), rtol=0, atol=1e-12)


@pytest.mark.parametrize("k", [1, 5, 50])
def test_fs_kernel_is_constant(k):
    d = tc.quantize(FS, k)
    t = default_grid()
    assert np.max(np.abs(d.kernel(t) - (k + 1) / TWO_PI)) <= 1e-9 * (k + 1)
    assert np.allclose(d.metric_ratio(t[::50]), 1.0, atol=1e-9)


def test_shift_scales_norms():
    p = make_test_potential()
    a = tc.hilbert_norms(p, 20)
    b = tc.hilbert_norms(p.shifted(0.3), 20)
    assert np.allclose(b.log_norms - a.log_norms, -20 * 0.3, atol=1e-12)


def test_rule_level_mismatch():
    rule = tc.norm_rule(FS, 10)
    with pytest.raises(LevelMismatch):
        tc.hilbert_norms(FS, 11, rule)
    with pytest.raises(ValueError):
        tc.norm_rule(FS, 0)


@settings(max_examples=8, deadline=None)
@given(st.integers(0, 2 ** 32 - 1), st.sampled_from([3, 20, 60]))
def test_masses_of_random_mixtures(seed, k):
    p = random_mixture(np.random.default_rng(seed))
    d = tc.quantize(p, k)
    m = TWO_PI * (k + 1) / k
    assert d.m_mass() == pytest.approx(m, rel=1e-10)
    assert d.integrate(lambda t: np.ones_like(t)) == pytest.approx(m, rel=1e-10)
    assert d.metric_mass() == pytest.approx(TWO_PI, rel=1e-10)


def test_rule_and_adaptive_integrals_agree():
    p = make_test_potential(0.5, 1.0)
    d = tc.quantize(p, 30)
    f = lambda t: np.tanh(t - 0.5)
    rule_val = d.integrate(f)
    adaptive = tc.BergmanDensity(tc.QuantumSpectrum(30, d.spectrum.log_norms, p, d.spectrum.window))
    assert rule_val == pytest.approx(adaptive.integrate(f), abs=1e-10)


def test_metric_ratio_matches_second_difference():
    p = make_test_potential(0.3, 2.0)
    spec = tc.hilbert_norms(p, 40)
    t = np.linspace(-5, 5, 11)
    assert np.allclose(tc.bergman_metric_ratio(spec, t), tc.metric_ratio_fd(spec, t), rtol=1e-5)


def test_ma_measure_of_fs():
    mu = tc.ma_measure(FS)
    t = np.linspace(-5, 5, 7)
    assert np.allclose(mu.cdf(t), TWO_PI * fs_slope(t))
    assert mu.mass() == pytest.approx(TWO_PI)


def test_sublevel_intervals():
    iv = tc.sublevel_intervals(lambda t: t * t - 1.0)
    assert len(iv) == 1 and iv[0][0] == pytest.approx(-1.0, abs=1e-10) and iv[0][1] == pytest.approx(1.0, abs=1e-10)
    iv = tc.sublevel_intervals(lambda t: 1.0 - t * t)
    assert iv[0][0] == -math.inf and iv[-1][1] == math.inf and len(iv) == 2
    flat = lambda t: np.where(np.abs(t) < 1, 0.0, np.abs(t) - 1)
    assert tc.sublevel_intervals(flat)[0][1] == pytest.approx(1.0, abs=1e-2)
    with pytest.raises(DegenerateLevelSet):
        tc.sublevel_intervals(flat, strict_ties=True)


def test_berndtsson_and_pointwise_comparison():
    rng = np.random.default_rng(9)
    phi, psi = random_mixture(rng), random_mixture(rng)
    assert tc.berndtsson_check(phi, psi, 20).passed
    assert tc.comparison_pointwise(phi, psi, 20).passed
    assert tc.berndtsson_check(phi, MaxPotential(phi, psi), 20).passed


def test_fs_doubling_and_lower_bound_closed_forms():
    for k in (10, 40):
        assert 1 - tc.doubling_ratio(FS, k) == pytest.approx(1 - (2 * k + 1) / (k + 1), abs=1e-12)
    rep = tc.lower_bound_check(FS, 1.0, (10, 20))
    assert rep.eps == pytest.approx([-0.1, -0.05], abs=1e-12)
    with pytest.raises(ValueError):
        tc.lower_bound_check(FS, 1.5, (10,))


def test_epsilon_report_properties():
    r = tc.EpsilonReport("x", [10, 20, 40], [0.4, 0.2, 0.1])
    assert r.non_increasing and r.decreasing and r.passed
    slope, _ = r.trend_fit()
    assert slope == pytest.approx(-1.0)
    assert not tc.EpsilonReport("y", [10, 20], [-0.2, -0.1]).non_increasing


def test_c11_on_fs():
    b = make_test_potential(0.0, 0.0).known_bounds
    rep = tc.check_theorem_C11(FS, b, [25, 50], with_masses=False)
    assert rep.passed
    assert rep.rows[0].min_ratio == pytest.approx(1.0, abs=1e-9)


def test_tail_mass_decays_with_level():
    p = LogTailPotential(1.0)
    a = tc.tail_mass(p, -3.0, 10)
    b = tc.tail_mass(p, -5.0, 10)
    assert 0 < b < a
