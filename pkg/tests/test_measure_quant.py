import math

import numpy as np
import pytest
from scipy import integrate as si
from scipy.special import expit

from bergquant import measure_quant as mq
from bergquant.errors import AtomDetected, MassMismatch, WindowTooSmall
from bergquant.measures import (fs_measure, holder_measure, measure_from_config, mixture_measure,
                                random_measure, tabulated_measure)
from bergquant.weights import TWO_PI, default_grid, fs_potential


def _translated_fs_constant(c: float) -> float:
    """``-int (log(1+e^{t-c}) - log(1+e^t)) phi_FS'' dt``; the normalizing constant of the solution."""
    f = lambda t: (fs_potential(t - c) - fs_potential(t)) * expit(t) * expit(-t)
    val, _ = si.quad(f, -np.inf, np.inf, epsabs=1e-14, epsrel=1e-13, limit=400)
    return -val


def test_translated_fs_closed_form():
    c = 1.0
    pot = mq.solve_calabi_yau(fs_measure(c))
    t = default_grid()
    exact = fs_potential(t - c) - fs_potential(t) + _translated_fs_constant(c)
    assert np.max(np.abs(pot.rel(t) - exact)) <= 1e-5
    assert abs(mq.normalization(pot)) <= 1e-10
    assert mq.round_trip_error(fs_measure(c), pot) <= 1e-8
    assert mq.interpolation_error(fs_measure(c), pot) <= TWO_PI * mq.INTERP_TOL


def test_fs_measure_solves_to_fs():
    pot = mq.solve_calabi_yau(fs_measure())
    t = default_grid()
    assert np.max(np.abs(pot.rel(t))) <= 1e-5


def test_mass_gate():
    half = mixture_measure([1.0], [0.0])
    bad = type(half)(lambda t: 0.5 * half.cdf(t), None, None, (), "half")
    with pytest.raises(MassMismatch):
        mq.solve_calabi_yau(bad)
    with pytest.raises(MassMismatch):
        tabulated_measure([0.0, 1.0], [0.0, 3.0])
    with pytest.raises(MassMismatch):
        mixture_measure([0.5, 0.6], [0.0, 1.0])


def test_atoms_and_windows_rejected():
    step = type(fs_measure())(lambda t: TWO_PI * (np.asarray(t) >= 0.3), None, None, (), "step")
    with pytest.raises(AtomDetected):
        step.validate()
    with pytest.raises(AtomDetected):
        tabulated_measure([0.0, 0.0, 1.0], [0.0, 1.0, TWO_PI])
    with pytest.raises(WindowTooSmall):
        mq.solve_calabi_yau(fs_measure(35.0))


@pytest.mark.parametrize("seed", range(4))
def test_round_trip_for_seeded_measures(seed):
    nu = random_measure(np.random.default_rng(seed))
    pot = mq.solve_calabi_yau(nu)
    assert mq.round_trip_error(nu, pot) <= 1e-8


def test_holder_measure_is_singular_but_solvable():
    nu = holder_measure(1.0, 0.5)
    assert nu.mass() == pytest.approx(TWO_PI)
    pot = mq.solve_calabi_yau(nu)
    assert mq.round_trip_error(nu, pot) <= 1e-8
    # second derivative grows without bound towards the centre
    assert pot.d2phi(1e-6) > 100 * pot.d2phi(0.5)
    assert nu.integrate(lambda t: t * t) == pytest.approx(TWO_PI / 5.0, rel=1e-10)


def test_tabulated_uniform_measure():
    t = np.linspace(-2.0, 2.0, 41)
    nu = tabulated_measure(t, TWO_PI * (t + 2.0) / 4.0)
    assert nu.cdf(-3.0) == 0.0 and nu.cdf(3.0) == pytest.approx(TWO_PI)
    assert nu.density(0.5) == pytest.approx(TWO_PI / 4.0)
    assert nu.integrate(lambda x: x * x) == pytest.approx(TWO_PI * 4.0 / 3.0, rel=1e-10)
    pot = mq.solve_calabi_yau(nu)
    assert mq.round_trip_error(nu, pot) <= 1e-8


def test_quantized_mass_and_weak_convergence():
    nu = fs_measure(1.0)
    rep = mq.weak_convergence_report(nu, k_list=(10, 20, 40), threshold=0.2)
    assert rep.passed
    assert rep.round_trip <= 1e-8
    k = 40
    d = mq.quantize_measure(nu, k)
    assert d.integrate(lambda t: np.ones_like(t)) == pytest.approx(TWO_PI * (k + 1) / k, rel=1e-10)
    assert len(rep.rows()) == 5 * 3


def test_noise_floor_tie_rule():
    rep = mq.WeakConvergenceReport("m", [1, 2], ["f"], [0.0], np.array([[1e-14, 2e-14]]), 0.1)
    assert rep.row_passed(0)
    rep = mq.WeakConvergenceReport("m", [1, 2], ["f"], [0.0], np.array([[1e-3, 2e-3]]), 0.1)
    assert not rep.row_passed(0)


def test_measure_config_builders():
    assert measure_from_config({"kind": "fs", "shift": 2.0}).name == "FS(t-2)"
    assert measure_from_config({"kind": "random", "seed": 3}).name == "random3(seed=3)"
    with pytest.raises(ValueError):
        measure_from_config({"kind": "other"})
    with pytest.raises(ValueError):
        holder_measure(1.0, 1.5)


def test_test_functions_bounded():
    t = np.linspace(-100, 100, 2001)
    for f in mq.test_functions():
        assert np.all(np.abs(f(t)) <= 1.0 + 1e-15)
    assert math.isclose(mq.test_functions()[0](3.0), 1.0)
