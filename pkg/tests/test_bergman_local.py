import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from bergquant import bergman_local as bl
from bergquant.errors import NonConvergent
from bergquant.weights import PlanarWeight, RadialWeight, ReinhardtDomain

import oracles

DISK = ReinhardtDomain.unit_disk()


def test_multi_index_count_and_order():
    idx = bl.multi_indices(3, 4)
    assert len(idx) == math.comb(3 + 4, 3)
    assert idx[:4] == ((0, 0, 0), (1, 0, 0), (0, 1, 0), (0, 0, 1))


def test_unweighted_disk_gram():
    g = bl.gram_matrix(DISK, RadialWeight.zero(), 1)
    assert g.diagonal
    assert np.allclose(g.entries, np.diag([math.pi, math.pi / 2]), rtol=1e-13)


def test_unweighted_disk_kernel_and_metric():
    b = bl.converged_basis(DISK, RadialWeight.zero(), np.array([0.5]), rtol=1e-12, v=[1.0])
    kv = bl.kernel_value(b, np.array([0.5]), [1.0])
    assert kv.K == pytest.approx(oracles.disk_kernel(0.5), rel=1e-10)
    assert kv.K == pytest.approx(0.565884, abs=5e-7)
    assert kv.B2 == pytest.approx(2.0 / (1 - 0.25) ** 2, rel=1e-9)
    assert kv.B2 == pytest.approx(3.5556, abs=5e-5)
    assert bl.bergman_metric(b, np.array([0.5]), [1.0]) == pytest.approx(kv.B2)


def test_gaussian_disk_center_values():
    b = bl.basis(DISK, RadialWeight.gaussian(1.0), 8)
    z = np.array([0.0])
    K = bl.kernel_diag(b, z)
    Kt = bl.tilde_kernel(b, z, [1.0])
    assert K == pytest.approx(1.0 / oracles.radial_moment_polar(1.0, 0), rel=1e-12)
    assert Kt == pytest.approx(1.0 / oracles.radial_moment_polar(1.0, 1), rel=1e-12)
    assert K == pytest.approx(0.503559, abs=5e-7)
    assert Kt == pytest.approx(1.204619, abs=5e-7)


def test_planar_gram_against_riemann_sum():
    w = PlanarWeight.real_part(1.0)
    g = bl.gram_matrix(DISK, w, 3)
    ref = oracles.riemann_gram_disk(lambda z: np.real(z), 3)
    assert not g.diagonal
    assert np.allclose(g.entries, ref, rtol=1e-4, atol=1e-4)


def test_planar_orthonormalization():
    b = bl.basis(DISK, PlanarWeight.exp_real(1.0), 12)
    assert b.orthonormality_error() < 1e-10
    z = np.array([0.2 - 0.3j])
    a = bl.tilde_kernel_rank_one(b, z, [1.0])
    c = bl.tilde_kernel_nullspace(b, z, [1.0])
    assert a == pytest.approx(c, rel=1e-9)


def test_planar_metric_matches_log_kernel_hessian():
    b = bl.converged_basis(DISK, PlanarWeight.real_part(2.0), np.array([0.1]), rtol=1e-10, v=[1.0])
    z = np.array([0.1])
    b2 = bl.tilde_kernel(b, z, [1.0]) / bl.kernel_diag(b, z)
    assert b2 == pytest.approx(bl.log_kernel_hessian_fd(b, z, [1.0]), rel=1e-5)


@settings(max_examples=20, deadline=None)
@given(st.floats(0.0, 0.85), st.floats(0.0, 4.0))
def test_truncated_kernel_increases_with_degree(r, a):
    z = np.array([r])
    w = RadialWeight.gaussian(a)
    k8 = bl.kernel_diag(bl.basis(DISK, w, 8), z)
    k16 = bl.kernel_diag(bl.basis(DISK, w, 16), z)
    assert k16 >= k8 * (1 - 1e-14)


def test_convergence_failure_is_reported():
    with pytest.raises(NonConvergent):
        bl.converged_basis(DISK, RadialWeight.zero(), np.array([0.99]), rtol=1e-12, max_degree=32)


def test_derivative_kernel_is_inverse_moment():
    g = bl.gram_matrix(DISK, RadialWeight.gaussian(2.0), 6)
    for m in range(4):
        assert bl.derivative_kernel(g, m) == pytest.approx(
            1.0 / oracles.radial_moment_polar(2.0, m), rel=1e-12)


def test_derivative_kernel_of_order_zero_is_the_kernel():
    g = bl.gram_matrix(DISK, PlanarWeight.real_part(1.0), 10)
    assert bl.derivative_kernel(g, 0) == pytest.approx(
        bl.kernel_diag(bl.orthonormalize(g), np.array([0.0])), rel=1e-12)


def test_ball_kernel_at_center():
    ball = ReinhardtDomain.ball(1.0, 2)
    b = bl.basis(ball, RadialWeight.on(ball, RadialWeight.zero().profiles[0]), 4)
    # volume of the unit ball in C^2 is pi^2 / 2
    assert bl.kernel_diag(b, np.zeros(2)) == pytest.approx(2.0 / math.pi ** 2, rel=1e-12)


def test_demailly_at_center_matches_oracle():
    # u_k(0) = (1/k) log(1 / int e^{-k|z|^2})
    for k in (8, 32):
        uk = bl.demailly_approx(DISK, RadialWeight.gaussian(1.0), k, np.array([0.0]))
        assert uk == pytest.approx(-math.log(oracles.radial_moment_polar(k, 0)) / k, rel=1e-10)


def test_demailly_report_small():
    rep = bl.demailly_convergence(DISK, RadialWeight.gaussian(1.0), [8, 16, 32], [0.0, 0.3, 0.6])
    assert rep.non_increasing
    assert rep.laplacian_bounded
    assert rep.fitted_constant == pytest.approx(rep.rows[0].rate_constant)
