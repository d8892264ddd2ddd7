"""Independent reference computations used by the tests."""

from __future__ import annotations

import math

import numpy as np
from scipy import integrate as si
from scipy.optimize import linprog
from scipy.special import betaln


def riemann_gram_disk(u, D: int, n_grid: int = 1601) -> np.ndarray:
    """``int_D z^a conj(z^b) e^{-u} dlambda`` by a midpoint Riemann sum on a square grid."""
    h = 2.0 / n_grid
    x = -1.0 + h * (np.arange(n_grid) + 0.5)
    X, Y = np.meshgrid(x, x)
    Z = X + 1j * Y
    inside = np.abs(Z) < 1.0
    Z = Z[inside]
    w = np.exp(-u(Z)) * h * h
    P = np.stack([Z ** a for a in range(D + 1)])
    return (P * w) @ P.conj().T


def disk_kernel(z: complex) -> float:
    """Unweighted Bergman kernel of the unit disk on the diagonal, summed as a series."""
    s = abs(z) ** 2
    m = np.arange(0, 4000)
    return float(np.sum((m + 1) * s ** m) / math.pi)


def radial_moment_polar(a: float, m: int, radius: float = 1.0) -> float:
    """``int_{|z|<R} |z|^{2m} e^{-a|z|^2} dlambda = 2 pi int_0^R r^{2m+1} e^{-a r^2} dr``."""
    val, _ = si.quad(lambda r: r ** (2 * m + 1) * math.exp(-a * r * r), 0.0, radius,
                     epsabs=0, epsrel=1e-13, limit=200)
    return 2.0 * math.pi * val


def fs_norms(k: int) -> np.ndarray:
    """``2 pi int e^{jt} (1+e^t)^{-k} phi_FS'' dt = 2 pi B(j+1, k-j+1)``."""
    j = np.arange(k + 1)
    return 2.0 * math.pi * np.exp(betaln(j + 1, k - j + 1))


def lp_envelope(t: np.ndarray, g: np.ndarray) -> np.ndarray:
    """Largest grid function below ``g`` with non-decreasing slopes in [0, 1], by linear programming.

    The sum of values is maximized; the pointwise-largest element of the
    constraint set is its unique maximizer.
    """
    n = t.size
    h = np.diff(t)
    rows, rhs = [], []
    # slopes s_i = (y_{i+1} - y_i)/h_i in [0, 1]
    for i in range(n - 1):
        r = np.zeros(n)
        r[i], r[i + 1] = 1.0 / h[i], -1.0 / h[i]
        rows.append(r)
        rhs.append(0.0)
        rows.append(-r)
        rhs.append(1.0)
    # s_i <= s_{i+1}
    for i in range(n - 2):
        r = np.zeros(n)
        r[i] += -1.0 / h[i]
        r[i + 1] += 1.0 / h[i] + 1.0 / h[i + 1]
        r[i + 2] += -1.0 / h[i + 1]
        rows.append(r)
        rhs.append(0.0)
    res = linprog(-np.ones(n), A_ub=np.array(rows), b_ub=np.array(rhs),
                  bounds=[(None, float(v)) for v in g], method="highs",
                  options={"primal_feasibility_tolerance": 1e-10, "dual_feasibility_tolerance": 1e-10})
    assert res.success, res.message
    return res.x


def sphere_log_mean_mc(n: int, samples: int, seed: int) -> float:
    """``exp(E log|v_1|^2)`` for ``v`` uniform on the unit sphere of ``C^n``."""
    rng = np.random.default_rng(seed)
    g = rng.standard_normal((samples, 2 * n))
    v1 = (g[:, 0] ** 2 + g[:, 1] ** 2) / np.sum(g * g, axis=1)
    return math.exp(float(np.mean(np.log(v1))))
