"""Weighted Bergman kernels on Reinhardt model domains via orthonormal polynomials.

For a weight ``u`` on a polydisk or ball, polynomials are dense in the
weighted Bergman space, so the kernel on the diagonal is the increasing limit
of the kernels of the spaces of polynomials of degree ``<= D``.  Those are
computed from the Gram matrix of monomials.

Coefficient conventions: a polynomial ``f = sum_b c_b z^b`` has squared norm
``c^H H c`` with ``H = conj(G)`` and ``G[a, b] = int z^a conj(z^b) e^{-u}``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property, lru_cache
from itertools import combinations_with_replacement

import numpy as np
from scipy.linalg import cholesky, null_space, solve_triangular
from scipy.special import logsumexp

from .errors import CrossCheckMismatch, IllConditioned, NonConvergent
from .quadrature import _radial_integral, polar_disk_rule
from .weights import PlanarWeight, Profile, RadialWeight, ReinhardtDomain

COND_LIMIT = 1e14
TILDE_RTOL = 1e-7
START_DEGREE = 8
MAX_DEGREE = 1024


@lru_cache(maxsize=64)
def multi_indices(n: int, D: int) -> tuple[tuple[int, ...], ...]:
    """All ``alpha`` in ``N^n`` with ``|alpha| <= D``, graded, lexicographic inside a degree."""
    out = []
    for d in range(D + 1):
        block = set()
        for combo in combinations_with_replacement(range(n), d):
            a = [0] * n
            for i in combo:
                a[i] += 1
            block.add(tuple(a))
        out.extend(sorted(block, reverse=True))
    return tuple(out)


@dataclass(frozen=True)
class GramMatrix:
    """Monomial Gram data of degree ``D``.

    Rotation-invariant weights give a diagonal matrix; only ``log_diag`` is
    stored then and ``entries`` is materialized on demand.
    """

    degree: int
    indices: tuple[tuple[int, ...], ...]
    log_diag: np.ndarray
    full: np.ndarray | None = None

    @property
    def diagonal(self) -> bool:
        return self.full is None

    @property
    def n(self) -> int:
        return len(self.indices[0])

    @property
    def entries(self) -> np.ndarray:
        if self.full is not None:
            return self.full
        return np.diag(np.exp(self.log_diag)).astype(complex)


@dataclass(frozen=True)
class OrthonormalBasis:
    """Orthonormal polynomials ``e_j = sum_b B[b, j] z^b`` for a Gram matrix.

    For diagonal Gram data ``B`` is diagonal with entries ``G_bb^{-1/2}`` and
    evaluations are carried out in log-magnitude form.
    """

    gram: GramMatrix
    coeffs: np.ndarray | None
    condition: float

    @property
    def degree(self) -> int:
        return self.gram.degree

    @cached_property
    def _alpha(self) -> np.ndarray:
        return np.array(self.gram.indices, dtype=float)

    def monomials(self, z) -> np.ndarray:
        z = np.atleast_1d(np.asarray(z, dtype=complex))
        a = self._alpha
        with np.errstate(divide="ignore", invalid="ignore"):
            logabs = np.where(a == 0, 0.0, a * np.log(np.abs(z)))
        mag = np.exp(logabs.sum(axis=1))
        phase = np.exp(1j * (a * np.angle(z)).sum(axis=1))
        return mag * phase

    def monomial_derivatives(self, z, v) -> np.ndarray:
        """``d/dzeta z^alpha`` along ``z + zeta v`` at ``zeta = 0``."""
        z = np.atleast_1d(np.asarray(z, dtype=complex))
        v = np.atleast_1d(np.asarray(v, dtype=complex))
        a = self._alpha
        out = np.zeros(a.shape[0], dtype=complex)
        for i in range(z.size):
            if v[i] == 0:
                continue
            lowered = a.copy()
            lowered[:, i] -= 1
            ok = a[:, i] > 0
            lowered[~ok, i] = 0
            term = np.ones(a.shape[0], dtype=complex)
            for j in range(z.size):
                term *= z[j] ** lowered[:, j]
            out += np.where(ok, a[:, i] * term * v[i], 0.0)
        return out

    def evaluate(self, z) -> np.ndarray:
        """Values ``e_j(z)``."""
        m = self.monomials(z)
        if self.coeffs is None:
            return m * np.exp(-0.5 * self.gram.log_diag)
        return self.coeffs.T @ m

    def evaluate_derivative(self, z, v) -> np.ndarray:
        w = self.monomial_derivatives(z, v)
        if self.coeffs is None:
            return w * np.exp(-0.5 * self.gram.log_diag)
        return self.coeffs.T @ w

    def log_kernel(self, z) -> float:
        """``log sum_j |e_j(z)|^2`` accumulated in log-magnitude form."""
        if self.coeffs is not None:
            return float(np.log(np.sum(np.abs(self.evaluate(z)) ** 2)))
        z = np.atleast_1d(np.asarray(z, dtype=complex))
        a = self._alpha
        with np.errstate(divide="ignore", invalid="ignore"):
            logabs = np.where(a == 0, 0.0, 2.0 * a * np.log(np.abs(z))).sum(axis=1)
        return float(logsumexp(logabs - self.gram.log_diag))

    def orthonormality_error(self) -> float:
        if self.coeffs is None:
            return 0.0
        H = np.conj(self.gram.full)
        B = self.coeffs
        return float(np.max(np.abs(B.conj().T @ H @ B - np.eye(B.shape[1]))))


@dataclass(frozen=True)
class KernelValue:
    K: float
    K_tilde: float
    B2: float
    degree: int


# ---------------------------------------------------------------------------
# Gram matrices
# ---------------------------------------------------------------------------

def _radial_log_moments(domain: ReinhardtDomain, weight: RadialWeight, idx) -> np.ndarray:
    """Log-moments reusing one-dimensional radial integrals across indices."""
    if domain.kind == "polydisk":
        if weight.kind != "product":
            raise ValueError("polydisk Gram matrices need a product-radial weight")
        cache = [{} for _ in range(domain.n)]

        def one(i, m):
            if m not in cache[i]:
                R = domain.radii[i]
                cache[i][m] = math.log(math.pi) + _log_radial(weight.profiles[i], m, R * R)
            return cache[i][m]
        return np.array([sum(one(i, a_i) for i, a_i in enumerate(a)) for a in idx])
    n, R = domain.n, domain.radii[0]
    if weight.kind == "norm":
        prof = weight.profiles[0]
    else:
        probe = np.linspace(0.0, R * R, 9)
        if not all(np.all(p.g(probe) == 0) for p in weight.profiles):
            raise ValueError("ball Gram matrices need a weight of the form g(|z|^2)")
        prof = Profile.zero()
    cache = {}
    out = []
    for a in idx:
        m = sum(a)
        if m not in cache:
            cache[m] = (n * math.log(math.pi) - math.lgamma(m + n)
                        + _log_radial(prof, m + n - 1, R * R))
        out.append(cache[m] + sum(math.lgamma(x + 1) for x in a))
    return np.array(out)


def _log_radial(prof, m: int, S: float) -> float:
    val = _radial_integral(prof, m, S, 1e-13)
    if not val > 0:
        raise IllConditioned(f"radial moment of order {m} underflowed")
    return math.log(val)


def _planar_gram(weight: PlanarWeight, idx, D: int) -> np.ndarray:
    nodes, wts = polar_disk_rule(weight.radius, n_r=D + 40, n_theta=2 * D + 96)
    w = wts * np.exp(-np.real(weight(nodes)))
    powers = np.array([a[0] for a in idx])
    V = nodes[None, :] ** powers[:, None]
    G = (V * w) @ V.conj().T
    return 0.5 * (G + G.conj().T)


def gram_matrix(domain: ReinhardtDomain, weight, D: int) -> GramMatrix:
    """Gram matrix of all monomials of degree ``<= D`` under ``e^{-u} dlambda``."""
    if D < 0:
        raise ValueError("degree must be non-negative")
    idx = multi_indices(domain.n, D)
    if isinstance(weight, PlanarWeight):
        if domain.n != 1 or domain.radii[0] != weight.radius:
            raise ValueError("planar weights live on a disk of matching radius")
        G = _planar_gram(weight, idx, D)
        return GramMatrix(D, idx, np.log(np.real(np.diag(G))), G)
    return GramMatrix(D, idx, _radial_log_moments(domain, weight, idx))


def orthonormalize(gram: GramMatrix) -> OrthonormalBasis:
    """Diagonally scaled Cholesky factorization of ``conj(G)``.

    Raises ``IllConditioned`` when the condition estimate of the scaled
    matrix exceeds ``1e14``.
    """
    if gram.diagonal:
        return OrthonormalBasis(gram, None, 1.0)
    H = np.conj(gram.full)
    s = np.exp(-0.5 * gram.log_diag)
    Hs = s[:, None] * H * s[None, :]
    ev = np.linalg.eigvalsh(Hs)
    cond = float(ev[-1] / ev[0]) if ev[0] > 0 else math.inf
    if not cond <= COND_LIMIT:
        raise IllConditioned(f"Gram condition estimate {cond:.3g} exceeds {COND_LIMIT:g} "
                             f"at degree {gram.degree}; lower the degree")
    L = cholesky(Hs, lower=True)
    # B = S L^{-H} so that B^H H B = I
    B = s[:, None] * solve_triangular(L.conj().T, np.eye(L.shape[0]), lower=False)
    return OrthonormalBasis(gram, B, cond)


def basis(domain: ReinhardtDomain, weight, D: int) -> OrthonormalBasis:
    return orthonormalize(gram_matrix(domain, weight, D))


# ---------------------------------------------------------------------------
# Kernels
# ---------------------------------------------------------------------------

def kernel_diag(basis: OrthonormalBasis, z) -> float:
    """Truncated kernel ``sum_j |e_j(z)|^2``."""
    return math.exp(basis.log_kernel(z))


def _unit(v) -> np.ndarray:
    v = np.atleast_1d(np.asarray(v, dtype=complex))
    nv = np.linalg.norm(v)
    if nv == 0:
        raise ValueError("direction must be non-zero")
    return v / nv


def tilde_kernel_rank_one(basis: OrthonormalBasis, z, v) -> float:
    e = basis.evaluate(z)
    d = basis.evaluate_derivative(z, _unit(v))
    K = float(np.sum(np.abs(e) ** 2))
    return float(np.sum(np.abs(d) ** 2) - abs(np.vdot(e, d)) ** 2 / K)


def tilde_kernel_nullspace(basis: OrthonormalBasis, z, v) -> float:
    """Maximize ``|f'(z) v|^2`` over ``f(z) = 0``, ``||f|| <= 1`` in coefficient space."""
    gram = basis.gram
    s = np.exp(-0.5 * gram.log_diag)
    m = basis.monomials(z) * s
    w = basis.monomial_derivatives(z, _unit(v)) * s
    if gram.diagonal:
        Hs = np.eye(len(s))
    else:
        Hs = s[:, None] * np.conj(gram.full) * s[None, :]
    N = null_space(m[None, :])
    a = np.conj(N.T @ w)
    M = N.conj().T @ Hs @ N
    L = cholesky(0.5 * (M + M.conj().T), lower=True)
    y = solve_triangular(L, a, lower=True)
    return float(np.real(np.vdot(y, y)))


def tilde_kernel(basis: OrthonormalBasis, z, v, rtol: float = TILDE_RTOL) -> float:
    """Constrained extremal ``K~(z; v)``; two independent routes must agree."""
    a = tilde_kernel_rank_one(basis, z, v)
    b = tilde_kernel_nullspace(basis, z, v)
    scale = max(abs(a), abs(b), 1e-300)
    if abs(a - b) > rtol * scale:
        raise CrossCheckMismatch(f"K~ routes disagree: rank-one {a:.17g} vs null-space {b:.17g}")
    return a


def log_kernel_hessian_fd(basis: OrthonormalBasis, z, v, h: float = 1e-3) -> float:
    """``d^2/dzeta dzetabar log K(z + zeta v)`` by the five-point Laplacian / 4."""
    z = np.atleast_1d(np.asarray(z, dtype=complex))
    v = _unit(v)
    f = lambda dz: basis.log_kernel(z + dz * v)
    lap = f(h) + f(-h) + f(1j * h) + f(-1j * h) - 4.0 * f(0.0)
    return lap / (4.0 * h * h)


def bergman_metric(basis: OrthonormalBasis, z, v, fd_rtol: float | None = 1e-3) -> float:
    """``B^2 = K~ / K``, optionally cross-checked against the complex Hessian of ``log K``."""
    b2 = tilde_kernel(basis, z, v) / kernel_diag(basis, z)
    if fd_rtol is not None:
        fd = log_kernel_hessian_fd(basis, z, v)
        if abs(fd - b2) > fd_rtol * abs(b2):
            raise CrossCheckMismatch(f"B^2 {b2:.12g} vs finite-difference Hessian {fd:.12g}")
    return b2


def kernel_value(basis: OrthonormalBasis, z, v) -> KernelValue:
    K = kernel_diag(basis, z)
    Kt = tilde_kernel(basis, z, v)
    return KernelValue(K, Kt, Kt / K, basis.degree)


def converged_basis(domain: ReinhardtDomain, weight, z, rtol: float = 1e-8,
                    start: int = START_DEGREE, max_degree: int | None = None,
                    v=None) -> OrthonormalBasis:
    """Double ``D`` from ``start`` until ``K_D(z)`` (and ``K~_D`` if ``v``) stabilize.

    Monotonicity in ``D`` makes every accepted value a lower approximation.
    """
    if max_degree is None:
        max_degree = MAX_DEGREE if domain.n == 1 else (64 if domain.n == 2 else 24)
    D = start
    prev = basis(domain, weight, D)
    while True:
        if 2 * D > max_degree:
            raise NonConvergent(f"kernel at {z} not stable by degree {D}")
        cur = basis(domain, weight, 2 * D)
        ok = abs(kernel_diag(cur, z) - kernel_diag(prev, z)) <= rtol * kernel_diag(cur, z)
        if ok and v is not None:
            t1, t0 = tilde_kernel(cur, z, v), tilde_kernel(prev, z, v)
            ok = abs(t1 - t0) <= rtol * t1
        if ok:
            return cur
        D, prev = 2 * D, cur


def demailly_approx(domain: ReinhardtDomain, weight, k: int, z, rtol: float = 1e-10) -> float:
    """``u_k(z) = (1/k) log K_{Omega, k u}(z)`` with the truncation grown until stable."""
    if k < 1:
        raise ValueError("k must be a positive integer")
    b = converged_basis(domain, weight.scaled(k), z, rtol=rtol)
    return b.log_kernel(z) / k


def derivative_kernel(gram: GramMatrix, m: int) -> float:
    """``sup |f^(m)(0)/m!|^2 / ||f||^2`` over ``f`` vanishing to order ``m`` at 0 (n = 1).

    Equals the ``(m, m)`` entry of the inverse of the Gram block on indices
    ``>= m``; computed by Cholesky so it does not rely on diagonality.
    """
    if gram.n != 1:
        raise ValueError("derivative kernels are implemented in one variable")
    if m > gram.degree:
        raise ValueError("degree must be at least m")
    H = np.conj(gram.entries)[m:, m:]
    s = np.exp(-0.5 * gram.log_diag[m:])
    Hs = s[:, None] * H * s[None, :]
    L = cholesky(0.5 * (Hs + Hs.conj().T), lower=True)
    e0 = np.zeros(L.shape[0], dtype=complex)
    e0[0] = s[0]
    y = solve_triangular(L, e0, lower=True)
    return float(np.real(np.vdot(y, y)))


@dataclass(frozen=True)
class DemaillyRow:
    k: int
    sup_error: float
    rate_constant: float      # sup_error * k / log k
    laplacian_sup: float      # sup of the five-point (Laplacian / 4) of u_k over the grid
    degree: int


@dataclass(frozen=True)
class DemaillyReport:
    rows: tuple[DemaillyRow, ...]
    fitted_constant: float

    @property
    def non_increasing(self) -> bool:
        e = [r.sup_error for r in self.rows]
        return all(b <= a for a, b in zip(e, e[1:]))

    @property
    def rate_bound_holds(self) -> bool:
        return all(r.sup_error <= self.fitted_constant * math.log(r.k) / r.k * (1 + 1e-12)
                   for r in self.rows)

    @property
    def laplacian_bounded(self) -> bool:
        """Every second-difference sup is within the one extracted at the smallest ``k``."""
        c = self.rows[0].laplacian_sup
        return all(r.laplacian_sup <= c * (1 + 1e-9) for r in self.rows)

    @property
    def passed(self) -> bool:
        return self.non_increasing and self.rate_bound_holds and self.laplacian_bounded


def demailly_convergence(domain: ReinhardtDomain, weight, k_list, points,
                         h: float = 1e-2, rtol: float = 1e-10) -> DemaillyReport:
    """``sup |u_k - u|`` and second differences of ``u_k`` on a grid of points (n = 1).

    One basis per ``k`` is grown until stable at the grid point farthest from
    the origin; for complete Reinhardt domains the tail is largest there.
    The rate constant is fitted at the smallest ``k``.
    """
    if domain.n != 1:
        raise ValueError("demailly_convergence is implemented in one variable")
    pts = np.asarray(points, dtype=complex)
    far = pts[np.argmax(np.abs(pts) + h)]
    far = far + h * (far / abs(far) if far != 0 else 1.0)
    rows = []
    for k in sorted(k_list):
        b = converged_basis(domain, weight.scaled(k), np.atleast_1d(far), rtol=rtol)
        uk = lambda z: b.log_kernel(np.atleast_1d(z)) / k
        err = max(abs(uk(z) - float(np.real(weight(z)))) for z in pts)
        lap = max((uk(z + h) + uk(z - h) + uk(z + 1j * h) + uk(z - 1j * h) - 4 * uk(z))
                  / (4 * h * h) for z in pts)
        rows.append(DemaillyRow(k, err, err * k / math.log(k), lap, b.degree))
    return DemaillyReport(tuple(rows), rows[0].rate_constant)
