"""Explicit kernel bounds and constants, checked against computed kernels."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np
from scipy.special import gammainc, gammaln

from . import bergman_local as bl
from .errors import DegenerateGradient
from .quadrature import circle_mean, quad
from .weights import PlanarWeight, RadialWeight, ReinhardtDomain

SLACK_RTOL = 1e-9


@dataclass(frozen=True)
class BoundReport:
    """``value`` compared with ``bound``; ``direction`` is ``'upper'`` (value <= bound) or ``'lower'``."""

    name: str
    value: float
    bound: float
    direction: str = "upper"
    details: Mapping = field(default_factory=dict)
    tol: float = SLACK_RTOL

    @property
    def slack(self) -> float:
        if self.direction == "upper":
            return self.bound - self.value
        return self.value - self.bound

    @property
    def passed(self) -> bool:
        return bool(self.slack >= -self.tol * abs(self.bound))

    def row(self) -> dict:
        return {"name": self.name, "value": self.value, "bound": self.bound,
                "direction": self.direction, "slack": self.slack, "pass": self.passed}


# ---------------------------------------------------------------------------
# Extension constant
# ---------------------------------------------------------------------------

def ot_constant(a: float, m: int) -> float:
    """``int_D |zeta|^{2m} e^{-a|zeta|^2} dlambda = pi/a^{m+1} int_0^a rho^m e^{-rho} drho``.

    Uses the regularized lower incomplete gamma function, which stays
    accurate for small ``a`` where the finite-sum form cancels.
    """
    if a < 0 or m < 0:
        raise ValueError("need a >= 0 and m >= 0")
    if a == 0:
        return math.pi / (m + 1)
    log_val = math.log(math.pi) + gammaln(m + 1) + math.log(gammainc(m + 1, a)) - (m + 1) * math.log(a)
    return math.exp(log_val)


def ot_tightness(a: float, m: int) -> BoundReport:
    """The extremal ``m``-th Taylor-coefficient kernel at 0 times the extension constant.

    The extremal problem is solved on the Gram matrix without assuming
    diagonality; the product should be exactly one.
    """
    gram = bl.gram_matrix(ReinhardtDomain.unit_disk(), RadialWeight.gaussian(a), m + 4)
    kern = bl.derivative_kernel(gram, m)
    prod = kern * ot_constant(a, m)
    return BoundReport(f"ot_tightness(a={a:g},m={m})", prod, 1.0, "upper",
                       {"kernel": kern, "constant": ot_constant(a, m),
                        "raw_derivative_kernel": kern * math.factorial(m) ** 2,
                        "abs_error": abs(prod - 1.0)}, tol=1e-8)


def polydisk_lower_bounds(n: int, a: float, u0: float = 0.0, weakened: bool = False):
    """Lower bounds for ``K(0)`` and ``K~(0; e_1)`` on the unit polydisk when ``u - a|z|^2`` is psh."""
    if a <= 0:
        raise ValueError("need a > 0")
    den = math.pi ** n if weakened else (math.pi * -math.expm1(-a)) ** n
    return (a ** n * math.exp(u0) / den, a ** (n + 1) * math.exp(u0) / den)


def polydisk_gaussian_exact(n: int, a: float) -> tuple[float, float]:
    """Exact ``K(0)`` and ``K~(0; e_1)`` for ``u = a|z|^2`` on the unit polydisk."""
    k0 = 1.0 / ot_constant(a, 0)
    k1 = 1.0 / ot_constant(a, 1)
    return k0 ** n, k1 * k0 ** (n - 1)


# ---------------------------------------------------------------------------
# Upper bound through sphere means
# ---------------------------------------------------------------------------

def sphere_area(n: int, rho: float) -> float:
    """Area of the sphere of radius ``rho`` in ``C^n = R^{2n}``."""
    return 2.0 * math.pi ** n * rho ** (2 * n - 1) / math.factorial(n - 1)


def sphere_mean(weight, rho: float, z=None) -> float:
    """Mean of ``u`` over the sphere ``|w - z| = rho``.

    For radial weights centred at the origin the mean reduces to one
    dimension: ``|w_i|^2 / rho^2`` is Beta(1, n-1) distributed on the sphere.
    """
    if isinstance(weight, PlanarWeight):
        c = 0.0 if z is None else complex(np.atleast_1d(z)[0])
        return circle_mean(weight, c, rho, n_theta=512)
    n = weight.n
    if z is not None and np.any(np.atleast_1d(z) != 0):
        if n != 1:
            raise ValueError("off-centre sphere means are implemented for n = 1")
        c = complex(np.atleast_1d(z)[0])
        return circle_mean(lambda w: weight(w[:, None]), c, rho, n_theta=512)
    if weight.kind == "norm":
        return float(weight.profiles[0].g(rho * rho))
    if n == 1:
        return float(weight.profiles[0].g(rho * rho))
    out = 0.0
    for p in weight.profiles:
        out += quad(lambda x: p.g(rho * rho * x) * (n - 1) * (1 - x) ** (n - 2), 0.0, 1.0,
                    tol=1e-13)
    return out


def bb_upper_bound(weight, r: float, z=None, form: str = "jensen") -> float:
    """Upper bound for ``K(z)`` from sphere means of ``u`` over ``B(z, r)``.

    ``form='jensen'`` evaluates ``(int_0^r |dB_rho| exp(-mean u) drho)^{-1}``.
    ``form='laplacian'`` uses only ``Laplacian u <= 4nA`` (``A >= 1``):
    ``e^{u(z)} A^n (n omega_{2n} int_0^{Ar^2} s^{n-1} e^{-s} ds)^{-1}``.
    """
    n = weight.n
    if form == "jensen":
        val = quad(lambda rho: np.array([sphere_area(n, x) * math.exp(-sphere_mean(weight, x, z))
                                         for x in np.atleast_1d(rho)]), 0.0, r, tol=1e-12)
        return 1.0 / val
    if form == "laplacian":
        A = max(1.0, weight.declared_laplacian_sup / (4.0 * n))
        u_z = float(np.real(weight(np.zeros(n) if z is None else z)))
        omega = math.pi ** n / math.factorial(n)
        inc = math.gamma(n) * gammainc(n, A * r * r)
        return math.exp(u_z) * A ** n / (n * omega * inc)
    raise ValueError(f"unknown form {form!r}")


def bb_tilde_upper_bound(weight, r: float, z=None) -> float:
    """Upper bound for ``K~(z; v)``, ``|v| = 1``: ``(C_n int_0^r rho^2 |dB_rho| e^{-mean u} drho)^{-1}``."""
    n = weight.n
    val = quad(lambda rho: np.array([x * x * sphere_area(n, x) * math.exp(-sphere_mean(weight, x, z))
                                     for x in np.atleast_1d(rho)]), 0.0, r, tol=1e-12)
    return 1.0 / (sphere_log_constant(n) * val)


# ---------------------------------------------------------------------------
# Sphere-mean lemma
# ---------------------------------------------------------------------------

def sphere_log_constant(n: int) -> float:
    """``exp(2 E log|v_1|)`` over the unit sphere of ``C^n``: ``exp(-H_{n-1})``."""
    if n < 1:
        raise ValueError("n >= 1")
    return math.exp(-math.fsum(1.0 / j for j in range(1, n)))


def uniform_sphere(rng: np.random.Generator, n: int, size: int) -> np.ndarray:
    g = rng.standard_normal((size, n)) + 1j * rng.standard_normal((size, n))
    return g / np.linalg.norm(g, axis=1, keepdims=True)


def sphere_log_constant_mc(n: int, samples: int = 1_000_000, seed: int = 0) -> tuple[float, float]:
    """Monte Carlo estimate of the constant and the standard error of its logarithm."""
    v = uniform_sphere(np.random.default_rng(seed), n, samples)
    x = np.log(np.abs(v[:, 0]) ** 2)
    return math.exp(float(np.mean(x))), float(np.std(x) / math.sqrt(samples))


@dataclass(frozen=True)
class Polynomial:
    """``f(z) = sum_alpha c_alpha z^alpha`` in ``n`` variables."""

    coeffs: Mapping[tuple[int, ...], complex]

    @property
    def n(self) -> int:
        return len(next(iter(self.coeffs)))

    def __call__(self, z):
        z = np.asarray(z, dtype=complex)
        out = 0.0
        for a, c in self.coeffs.items():
            out = out + c * np.prod(z ** np.asarray(a), axis=-1)
        return out

    def gradient_at_zero(self) -> np.ndarray:
        g = np.zeros(self.n, dtype=complex)
        for a, c in self.coeffs.items():
            if sum(a) == 1:
                g[a.index(1)] += c
        return g

    def value_at_zero(self) -> complex:
        return complex(self.coeffs.get((0,) * self.n, 0.0))

    def degree(self) -> int:
        return max(sum(a) for a, c in self.coeffs.items() if c != 0)

    def restricted(self, v: np.ndarray) -> np.ndarray:
        """Coefficients (highest degree first) of ``xi -> f(xi v)`` for each row of ``v``."""
        v = np.atleast_2d(v)
        d = self.degree()
        out = np.zeros((v.shape[0], d + 1), dtype=complex)
        for a, c in self.coeffs.items():
            out[:, d - sum(a)] += c * np.prod(v ** np.asarray(a), axis=1)
        return out

    @classmethod
    def random(cls, rng: np.random.Generator, n: int = 2, degree: int = 3, scale: float = 1.0):
        """Random polynomial with ``f(0) = 0`` and a non-degenerate gradient."""
        coeffs = {}
        for a in bl.multi_indices(n, degree)[1:]:
            coeffs[a] = complex(rng.standard_normal(), rng.standard_normal()) * scale / (1 + sum(a))
        return cls(coeffs)


def _jensen_row(c: np.ndarray) -> float:
    nz = np.nonzero(c)[0]
    if nz.size == 0:
        return -math.inf
    c = c[nz[0]:]
    roots = np.roots(c) if c.size > 1 else np.empty(0)
    return 2.0 * (math.log(abs(c[0])) + float(np.sum(np.log(np.maximum(1.0, np.abs(roots))))))


def circle_log_mean(coeffs: np.ndarray) -> np.ndarray:
    """Mean of ``log|p|^2`` over the unit circle for each coefficient row (Jensen's formula).

    Rows with a non-zero leading coefficient are solved together as
    eigenvalues of stacked companion matrices.
    """
    coeffs = np.atleast_2d(np.asarray(coeffs, dtype=complex))
    m, d1 = coeffs.shape
    out = np.empty(m)
    lead = np.abs(coeffs[:, 0]) > 0
    if d1 > 1 and np.any(lead):
        c = coeffs[lead]
        comp = np.zeros((c.shape[0], d1 - 1, d1 - 1), dtype=complex)
        comp[:, 0, :] = -c[:, 1:] / c[:, :1]
        idx = np.arange(d1 - 2)
        comp[:, idx + 1, idx] = 1.0
        roots = np.linalg.eigvals(comp)
        out[lead] = 2.0 * (np.log(np.abs(c[:, 0]))
                           + np.sum(np.log(np.maximum(1.0, np.abs(roots))), axis=1))
    for i in np.nonzero(~lead if d1 > 1 else np.ones(m, bool))[0]:
        out[i] = _jensen_row(coeffs[i])
    return out


def check_lemma_sphere_mean(f: Polynomial, rho: float, samples: int = 20_000,
                            seed: int = 0, z_sigma: float = 4.0) -> BoundReport:
    """Compare the sphere mean of ``log|f|^2`` (minus ``log rho^2``) with ``log(C_n |df(0)|^2)``.

    Each complex line through the origin is integrated exactly by Jensen's
    formula; the remaining average over lines is Monte Carlo for ``n >= 2``.
    The check passes when the estimate is within ``z_sigma`` standard errors
    of the bound or above it.
    """
    if abs(f.value_at_zero()) > 0:
        raise ValueError("f must vanish at the origin")
    grad = f.gradient_at_zero()
    gnorm2 = float(np.sum(np.abs(grad) ** 2))
    if gnorm2 == 0:
        raise DegenerateGradient("df(0) = 0; the lemma needs a non-degenerate differential")
    n = f.n
    if n == 1:
        v = np.array([[rho]], dtype=complex)
        vals, se = circle_log_mean(f.restricted(v)), 0.0
    else:
        v = rho * uniform_sphere(np.random.default_rng(seed), n, samples)
        vals = circle_log_mean(f.restricted(v))
        se = float(np.std(vals) / math.sqrt(samples))
    left = float(np.mean(vals)) - math.log(rho * rho)
    right = math.log(sphere_log_constant(n) * gnorm2)
    tol = z_sigma * se / abs(right) if right else 0.0
    return BoundReport(f"sphere_mean(n={n},rho={rho:g})", left, right, "lower",
                       {"standard_error": se, "samples": 1 if n == 1 else samples},
                       tol=max(tol, SLACK_RTOL))


# ---------------------------------------------------------------------------
# Two-sided kernel and metric bounds with an extracted constant
# ---------------------------------------------------------------------------

MT_NAMES = ("K_upper", "K_lower", "Kt_upper", "Kt_lower", "B2_upper", "B2_lower")


@dataclass(frozen=True)
class MTCase:
    name: str
    K: float
    K_tilde: float
    B2: float
    a: float
    lap_sup: float
    u_z: float
    n: int

    def ratios(self) -> dict[str, float]:
        """Smallest ``C`` making each bound shape hold for this weight."""
        M = max(1.0, self.lap_sup)
        e, n, a = math.exp(self.u_z), self.n, self.a
        out = {"K_upper": self.K / (e * M ** n),
               "Kt_upper": self.K_tilde / (e * M ** (n + 1)),
               "B2_upper": self.B2 * (a ** n if a > 0 else math.nan) / M ** (n + 1)}
        if a > 0:
            out.update({"K_lower": e * a ** n / self.K,
                        "Kt_lower": e * a ** (n + 1) / self.K_tilde,
                        "B2_lower": a ** (n + 1) / (M ** n * self.B2)})
        return out


@dataclass(frozen=True)
class MTReport:
    cases: tuple[MTCase, ...]
    constants: Mapping[str, float]
    spread: Mapping[str, float]
    reports: tuple[BoundReport, ...]

    @property
    def stable(self) -> bool:
        return all(s <= 2.0 for s in self.spread.values())


def mt_case(domain: ReinhardtDomain, weight, z=None, v=None, name: str | None = None,
            curvature_lower: float | None = None) -> MTCase:
    n = domain.n
    z = np.zeros(n) if z is None else np.atleast_1d(z)
    v = np.eye(n)[0] if v is None else np.atleast_1d(v)
    b = bl.converged_basis(domain, weight, z, rtol=1e-10, v=v)
    K = bl.kernel_diag(b, z)
    Kt = bl.tilde_kernel(b, z, v)
    a = weight.declared_lower_bound if curvature_lower is None else curvature_lower
    u_z = float(np.real(weight(z if n > 1 else z[0])))
    return MTCase(name or getattr(weight, "name", "weight"), K, Kt, Kt / K, a,
                  weight.declared_laplacian_sup, u_z, n)


def check_theorem_mt(cases: Sequence[MTCase]) -> MTReport:
    """Extract one constant per bound shape as the worst ratio over the family.

    Lower-bound shapes are skipped for members without a positive curvature
    lower bound.  ``spread`` is max/min of the per-member ratios; the family
    is called stable when every spread is at most 2.
    """
    per = [c.ratios() for c in cases]
    constants, spread, reports = {}, {}, []
    for key in MT_NAMES:
        vals = [r[key] for r in per if key in r and math.isfinite(r[key])]
        if not vals:
            continue
        C = max(vals)
        constants[key] = C
        spread[key] = C / min(vals)
        # with the extracted C every member must satisfy the bound shape
        for c, r in zip(cases, per):
            if key not in r or not math.isfinite(r[key]):
                continue
            direction = "upper" if key.endswith("upper") else "lower"
            reports.append(BoundReport(f"{key}[{c.name}]", r[key], C, "upper",
                                       {"direction_of_shape": direction}))
    return MTReport(tuple(cases), constants, spread, tuple(reports))
