"""Weights on Reinhardt model domains and S^1-invariant potentials on CP^1.

Conventions used throughout the package:

* Lebesgue measure on C^n; the real Laplacian satisfies ``Laplacian |z|^2 = 4n``.
* On CP^1 the affine coordinate ``z`` is traded for ``t = log |z|^2``.  The
  Fubini-Study potential is ``log(1 + e^t)`` and ``omega_FS`` pushed to the
  t-line is ``2*pi * e^t / (1 + e^t)^2 dt`` (total mass ``2*pi``).
* A toric potential is stored as the *total* convex function ``phi(t)``; the
  relative potential is ``phi(t) - log(1 + e^t)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path
from typing import Callable, Sequence

import numpy as np
from scipy.optimize import brentq
from scipy.special import expit, log1p

from .errors import SlopeViolation, WindowTooSmall

TWO_PI = 2.0 * math.pi

# default t-grid for splines, envelopes and grid sweeps
T_MIN, T_MAX, T_KNOTS = -40.0, 40.0, 4001


def default_grid(lo: float = T_MIN, hi: float = T_MAX, n: int = T_KNOTS) -> np.ndarray:
    return np.linspace(lo, hi, n)


# ---------------------------------------------------------------------------
# Fubini-Study background
# ---------------------------------------------------------------------------

def fs_potential(t):
    """Stable ``log(1 + e^t)``."""
    t = np.asarray(t, dtype=float)
    out = np.maximum(t, 0.0) + log1p(np.exp(-np.abs(t)))
    return out if out.ndim else float(out)


def fs_slope(t):
    """First derivative of the Fubini-Study potential (the logistic function)."""
    out = expit(np.asarray(t, dtype=float))
    return out if np.ndim(out) else float(out)


def fs_curvature(t):
    """Second derivative ``e^t / (1 + e^t)^2`` of the Fubini-Study potential."""
    t = np.asarray(t, dtype=float)
    e = np.exp(-np.abs(t))
    out = e / (1.0 + e) ** 2
    return out if out.ndim else float(out)


def log_fs_curvature(t):
    """``log(e^t / (1 + e^t)^2)`` without underflow for large ``|t|``."""
    t = np.asarray(t, dtype=float)
    return -np.abs(t) - 2.0 * log1p(np.exp(-np.abs(t)))


# ---------------------------------------------------------------------------
# Model domains and local weights
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ReinhardtDomain:
    """A polydisk with multiradius ``radii`` or a ball of radius ``radii[0]``."""

    kind: str
    radii: tuple[float, ...]
    n: int

    def __post_init__(self):
        if self.kind not in ("polydisk", "ball"):
            raise ValueError(f"unsupported domain kind {self.kind!r}; only polydisk/ball")
        if self.n < 1 or any(r <= 0 for r in self.radii):
            raise ValueError("domain must have positive radii and dimension >= 1")
        if self.kind == "polydisk" and len(self.radii) != self.n:
            raise ValueError("polydisk needs one radius per coordinate")

    @classmethod
    def polydisk(cls, radii: float | Sequence[float] = 1.0, n: int | None = None):
        if np.isscalar(radii):
            n = 1 if n is None else n
            radii = (float(radii),) * n
        radii = tuple(float(r) for r in radii)
        return cls("polydisk", radii, len(radii))

    @classmethod
    def ball(cls, radius: float = 1.0, n: int = 1):
        return cls("ball", (float(radius),), n)

    @classmethod
    def unit_disk(cls):
        return cls.polydisk(1.0, 1)

    def contains(self, z, strict: bool = True) -> bool:
        z = np.atleast_1d(np.asarray(z, dtype=complex))
        if self.kind == "polydisk":
            r = np.abs(z)
            rad = np.asarray(self.radii)
            return bool(np.all(r < rad) if strict else np.all(r <= rad))
        nz = np.linalg.norm(z)
        return bool(nz < self.radii[0] if strict else nz <= self.radii[0])


@dataclass(frozen=True)
class Profile:
    """A radial profile ``g(s)`` with ``s = |z|^2`` and two derivatives."""

    g: Callable
    dg: Callable
    d2g: Callable
    name: str = "profile"

    def __call__(self, s):
        return self.g(s)

    def levi(self, s):
        """``d/ds (s g'(s))``: the complex Hessian of ``g(|z|^2)`` in one variable."""
        s = np.asarray(s, dtype=float)
        return self.dg(s) + s * self.d2g(s)

    def scaled(self, k: float) -> "Profile":
        return Profile(lambda s: k * self.g(s), lambda s: k * self.dg(s),
                       lambda s: k * self.d2g(s), f"{k:g}*{self.name}")

    def __add__(self, other: "Profile") -> "Profile":
        return Profile(lambda s: self.g(s) + other.g(s),
                       lambda s: self.dg(s) + other.dg(s),
                       lambda s: self.d2g(s) + other.d2g(s),
                       f"{self.name}+{other.name}")

    @classmethod
    def zero(cls):
        z = lambda s: np.zeros_like(np.asarray(s, dtype=float))
        return cls(z, z, z, "0")

    @classmethod
    def gaussian(cls, a: float):
        return cls(lambda s: a * np.asarray(s, dtype=float),
                   lambda s: np.full_like(np.asarray(s, dtype=float), a),
                   lambda s: np.zeros_like(np.asarray(s, dtype=float)),
                   f"{a:g}s")

    @classmethod
    def polynomial(cls, coeffs: Sequence[float]):
        c = np.asarray(coeffs, dtype=float)
        p = np.polynomial.Polynomial(c)
        dp, d2p = p.deriv(1), p.deriv(2)
        return cls(p, dp, d2p, "poly(" + ",".join(f"{x:g}" for x in c) + ")")

    @classmethod
    def log1p(cls, b: float, scale: float = 1.0):
        return cls(lambda s: scale * np.log1p(b * np.asarray(s, dtype=float)),
                   lambda s: scale * b / (1.0 + b * np.asarray(s, dtype=float)),
                   lambda s: -scale * b * b / (1.0 + b * np.asarray(s, dtype=float)) ** 2,
                   f"{scale:g}log(1+{b:g}s)")

    @classmethod
    def expm1(cls, b: float, scale: float = 1.0):
        return cls(lambda s: scale * np.expm1(b * np.asarray(s, dtype=float)),
                   lambda s: scale * b * np.exp(b * np.asarray(s, dtype=float)),
                   lambda s: scale * b * b * np.exp(b * np.asarray(s, dtype=float)),
                   f"{scale:g}(exp({b:g}s)-1)")


@dataclass(frozen=True)
class RadialWeight:
    """``u(z) = sum_i g_i(|z_i|^2)`` (``kind='product'``) or ``g(|z|^2)`` (``kind='norm'``).

    ``radii`` are the radii over which the profiles are sampled to certify the
    declared curvature data.
    """

    profiles: tuple[Profile, ...]
    radii: tuple[float, ...]
    kind: str = "product"
    n_samples: int = 2001

    def __post_init__(self):
        if self.kind not in ("product", "norm"):
            raise ValueError("kind must be 'product' or 'norm'")
        if self.kind == "product" and len(self.profiles) != len(self.radii):
            raise ValueError("one radius per profile")
        if self.kind == "norm" and len(self.profiles) != 1:
            raise ValueError("a norm-radial weight has exactly one profile")

    @classmethod
    def gaussian(cls, a: float, n: int = 1, radius: float = 1.0):
        return cls(tuple(Profile.gaussian(a) for _ in range(n)), (radius,) * n)

    @classmethod
    def zero(cls, n: int = 1, radius: float = 1.0):
        return cls(tuple(Profile.zero() for _ in range(n)), (radius,) * n)

    @classmethod
    def on(cls, domain: ReinhardtDomain, *profiles: Profile):
        if domain.kind == "ball":
            if len(profiles) != 1:
                raise ValueError("ball weights take one profile of |z|^2")
            return cls(tuple(profiles), (domain.radii[0],) * domain.n, kind="norm")
        if len(profiles) == 1 and domain.n > 1:
            profiles = profiles * domain.n
        return cls(tuple(profiles), domain.radii)

    @property
    def n(self) -> int:
        return len(self.radii)

    def __call__(self, z):
        z = np.asarray(z, dtype=complex)
        if z.ndim == 0:
            z = z[None]
        s = np.abs(z) ** 2
        if self.kind == "norm":
            return self.profiles[0].g(s.sum(axis=-1))
        return sum(p.g(s[..., i]) for i, p in enumerate(self.profiles))

    def scaled(self, k: float) -> "RadialWeight":
        return RadialWeight(tuple(p.scaled(k) for p in self.profiles), self.radii,
                            self.kind, self.n_samples)

    def _samples(self, i: int) -> np.ndarray:
        r = self.radii[i] if self.kind == "product" else self.radii[0]
        return np.linspace(0.0, r * r, self.n_samples)

    @cached_property
    def declared_lower_bound(self) -> float:
        """Largest sampled ``a`` with complex Hessian ``>= a Id``."""
        if self.kind == "norm":
            p, s = self.profiles[0], self._samples(0)
            vals = [p.levi(s)] + ([p.dg(s)] if self.n > 1 else [])
            return float(min(np.min(v) for v in vals))
        return float(min(np.min(p.levi(self._samples(i))) for i, p in enumerate(self.profiles)))

    @cached_property
    def declared_laplacian_sup(self) -> float:
        """Sampled ``sup Laplacian u`` with ``Laplacian |z|^2 = 4n``."""
        if self.kind == "norm":
            p, s = self.profiles[0], self._samples(0)
            return float(np.max(4.0 * (self.n * p.dg(s) + s * p.d2g(s))))
        return float(sum(4.0 * np.max(p.levi(self._samples(i)))
                         for i, p in enumerate(self.profiles)))

    def is_psh(self) -> bool:
        return self.declared_lower_bound >= -1e-12

    def laplacian(self, z):
        z = np.atleast_1d(np.asarray(z, dtype=complex))
        s = np.abs(z) ** 2
        if self.kind == "norm":
            p, S = self.profiles[0], s.sum(axis=-1)
            return 4.0 * (self.n * p.dg(S) + S * p.d2g(S))
        return sum(4.0 * p.levi(s[..., i]) for i, p in enumerate(self.profiles))


@dataclass(frozen=True)
class PlanarWeight:
    """A possibly non-radial weight on the disk of radius ``radius`` (n = 1)."""

    u: Callable
    radius: float = 1.0
    smooth: bool = True
    name: str = "planar"
    fd_step: float = 1e-4

    n = 1

    def __call__(self, z):
        return self.u(np.asarray(z, dtype=complex))

    def scaled(self, k: float) -> "PlanarWeight":
        return PlanarWeight(lambda z: k * self.u(z), self.radius, self.smooth,
                            f"{k:g}*{self.name}", self.fd_step)

    def laplacian(self, z):
        z = np.asarray(z, dtype=complex)
        h = self.fd_step
        return (self.u(z + h) + self.u(z - h) + self.u(z + 1j * h) + self.u(z - 1j * h)
                - 4.0 * self.u(z)) / (h * h)

    def _grid(self, n: int = 81) -> np.ndarray:
        x = np.linspace(-self.radius, self.radius, n) * (1 - 2 * self.fd_step)
        X, Y = np.meshgrid(x, x)
        Z = (X + 1j * Y).ravel()
        return Z[np.abs(Z) < self.radius - 2 * self.fd_step]

    @cached_property
    def declared_lower_bound(self) -> float:
        # n = 1: the complex Hessian is Laplacian / 4
        return float(np.min(self.laplacian(self._grid())) / 4.0)

    @cached_property
    def declared_laplacian_sup(self) -> float:
        return float(np.max(self.laplacian(self._grid())))

    def is_subharmonic(self, tol: float = 1e-6) -> bool:
        return bool(np.min(self.laplacian(self._grid())) >= -tol)

    @classmethod
    def gaussian_plus_harmonic(cls, a: float, eps: float = 0.0, power: int = 2,
                               radius: float = 1.0):
        """``a|z|^2 + eps Re(z^power)``; the harmonic term leaves the Levi form at ``a``."""
        return cls(lambda z: a * np.abs(z) ** 2 + eps * np.real(np.asarray(z) ** power),
                   radius, True, f"{a:g}|z|^2+{eps:g}Re(z^{power})")

    @classmethod
    def real_part(cls, c: float = 1.0, radius: float = 1.0):
        return cls(lambda z: c * np.real(z), radius, True, f"{c:g}Re z")

    @classmethod
    def exp_real(cls, c: float = 1.0, radius: float = 1.0):
        return cls(lambda z: np.exp(c * np.real(z)), radius, True, f"exp({c:g}Re z)")


# ---------------------------------------------------------------------------
# Toric potentials on CP^1
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class CurvatureBounds:
    """``a * omega <= omega_phi <= A * omega``."""

    a: float
    A: float

    def __post_init__(self):
        if not (self.a > 0 and self.A >= self.a):
            raise ValueError(f"need 0 < a <= A, got a={self.a}, A={self.A}")

    def holds_for(self, potential: "ToricPotential", grid=None, rtol: float = 1e-9) -> bool:
        t = default_grid() if grid is None else np.asarray(grid)
        r = potential.curvature_ratio(t)
        return bool(np.all(r >= self.a * (1 - rtol)) and np.all(r <= self.A * (1 + rtol)))


@dataclass(frozen=True)
class SmoothFunction:
    """A bounded function of ``t`` with its first derivative (and optionally second)."""

    f: Callable
    df: Callable
    d2f: Callable | None = None
    name: str = "f"

    def __call__(self, t):
        return self.f(np.asarray(t, dtype=float))

    def __mul__(self, c: float) -> "SmoothFunction":
        d2 = None if self.d2f is None else (lambda t: c * self.d2f(t))
        return SmoothFunction(lambda t: c * self.f(t), lambda t: c * self.df(t), d2,
                              f"{c:g}*{self.name}")

    __rmul__ = __mul__

    def __add__(self, other: "SmoothFunction") -> "SmoothFunction":
        d2 = None
        if self.d2f is not None and other.d2f is not None:
            d2 = lambda t: self.d2f(t) + other.d2f(t)
        return SmoothFunction(lambda t: self.f(t) + other.f(t),
                              lambda t: self.df(t) + other.df(t), d2,
                              f"{self.name}+{other.name}")

    @classmethod
    def constant(cls, c: float):
        z = lambda t: np.zeros_like(np.asarray(t, dtype=float))
        return cls(lambda t: np.full_like(np.asarray(t, dtype=float), c), z, z, f"{c:g}")

    @classmethod
    def tanh(cls, shift: float = 0.0, scale: float = 1.0):
        def d2(t):
            th = np.tanh(scale * (t - shift))
            return -2.0 * scale * scale * th * (1 - th * th)
        return cls(lambda t: np.tanh(scale * (t - shift)),
                   lambda t: scale * (1.0 - np.tanh(scale * (t - shift)) ** 2), d2,
                   f"tanh({scale:g}(t-{shift:g}))")

    @classmethod
    def sigmoid(cls, scale: float = 1.0, shift: float = 0.0):
        def d1(t):
            e = expit(scale * (t - shift))
            return scale * e * (1 - e)
        def d2(t):
            e = expit(scale * (t - shift))
            return scale * scale * e * (1 - e) * (1 - 2 * e)
        return cls(lambda t: expit(scale * (t - shift)), d1, d2,
                   f"sigmoid({scale:g}(t-{shift:g}))")

    @classmethod
    def lorentzian(cls, shift: float = 0.0):
        return cls(lambda t: 1.0 / (1.0 + (t - shift) ** 2),
                   lambda t: -2.0 * (t - shift) / (1.0 + (t - shift) ** 2) ** 2,
                   lambda t: (6.0 * (t - shift) ** 2 - 2.0) / (1.0 + (t - shift) ** 2) ** 3,
                   "1/(1+t^2)")

    @classmethod
    def bump(cls, height: float, center: float = 0.0, width: float = 1.0):
        def f(t):
            x = (t - center) / width
            return height * np.exp(-x * x)
        def d1(t):
            x = (t - center) / width
            return -2.0 * x / width * height * np.exp(-x * x)
        def d2(t):
            x = (t - center) / width
            return (4.0 * x * x - 2.0) / width ** 2 * height * np.exp(-x * x)
        return cls(f, d1, d2, f"{height:g}exp(-((t-{center:g})/{width:g})^2)")


class ToricPotential:
    """An S^1-invariant potential on CP^1 as a convex function of ``t = log|z|^2``.

    Subclasses implement ``phi`` (the total potential), ``dphi`` (right
    derivative) and ``d2phi`` (absolutely continuous part of the second
    derivative).  ``atoms`` lists jumps of ``dphi`` and ``breakpoints`` lists
    points where ``phi`` is not smooth, which quadrature uses as panel edges.
    """

    window: tuple[float, float] | None = None
    name: str = "potential"

    def phi(self, t):
        raise NotImplementedError

    def dphi(self, t):
        raise NotImplementedError

    def d2phi(self, t):
        raise NotImplementedError

    @property
    def breakpoints(self) -> np.ndarray:
        return np.empty(0)

    def atoms(self) -> list[tuple[float, float]]:
        return []

    def rel(self, t):
        """The relative potential ``phi - log(1 + e^t)``."""
        t = np.asarray(t, dtype=float)
        return self.phi(t) - fs_potential(t)

    def drel(self, t):
        t = np.asarray(t, dtype=float)
        return self.dphi(t) - fs_slope(t)

    def curvature_ratio(self, t):
        t = np.asarray(t, dtype=float)
        return self.d2phi(t) / fs_curvature(t)

    def shifted(self, c: float) -> "ToricPotential":
        return CombinationPotential(((1.0, self),), shift=c)

    def halved(self) -> "ToricPotential":
        """The potential whose relative part is half of this one's."""
        return CombinationPotential(((0.5, self), (0.5, FS)))

    def check_admissible(self, grid=None, tol: float = 1e-9) -> None:
        """Raise ``SlopeViolation`` unless slopes are non-decreasing and in [0, 1]."""
        t = default_grid() if grid is None else np.asarray(grid)
        s = self.dphi(t)
        if np.any(s < -tol) or np.any(s > 1 + tol):
            raise SlopeViolation(f"{self.name}: slopes leave [0, 1] "
                                 f"(min {s.min():.3g}, max {s.max():.3g})")
        if np.any(np.diff(s) < -tol):
            raise SlopeViolation(f"{self.name}: slope decreases, potential not convex")

    def is_full_mass(self, grid=None, tol: float = 1e-6) -> bool:
        t = default_grid() if grid is None else np.asarray(grid)
        s = self.dphi(np.array([t[0], t[-1]]))
        return bool(abs(s[0]) <= tol and abs(s[1] - 1.0) <= tol)

    def curvature_bounds(self, grid=None) -> CurvatureBounds:
        """Sampled ``(min, max)`` of ``phi'' / phi_FS''`` over the grid."""
        t = default_grid() if grid is None else np.asarray(grid)
        r = self.curvature_ratio(t)
        return CurvatureBounds(float(np.min(r)), float(np.max(r)))

    def __repr__(self) -> str:
        return f"<{type(self).__name__} {self.name}>"


class SoftplusMixture(ToricPotential):
    """``phi(t) = sum_i w_i * log(1 + e^{b_i (t - c_i)}) / b_i + shift`` with ``sum w_i = 1``.

    Every member is convex with slopes in [0, 1] and a bounded relative
    potential.  ``b_i = 1`` gives translates of the Fubini-Study potential.
    """

    def __init__(self, weights, centers, widths=None, shift: float = 0.0, name: str | None = None):
        w = np.atleast_1d(np.asarray(weights, dtype=float))
        c = np.atleast_1d(np.asarray(centers, dtype=float))
        b = np.ones_like(w) if widths is None else np.atleast_1d(np.asarray(widths, dtype=float))
        if not (w.shape == c.shape == b.shape):
            raise ValueError("weights, centers and widths must have equal length")
        if np.any(w < 0) or abs(w.sum() - 1.0) > 1e-12:
            raise SlopeViolation("mixture weights must be non-negative and sum to 1")
        if np.any(b <= 0):
            raise SlopeViolation("mixture widths must be positive")
        self.w, self.c, self.b, self.shift = w, c, b, float(shift)
        self.name = name or "softplus-mixture"

    def _x(self, t):
        t = np.asarray(t, dtype=float)
        return self.b * (t[..., None] - self.c)

    def phi(self, t):
        return np.sum(self.w * fs_potential(self._x(t)) / self.b, axis=-1) + self.shift

    def dphi(self, t):
        return np.sum(self.w * expit(self._x(t)), axis=-1)

    def d2phi(self, t):
        return np.sum(self.w * self.b * fs_curvature(self._x(t)), axis=-1)

    def rel(self, t):
        # cancel the linear growth analytically for large t
        t = np.asarray(t, dtype=float)
        x = self._x(t)
        tail = np.sum(self.w * (log1p(np.exp(-np.abs(x))) + np.maximum(x, 0) - x
                                - self.b * self.c) / self.b, axis=-1)
        return tail - fs_potential(-t) + self.shift


FS = SoftplusMixture([1.0], [0.0], name="FS")


def make_test_potential(s: float = 0.5, c: float = 1.0, shift: float = 0.0) -> SoftplusMixture:
    """``(1 - s) * phi_FS(t) + s * phi_FS(t - c) + shift`` with its exact curvature bounds.

    The curvature ratio ``phi''/phi_FS''`` is monotone in ``t`` and runs
    between ``(1-s) + s e^{-c}`` and ``(1-s) + s e^{c}``; both are attached as
    ``known_bounds``.
    """
    if not 0.0 <= s <= 1.0:
        raise SlopeViolation(f"mixing parameter s={s} outside [0, 1]")
    pot = SoftplusMixture([1.0 - s, s], [0.0, c], shift=shift, name=f"test(s={s:g},c={c:g})")
    lo, hi = sorted(((1 - s) + s * math.exp(-c), (1 - s) + s * math.exp(c)))
    pot.known_bounds = CurvatureBounds(lo, hi)
    return pot


class CombinationPotential(ToricPotential):
    """Convex combination ``sum_i w_i phi_i + shift`` of toric potentials."""

    def __init__(self, terms, shift: float = 0.0, name: str | None = None):
        terms = tuple((float(w), p) for w, p in terms)
        if any(w < 0 for w, _ in terms) or abs(sum(w for w, _ in terms) - 1.0) > 1e-12:
            raise SlopeViolation("combination weights must be non-negative and sum to 1")
        self.terms, self.shift = terms, float(shift)
        self.name = name or "+".join(f"{w:g}*{p.name}" for w, p in terms) + (
            f"{shift:+g}" if shift else "")
        wins = [p.window for _, p in terms if p.window is not None]
        if wins:
            self.window = (max(w[0] for w in wins), min(w[1] for w in wins))

    def phi(self, t):
        return sum(w * p.phi(t) for w, p in self.terms) + self.shift

    def rel(self, t):
        return sum(w * p.rel(t) for w, p in self.terms) + self.shift

    def dphi(self, t):
        return sum(w * p.dphi(t) for w, p in self.terms)

    def d2phi(self, t):
        return sum(w * p.d2phi(t) for w, p in self.terms)

    @property
    def breakpoints(self):
        pts = [p.breakpoints for _, p in self.terms]
        return np.unique(np.concatenate(pts)) if pts else np.empty(0)

    def atoms(self):
        return [(x, w * j) for w, p in self.terms for x, j in p.atoms() if w > 0]


class SplinePotential(ToricPotential):
    """Convex spline: right derivatives stored at knots, linear in between.

    ``phi`` is piecewise quadratic on the knot intervals and affine outside the
    knot window, continuing with the end slopes.
    """

    def __init__(self, knots, slopes, phi0: float = 0.0, name: str = "spline",
                 check: bool = True):
        knots = np.asarray(knots, dtype=float)
        slopes = np.asarray(slopes, dtype=float)
        if knots.ndim != 1 or knots.shape != slopes.shape or knots.size < 2:
            raise ValueError("knots and slopes must be 1-D arrays of equal length >= 2")
        if np.any(np.diff(knots) <= 0):
            raise ValueError("knots must be strictly increasing")
        if check:
            if np.any(slopes < -1e-12) or np.any(slopes > 1 + 1e-12):
                raise SlopeViolation(f"{name}: slopes outside [0, 1]")
            if np.any(np.diff(slopes) < -1e-12):
                raise SlopeViolation(f"{name}: slopes not non-decreasing")
        self.knots, self.slopes = knots, slopes
        h = np.diff(knots)
        self._h = h
        self._curv = np.diff(slopes) / h
        self._vals = phi0 + np.concatenate(([0.0], np.cumsum(h * (slopes[:-1] + slopes[1:]) / 2)))
        self.window = (float(knots[0]), float(knots[-1]))
        self.name = name

    @classmethod
    def from_values(cls, t, values, name: str = "spline"):
        """Fit knot slopes to sampled values (two-column file input)."""
        t = np.asarray(t, dtype=float)
        v = np.asarray(values, dtype=float)
        s = np.gradient(v, t)
        if np.any(np.diff(s) < -1e-6) or s.min() < -1e-6 or s.max() > 1 + 1e-6:
            raise SlopeViolation(f"{name}: sampled values are not an admissible potential")
        s = np.clip(np.maximum.accumulate(s), 0.0, 1.0)
        pot = cls(t, s, 0.0, name)
        # match the sampled values in the least-squares sense
        offset = float(np.mean(v - pot.phi(t)))
        return cls(t, s, offset, name)

    @classmethod
    def load(cls, path: str | Path):
        data = np.loadtxt(path, dtype=float, ndmin=2)
        if data.shape[1] != 2:
            raise ValueError(f"{path}: expected two columns (t, phi)")
        return cls.from_values(data[:, 0], data[:, 1], name=Path(path).stem)

    def _locate(self, t):
        t = np.asarray(t, dtype=float)
        i = np.clip(np.searchsorted(self.knots, t, side="right") - 1, 0, self.knots.size - 2)
        return t, i

    def phi(self, t):
        t, i = self._locate(t)
        x = t - self.knots[i]
        inside = self._vals[i] + self.slopes[i] * x + 0.5 * self._curv[i] * x * x
        left = self._vals[0] + self.slopes[0] * (t - self.knots[0])
        right = self._vals[-1] + self.slopes[-1] * (t - self.knots[-1])
        return np.where(t < self.knots[0], left, np.where(t > self.knots[-1], right, inside))

    def dphi(self, t):
        t, i = self._locate(t)
        inside = self.slopes[i] + self._curv[i] * (t - self.knots[i])
        return np.where(t < self.knots[0], self.slopes[0],
                        np.where(t >= self.knots[-1], self.slopes[-1], inside))

    def d2phi(self, t):
        t, i = self._locate(t)
        out = self._curv[i]
        return np.where((t < self.knots[0]) | (t >= self.knots[-1]), 0.0, out)

    @property
    def breakpoints(self):
        return self.knots


class MaxPotential(ToricPotential):
    """Pointwise maximum of two toric potentials (again convex, slopes in [0, 1])."""

    def __init__(self, p: ToricPotential, q: ToricPotential, search=(-80.0, 80.0, 16001)):
        self.p, self.q = p, q
        self.name = f"max({p.name},{q.name})"
        t = np.linspace(*search)
        d = p.rel(t) - q.rel(t)
        roots = []
        for i in np.nonzero(np.sign(d[:-1]) * np.sign(d[1:]) < 0)[0]:
            roots.append(brentq(lambda x: float(p.rel(x) - q.rel(x)), t[i], t[i + 1],
                                xtol=1e-14, rtol=1e-15))
        roots.extend(t[d == 0.0].tolist())
        self.crossings = np.unique(np.asarray(roots, dtype=float))

    def _p_active(self, t):
        t = np.asarray(t, dtype=float)
        dp, dq = self.p.rel(t), self.q.rel(t)
        tie = dp == dq
        return np.where(tie, self.p.dphi(t) >= self.q.dphi(t), dp > dq)

    def phi(self, t):
        return np.maximum(self.p.phi(t), self.q.phi(t))

    def rel(self, t):
        return np.maximum(self.p.rel(t), self.q.rel(t))

    def dphi(self, t):
        return np.where(self._p_active(t), self.p.dphi(t), self.q.dphi(t))

    def d2phi(self, t):
        return np.where(self._p_active(t), self.p.d2phi(t), self.q.d2phi(t))

    @property
    def breakpoints(self):
        return np.unique(np.concatenate([self.crossings, self.p.breakpoints, self.q.breakpoints]))

    def atoms(self):
        out = []
        for x in self.crossings:
            jump = abs(float(self.p.dphi(x) - self.q.dphi(x)))
            if jump > 0:
                out.append((float(x), jump))
        return out


class PerturbedPotential(ToricPotential):
    """``phi + eps * f``; need not be admissible (used for Hilbert norms of ``phi + t f``)."""

    def __init__(self, base: ToricPotential, f: SmoothFunction, eps: float = 1.0):
        self.base, self.f, self.eps = base, f, float(eps)
        self.window = base.window
        self.name = f"{base.name}+{eps:g}*{f.name}"

    def phi(self, t):
        return self.base.phi(t) + self.eps * self.f(t)

    def rel(self, t):
        return self.base.rel(t) + self.eps * self.f(t)

    def dphi(self, t):
        return self.base.dphi(t) + self.eps * self.f.df(np.asarray(t, dtype=float))

    def d2phi(self, t):
        if self.f.d2f is None:
            raise ValueError(f"{self.f.name} has no second derivative")
        return self.base.d2phi(t) + self.eps * self.f.d2f(np.asarray(t, dtype=float))

    @property
    def breakpoints(self):
        return self.base.breakpoints

    def atoms(self):
        return self.base.atoms()


class LogTailPotential(ToricPotential):
    """``phi_FS - scale * log(1 + log(1 + e^{-t}))``: full mass, relative potential unbounded below.

    The slope tends to 0 only like ``scale / |t|`` as ``t -> -inf``, so the
    relative potential behaves like ``-scale * log|t|`` there.  Requires
    ``0 < scale <= 1``.
    """

    def __init__(self, scale: float = 1.0, shift: float = 0.0):
        if not 0 < scale <= 1:
            raise SlopeViolation("scale must lie in (0, 1]")
        self.scale, self.shift = float(scale), float(shift)
        self.name = f"logtail({scale:g})"

    def _s(self, t):
        return fs_potential(-np.asarray(t, dtype=float))

    def rel(self, t):
        return -self.scale * np.log1p(self._s(t)) + self.shift

    def phi(self, t):
        return fs_potential(t) + self.rel(t)

    def dphi(self, t):
        t = np.asarray(t, dtype=float)
        return fs_slope(t) + self.scale * fs_slope(-t) / (1.0 + self._s(t))

    def d2phi(self, t):
        t = np.asarray(t, dtype=float)
        s = self._s(t)
        q = fs_slope(-t)
        return (fs_curvature(t) * (1.0 - self.scale / (1.0 + s))
                + self.scale * q * q / (1.0 + s) ** 2)


def random_mixture(rng: np.random.Generator, n_terms: int = 3, spread: float = 3.0,
                   width_range=(0.5, 2.0), fs_only: bool = False) -> SoftplusMixture:
    """A seeded random member of the softplus-mixture family."""
    w = rng.dirichlet(np.ones(n_terms))
    c = rng.uniform(-spread, spread, n_terms)
    b = np.ones(n_terms) if fs_only else rng.uniform(*width_range, n_terms)
    shift = rng.uniform(-0.5, 0.5)
    return SoftplusMixture(w, c, b, shift=shift, name=f"mix{n_terms}")


def check_window(potential: ToricPotential, grid=None, tol: float = 1e-6) -> tuple[float, float]:
    """Return the truncation window after checking the end slopes are 0 and 1."""
    t = default_grid() if grid is None else np.asarray(grid)
    if not potential.is_full_mass(t, tol):
        raise WindowTooSmall(f"{potential.name}: end slopes not within {tol:g} of 0 and 1 "
                             f"on [{t[0]:g}, {t[-1]:g}]")
    return (float(t[0]), float(t[-1]))


def potential_from_config(cfg: dict) -> ToricPotential:
    """Build a potential from ``{"kind": ..., **params}``."""
    kind = cfg.get("kind", "fs")
    if kind == "fs":
        return FS.shifted(float(cfg.get("shift", 0.0))) if cfg.get("shift") else FS
    if kind == "test":
        return make_test_potential(float(cfg.get("s", 0.5)), float(cfg.get("c", 1.0)),
                                   float(cfg.get("shift", 0.0)))
    if kind == "mixture":
        return SoftplusMixture(cfg["weights"], cfg["centers"], cfg.get("widths"),
                               float(cfg.get("shift", 0.0)))
    if kind == "random":
        seed = int(cfg.get("seed", 0))
        p = random_mixture(np.random.default_rng(seed), int(cfg.get("terms", 3)),
                           float(cfg.get("spread", 3.0)), fs_only=bool(cfg.get("fs_only", False)))
        p.name = f"{p.name}(seed={seed})"
        return p
    if kind == "logtail":
        return LogTailPotential(float(cfg.get("scale", 1.0)), float(cfg.get("shift", 0.0)))
    if kind == "spline_file":
        return SplinePotential.load(cfg["path"])
    raise ValueError(f"unknown potential kind {kind!r}")


def random_radial_weight(rng: np.random.Generator, n: int = 1, radius: float = 1.0) -> RadialWeight:
    """``a s + b s^2 + c log(1 + d s)`` in each coordinate, coefficients drawn from ``rng``.

    ``b >= -a / (4 R^2)`` keeps the Levi form ``a + 4 b s + c d / (1 + d s)^2``
    non-negative, so every draw is psh.
    """
    profiles = []
    for _ in range(n):
        a = rng.uniform(0.0, 3.0)
        b = rng.uniform(-a / (4.0 * radius * radius), 1.0)
        c, d = rng.uniform(0.0, 2.0), rng.uniform(0.5, 3.0)
        profiles.append(Profile.polynomial([0.0, a, b]) + Profile.log1p(d, c))
    return RadialWeight(tuple(profiles), (radius,) * n)


def domain_from_config(cfg: dict) -> ReinhardtDomain:
    kind = cfg.get("kind", "polydisk")
    n = int(cfg.get("n", 1))
    if kind == "polydisk":
        return ReinhardtDomain.polydisk(cfg.get("radii", 1.0), n)
    if kind == "ball":
        return ReinhardtDomain.ball(float(cfg.get("radius", 1.0)), n)
    raise ValueError(f"unknown domain kind {kind!r}")


def weight_from_config(cfg: dict, domain: ReinhardtDomain):
    """``{"kind": "gaussian" | "zero" | "profile" | "random" | "planar", ...}``."""
    kind = cfg.get("kind", "gaussian")
    if kind == "gaussian":
        prof = Profile.gaussian(float(cfg.get("a", 1.0)))
    elif kind == "zero":
        prof = Profile.zero()
    elif kind == "profile":
        prof = Profile.polynomial(cfg.get("coeffs", [0.0]))
        if "log1p" in cfg:
            b, scale = cfg["log1p"]
            prof = prof + Profile.log1p(float(b), float(scale))
    elif kind == "random":
        if domain.kind != "polydisk":
            raise ValueError("random radial weights are product weights on a polydisk")
        w = random_radial_weight(np.random.default_rng(int(cfg.get("seed", 0))), domain.n)
        return RadialWeight(w.profiles, domain.radii)
    elif kind == "planar":
        if domain.n != 1:
            raise ValueError("planar weights live in one variable")
        r = domain.radii[0]
        form = cfg.get("form", "real_part")
        if form == "real_part":
            return PlanarWeight.real_part(float(cfg.get("c", 1.0)), r)
        if form == "exp_real":
            return PlanarWeight.exp_real(float(cfg.get("c", 1.0)), r)
        if form == "gaussian_plus_harmonic":
            return PlanarWeight.gaussian_plus_harmonic(float(cfg.get("a", 1.0)),
                                                       float(cfg.get("eps", 0.0)),
                                                       int(cfg.get("power", 2)), r)
        raise ValueError(f"unknown planar weight form {form!r}")
    else:
        raise ValueError(f"unknown weight kind {kind!r}")
    return RadialWeight.on(domain, prof)


def function_from_config(cfg) -> SmoothFunction:
    """A test function: ``{"kind": "constant" | "tanh" | "sigmoid" | "lorentzian" | "bump", ...}``."""
    kind = cfg.get("kind", "constant")
    scale = float(cfg.get("scale", 1.0))
    if kind == "constant":
        f = SmoothFunction.constant(float(cfg.get("c", 1.0)))
    elif kind == "tanh":
        f = SmoothFunction.tanh(float(cfg.get("shift", 0.0)), float(cfg.get("rate", 1.0)))
    elif kind == "sigmoid":
        f = SmoothFunction.sigmoid(float(cfg.get("rate", 1.0)), float(cfg.get("shift", 0.0)))
    elif kind == "lorentzian":
        f = SmoothFunction.lorentzian(float(cfg.get("shift", 0.0)))
    elif kind == "bump":
        f = SmoothFunction.bump(float(cfg.get("height", -1.0)), float(cfg.get("center", 0.0)),
                                float(cfg.get("width", 1.0)))
    else:
        raise ValueError(f"unknown function kind {kind!r}")
    return f if scale == 1.0 else f * scale
