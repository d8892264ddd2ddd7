"""Atomless S^1-invariant measures on CP^1, represented by their CDF on the t-line."""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path
from typing import Callable

import numpy as np
from scipy.special import expit, logit

from .errors import AtomDetected, MassMismatch, WindowTooSmall
from .quadrature import quad
from .weights import T_MAX, T_MIN, TWO_PI, fs_curvature

MASS_TOL = 1e-10


@dataclass(frozen=True)
class RadonMeasure1D:
    """A measure of total mass ``2*pi`` on the t-line given by a continuous CDF.

    ``density`` is ``dF/dt`` where it exists; ``quantile`` (optional) inverts
    ``F`` on ``(0, 2*pi)`` and allows integration by push-forward.
    ``singular_points`` are places where the density is unbounded or kinked.
    """

    cdf: Callable
    density: Callable | None = None
    quantile: Callable | None = None
    singular_points: tuple[float, ...] = ()
    name: str = "measure"

    def __call__(self, t):
        return self.cdf(np.asarray(t, dtype=float))

    def mass(self, lo: float = -math.inf, hi: float = math.inf) -> float:
        F = lambda x: 0.0 if x == -math.inf else (TWO_PI if x == math.inf else float(self.cdf(x)))
        return F(hi) - F(lo)

    def integrate(self, f: Callable, tol: float = 1e-12) -> float:
        """``int f dnu`` via the quantile push-forward when available, else the density."""
        if self.quantile is not None:
            return quad(lambda p: f(self.quantile(p)), 0.0, TWO_PI, tol=tol, abs_tol=tol)
        if self.density is None:
            raise ValueError(f"{self.name}: need a density or a quantile to integrate")
        pts = sorted(set(self.singular_points) | {0.0})
        return quad(lambda t: f(t) * self.density(t), -math.inf, math.inf, tol=tol,
                    abs_tol=tol, points=pts, limit=20000)

    def validate(self, lo: float = T_MIN, hi: float = T_MAX, n: int = 4001) -> None:
        """Check total mass, window settling and the absence of atoms."""
        t = np.linspace(lo, hi, n)
        F = np.asarray(self.cdf(t), dtype=float)
        if np.any(np.diff(F) < -1e-14):
            raise ValueError(f"{self.name}: CDF is not non-decreasing")
        ends = np.asarray(self.cdf(np.array([-1e300, 1e300])), dtype=float)
        if abs(ends[1] - ends[0] - TWO_PI) > MASS_TOL or abs(ends[0]) > MASS_TOL:
            raise MassMismatch(f"{self.name}: CDF limits {ends[0]:.17g}, {ends[1]:.17g} "
                               "are not 0 and 2*pi")
        if F[0] > MASS_TOL or TWO_PI - F[-1] > MASS_TOL:
            raise WindowTooSmall(f"{self.name}: CDF not within {MASS_TOL:g} of its limits "
                                 f"on [{lo:g}, {hi:g}] (F = {F[0]:.3g}, {F[-1]:.17g})")
        detect_atoms(self.cdf, t, name=self.name)


def detect_atoms(cdf: Callable, t: np.ndarray, tol: float = 1e-6, name: str = "measure",
                 depth: int = 60) -> None:
    """Raise ``AtomDetected`` if the largest cell increment survives repeated bisection."""
    F = np.asarray(cdf(t), dtype=float)
    inc = np.diff(F)
    for i in np.argsort(inc)[::-1][:5]:
        a, b = t[i], t[i + 1]
        Fa, Fb = F[i], F[i + 1]
        for _ in range(depth):
            m = 0.5 * (a + b)
            Fm = float(cdf(np.array([m]))[0])
            if Fm - Fa >= Fb - Fm:
                b, Fb = m, Fm
            else:
                a, Fa = m, Fm
        if Fb - Fa > tol:
            raise AtomDetected(f"{name}: CDF jumps by {Fb - Fa:.3g} near t = {a:.12g}")


def fs_measure(shift: float = 0.0) -> RadonMeasure1D:
    """``omega_FS`` (``shift = 0``) or its translate by ``shift`` along the t-line."""
    return RadonMeasure1D(
        lambda t: TWO_PI * expit(np.asarray(t, dtype=float) - shift),
        lambda t: TWO_PI * fs_curvature(np.asarray(t, dtype=float) - shift),
        lambda p: shift + logit(np.asarray(p, dtype=float) / TWO_PI),
        (), "FS" if shift == 0 else f"FS(t-{shift:g})")


def mixture_measure(weights, centers, widths=None, name: str = "mixture") -> RadonMeasure1D:
    """``2*pi * sum_i w_i expit(b_i (t - c_i))``."""
    w = np.asarray(weights, dtype=float)
    c = np.asarray(centers, dtype=float)
    b = np.ones_like(w) if widths is None else np.asarray(widths, dtype=float)
    if np.any(w < 0) or abs(w.sum() - 1.0) > 1e-12:
        raise MassMismatch("mixture weights must be non-negative and sum to 1")

    def F(t):
        t = np.asarray(t, dtype=float)
        return TWO_PI * np.sum(w * expit(b * (t[..., None] - c)), axis=-1)

    def dens(t):
        t = np.asarray(t, dtype=float)
        return TWO_PI * np.sum(w * b * fs_curvature(b * (t[..., None] - c)), axis=-1)

    m = RadonMeasure1D(F, dens, None, tuple(c.tolist()), name)
    object.__setattr__(m, "params", (w, c, b))
    return m


def random_measure(rng: np.random.Generator, n_terms: int = 3, spread: float = 3.0,
                   width_range=(0.8, 2.0)) -> RadonMeasure1D:
    w = rng.dirichlet(np.ones(n_terms))
    c = rng.uniform(-spread, spread, n_terms)
    b = rng.uniform(*width_range, n_terms)
    return mixture_measure(w, c, b, name=f"random{n_terms}")


def holder_measure(delta: float = 1.0, gamma: float = 0.5, center: float = 0.0) -> RadonMeasure1D:
    """Mass ``2*pi`` on ``[center - delta, center + delta]`` with CDF ``pi(1 + sign(x)|x/delta|^gamma)``.

    For ``gamma < 1`` the density blows up like ``|x|^{gamma-1}`` at the centre,
    so the solving potential has unbounded second derivative there.
    """
    if not (delta > 0 and 0 < gamma <= 1):
        raise ValueError("need delta > 0 and 0 < gamma <= 1")

    def F(t):
        x = np.clip((np.asarray(t, dtype=float) - center) / delta, -1.0, 1.0)
        return math.pi * (1.0 + np.sign(x) * np.abs(x) ** gamma)

    def dens(t):
        x = (np.asarray(t, dtype=float) - center) / delta
        with np.errstate(divide="ignore"):
            d = math.pi * gamma * np.abs(x) ** (gamma - 1.0) / delta
        return np.where(np.abs(x) <= 1.0, d, 0.0)

    def Q(p):
        y = np.asarray(p, dtype=float) / math.pi - 1.0
        return center + delta * np.sign(y) * np.abs(y) ** (1.0 / gamma)

    return RadonMeasure1D(F, dens, Q, (center - delta, center, center + delta),
                          f"holder(delta={delta:g},gamma={gamma:g})")


def tabulated_measure(t, F, name: str = "table") -> RadonMeasure1D:
    """Piecewise-linear CDF through samples ``(t_i, F_i)``; constant outside the table."""
    t = np.asarray(t, dtype=float)
    F = np.asarray(F, dtype=float)
    if t.ndim != 1 or t.shape != F.shape or t.size < 2:
        raise ValueError("need two equal-length columns")
    order = np.argsort(t, kind="stable")
    t, F = t[order], F[order]
    same = np.diff(t) == 0
    if np.any(same & (np.diff(F) != 0)):
        raise AtomDetected(f"{name}: CDF takes two values at the same t")
    if np.any(np.diff(F) < 0):
        raise ValueError(f"{name}: CDF is not non-decreasing")
    if abs(F[-1] - TWO_PI) > MASS_TOL or abs(F[0]) > MASS_TOL:
        raise MassMismatch(f"{name}: CDF runs from {F[0]:.17g} to {F[-1]:.17g}, not 0 to 2*pi")
    keep = np.concatenate(([True], ~same))
    t, F = t[keep], F[keep]
    slope = np.diff(F) / np.diff(t)

    def cdf(x):
        return np.interp(np.asarray(x, dtype=float), t, F)

    def dens(x):
        x = np.asarray(x, dtype=float)
        i = np.clip(np.searchsorted(t, x, side="right") - 1, 0, t.size - 2)
        return np.where((x < t[0]) | (x >= t[-1]), 0.0, slope[i])

    m = RadonMeasure1D(cdf, dens, None, tuple(t.tolist()), name)
    object.__setattr__(m, "table", (t, F))
    return m


def load_measure(path: str | Path) -> RadonMeasure1D:
    data = np.loadtxt(path, dtype=float, ndmin=2)
    if data.shape[1] != 2:
        raise ValueError(f"{path}: expected two columns (t, F)")
    return tabulated_measure(data[:, 0], data[:, 1], name=Path(path).stem)


def measure_from_config(cfg: dict) -> RadonMeasure1D:
    kind = cfg.get("kind", "fs")
    if kind == "fs":
        return fs_measure(float(cfg.get("shift", 0.0)))
    if kind == "holder":
        return holder_measure(float(cfg.get("delta", 1.0)), float(cfg.get("gamma", 0.5)),
                              float(cfg.get("center", 0.0)))
    if kind == "mixture":
        return mixture_measure(cfg["weights"], cfg["centers"], cfg.get("widths"))
    if kind == "random":
        seed = int(cfg.get("seed", 0))
        nu = random_measure(np.random.default_rng(seed), int(cfg.get("terms", 3)))
        return RadonMeasure1D(nu.cdf, nu.density, nu.quantile, nu.singular_points,
                              f"{nu.name}(seed={seed})")
    if kind == "table":
        if "path" in cfg:
            return load_measure(cfg["path"])
        return tabulated_measure(cfg["t"], cfg["F"])
    raise ValueError(f"unknown measure kind {kind!r}")
