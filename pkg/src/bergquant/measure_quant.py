"""Solving ``omega_phi = nu`` for S^1-invariant measures and quantizing the solution."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .measures import RadonMeasure1D
from .quadrature import panel_rule, quad
from .toric_cp1 import BergmanDensity, ma_measure, quantize
from .weights import TWO_PI, SmoothFunction, SplinePotential, default_grid, fs_curvature

INTERP_TOL = 1e-6
ROUND_TRIP_TOL = 1e-8
MAX_BISECTIONS = 80
NOISE_FLOOR = 1e-12


def _refine_knots(F: Callable, knots: np.ndarray, tol: float) -> np.ndarray:
    """Bisect knot intervals until linear interpolation of ``F`` is within ``tol`` at midpoints."""
    x = knots
    for _ in range(MAX_BISECTIONS):
        mid = 0.5 * (x[:-1] + x[1:])
        Fx = np.asarray(F(x), dtype=float)
        err = np.abs(np.asarray(F(mid), dtype=float) - 0.5 * (Fx[:-1] + Fx[1:]))
        bad = (err > tol) & (mid > x[:-1]) & (mid < x[1:])
        if not np.any(bad):
            return x
        x = np.sort(np.concatenate((x, mid[bad])))
    return x


def solve_calabi_yau(nu: RadonMeasure1D, grid=None, tol: float = INTERP_TOL) -> SplinePotential:
    """The potential with ``2*pi * phi' = F`` and ``int rel omega_FS = 0``.

    ``phi'`` is the piecewise-linear interpolant of ``F / 2*pi`` on an adaptively
    refined grid (so ``phi`` is the cumulative trapezoid of the slopes) and is
    affine outside the grid.  Singular points of ``nu`` are always knots.
    """
    nu.validate()
    base = default_grid() if grid is None else np.asarray(grid, dtype=float)
    sing = [s for s in nu.singular_points if base[0] < s < base[-1]]
    knots = _refine_knots(nu.cdf, np.unique(np.concatenate((base, sing))), TWO_PI * tol)
    slopes = np.asarray(nu.cdf(knots), dtype=float) / TWO_PI
    slopes = np.clip(np.maximum.accumulate(slopes), 0.0, 1.0)
    name = f"CY({nu.name})"
    pot = SplinePotential(knots, slopes, 0.0, name)
    c = _rel_mean(pot) / TWO_PI
    pot = SplinePotential(knots, slopes, -c, name)
    pot.measure = nu
    return pot


def _rel_mean(pot: SplinePotential) -> float:
    """``int rel omega_FS``: Gauss-Legendre on each knot interval, adaptive on the affine tails."""
    nodes, w = panel_rule(pot.knots, 8)
    inner = math.fsum(w * pot.rel(nodes) * fs_curvature(nodes))
    f = lambda t: pot.rel(t) * fs_curvature(t)
    lo, hi = pot.window
    tails = (quad(f, -math.inf, lo, tol=1e-12, abs_tol=1e-18)
             + quad(f, hi, math.inf, tol=1e-12, abs_tol=1e-18))
    return TWO_PI * (inner + tails)


def normalization(potential: SplinePotential) -> float:
    """``int rel omega_FS = 2*pi int rel phi_FS'' dt``, zero after solving."""
    return _rel_mean(potential)


def round_trip_error(nu: RadonMeasure1D, potential, grid=None) -> float:
    """Sup over the grid and the knots of ``|2*pi phi' - F|`` (the CDF of ``ma_measure``)."""
    base = default_grid() if grid is None else np.asarray(grid, dtype=float)
    t = np.concatenate((base, potential.knots))
    return float(np.max(np.abs(ma_measure(potential).cdf(t) - np.asarray(nu.cdf(t), dtype=float))))


def interpolation_error(nu: RadonMeasure1D, potential) -> float:
    """Sup over knot midpoints of ``|2*pi phi' - F|``; bounded by the refinement tolerance."""
    k = potential.knots
    t = 0.5 * (k[:-1] + k[1:])
    return float(np.max(np.abs(TWO_PI * potential.dphi(t) - np.asarray(nu.cdf(t), dtype=float))))


def quantize_measure(nu: RadonMeasure1D, k: int, potential=None) -> BergmanDensity:
    """``M^k_nu``: the Bergman measure of the solution of ``omega_phi = nu``."""
    if potential is None:
        potential = solve_calabi_yau(nu)
    return quantize(potential, k)


def test_functions() -> list[SmoothFunction]:
    """Bounded functions with limits at both poles."""
    return [SmoothFunction.constant(1.0), SmoothFunction.tanh(), SmoothFunction.tanh(2.0),
            SmoothFunction.lorentzian(), SmoothFunction.sigmoid(3.0)]


@dataclass
class WeakConvergenceReport:
    """Errors ``|int f dM^k - int f dnu|``, one row per test function."""

    measure: str
    ks: list[int]
    names: list[str]
    exact: list[float]
    quantum: np.ndarray          # shape (functions, levels)
    threshold: float
    round_trip: float = math.nan
    interpolation: float = math.nan
    details: dict = field(default_factory=dict)

    @property
    def errors(self) -> np.ndarray:
        return np.abs(self.quantum - np.asarray(self.exact)[:, None])

    def row_passed(self, i: int) -> bool:
        # errors at rounding level (odd f against a symmetric nu) count as ties
        e = self.errors[i]
        return bool(e[-1] <= e.min() + NOISE_FLOOR and e[-1] <= self.threshold)

    @property
    def passed(self) -> bool:
        return all(self.row_passed(i) for i in range(len(self.names)))

    def rows(self) -> list[dict]:
        out = []
        for i, name in enumerate(self.names):
            for j, k in enumerate(self.ks):
                out.append({"measure": self.measure, "function": name, "k": k,
                            "exact": self.exact[i], "quantum": float(self.quantum[i, j]),
                            "error": float(self.errors[i, j]), "pass": self.row_passed(i)})
        return out


def weak_convergence_report(nu: RadonMeasure1D, functions: Sequence[SmoothFunction] | None = None,
                            k_list: Sequence[int] = (25, 50, 100, 200),
                            threshold: float = 0.1) -> WeakConvergenceReport:
    """Integrate each test function against ``nu`` and against ``M^k_nu`` for every ``k``."""
    fs = list(test_functions() if functions is None else functions)
    ks = sorted(int(k) for k in k_list)
    pot = solve_calabi_yau(nu)
    exact = [nu.integrate(f) for f in fs]
    q = np.empty((len(fs), len(ks)))
    for j, k in enumerate(ks):
        d = quantize(pot, k)
        for i, f in enumerate(fs):
            q[i, j] = d.integrate(f)
    return WeakConvergenceReport(nu.name, ks, [f.name for f in fs], exact, q, threshold,
                                 round_trip_error(nu, pot), interpolation_error(nu, pot))
