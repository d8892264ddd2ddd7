"""Deterministic adaptive quadrature on finite and (semi-)infinite intervals.

The workhorse is a globally adaptive Gauss-Kronrod (7, 15) scheme.  Infinite
endpoints are mapped to a finite parameter interval by ``t = a + s/(1 - s)``
(and its mirror image) before subdivision.  Fixed composite Gauss-Legendre
panel rules are provided for integrating many integrands on shared nodes.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Sequence

import numpy as np

from .errors import NonConvergent

DEFAULT_TOL = 1e-10

# Gauss-Kronrod 15-point abscissae (non-negative half) and weights; the
# 7-point Gauss rule uses the odd-indexed abscissae.
_XGK = np.array([
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.000000000000000000000000000000000])
_WGK = np.array([
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714])
_WG = np.array([
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327])

_NODES = np.concatenate((-_XGK[:-1], _XGK[::-1]))
_WK = np.concatenate((_WGK[:-1], _WGK[::-1]))
_WG_FULL = np.zeros(15)
_WG_FULL[1:7:2] = _WG[:3]
_WG_FULL[7] = _WG[3]
_WG_FULL[9:15:2] = _WG[2::-1]
_EPS = np.finfo(float).eps


@dataclass(frozen=True)
class Integrand1D:
    """A real integrand on ``[a, b]`` (either end may be infinite).

    ``f`` must accept numpy arrays.  ``points`` are interior points where the
    integrand may be non-smooth; they become initial subdivision points.
    """

    f: Callable
    a: float
    b: float
    points: Sequence[float] = ()


@dataclass(frozen=True)
class QuadratureResult:
    value: float
    error_estimate: float
    evaluations: int

    def __float__(self):
        return self.value


def _gk15(g, lo, hi):
    c, h = 0.5 * (lo + hi), 0.5 * (hi - lo)
    fx = g(c + h * _NODES)
    rk = h * np.dot(_WK, fx)
    rg = h * np.dot(_WG_FULL, fx)
    mean = rk / (2 * h) if h else 0.0
    resasc = abs(h) * np.dot(_WK, np.abs(fx - mean))
    resabs = abs(h) * np.dot(_WK, np.abs(fx))
    err = abs(rk - rg)
    if resasc and err:
        err = resasc * min(1.0, (200.0 * err / resasc) ** 1.5)
    if resabs > np.finfo(float).tiny / (50 * _EPS):
        err = max(err, 50 * _EPS * resabs)
    return float(rk), float(err)


def _to_finite(integrand: Integrand1D):
    """Return ``(g, lo, hi, pts)`` with ``g`` defined on a finite interval."""
    f, a, b = integrand.f, float(integrand.a), float(integrand.b)
    pts = [float(p) for p in integrand.points]
    if math.isfinite(a) and math.isfinite(b):
        return [(f, a, b, [p for p in pts if a < p < b])]
    if not math.isfinite(a) and not math.isfinite(b):
        c = min(pts, key=abs) if pts else 0.0
        return (_to_finite(Integrand1D(f, -math.inf, c, [p for p in pts if p < c]))
                + _to_finite(Integrand1D(f, c, math.inf, [p for p in pts if p > c])))
    if math.isfinite(a):
        def g(s, f=f, a=a):
            return f(a + s / (1.0 - s)) / (1.0 - s) ** 2
        inner = [p - a for p in pts if p > a]
        return [(g, 0.0, 1.0, [x / (1.0 + x) for x in inner])]

    def g(s, f=f, b=b):
        return f(b - s / (1.0 - s)) / (1.0 - s) ** 2
    inner = [b - p for p in pts if p < b]
    return [(g, 0.0, 1.0, sorted(x / (1.0 + x) for x in inner))]


def integrate(integrand: Integrand1D, tol: float = DEFAULT_TOL, abs_tol: float | None = None,
              limit: int = 4000) -> QuadratureResult:
    """Globally adaptive Gauss-Kronrod integration.

    Stops once the summed error estimate is below ``max(tol * |value|, abs_tol)``
    (``abs_tol`` defaults to ``tol``).  Raises ``NonConvergent`` when more than
    ``limit`` subintervals would be needed.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    abs_tol = tol if abs_tol is None else abs_tol
    heap, total, err_total, nevals, counter = [], 0.0, 0.0, 0, 0
    for g, lo, hi, pts in _to_finite(integrand):
        edges = [lo] + sorted(pts) + [hi]
        for x0, x1 in zip(edges[:-1], edges[1:]):
            if x1 <= x0:
                continue
            v, e = _gk15(g, x0, x1)
            nevals += 15
            total += v
            err_total += e
            heapq.heappush(heap, (-e, counter, x0, x1, v, g))
            counter += 1
    while err_total > max(tol * abs(total), abs_tol):
        if len(heap) >= limit:
            raise NonConvergent(
                f"adaptive quadrature exhausted {limit} subintervals "
                f"(value {total:.6g}, error {err_total:.3g}); truncate or transform the domain")
        neg_e, _, x0, x1, v, g = heapq.heappop(heap)
        mid = 0.5 * (x0 + x1)
        if not x0 < mid < x1:
            raise NonConvergent("subinterval collapsed below machine resolution")
        v1, e1 = _gk15(g, x0, mid)
        v2, e2 = _gk15(g, mid, x1)
        nevals += 30
        total += v1 + v2 - v
        err_total += e1 + e2 + neg_e
        heapq.heappush(heap, (-e1, counter, x0, mid, v1, g))
        heapq.heappush(heap, (-e2, counter + 1, mid, x1, v2, g))
        counter += 2
    # re-sum to shed accumulated rounding from the incremental updates
    total = math.fsum(item[4] for item in heap)
    err_total = math.fsum(-item[0] for item in heap)
    return QuadratureResult(total, err_total, nevals)


def quad(f: Callable, a: float, b: float, tol: float = DEFAULT_TOL, points: Sequence[float] = (),
         abs_tol: float | None = None, limit: int = 4000) -> float:
    """Shorthand returning only the value of :func:`integrate`."""
    return integrate(Integrand1D(f, a, b, tuple(points)), tol, abs_tol, limit).value


@lru_cache(maxsize=32)
def _leggauss(order: int):
    x, w = np.polynomial.legendre.leggauss(order)
    x.setflags(write=False)
    w.setflags(write=False)
    return x, w


def panel_rule(breaks: np.ndarray, order: int = 16) -> tuple[np.ndarray, np.ndarray]:
    """Composite Gauss-Legendre nodes and weights on consecutive panels ``breaks``."""
    breaks = np.asarray(breaks, dtype=float)
    x, w = _leggauss(order)
    lo, hi = breaks[:-1, None], breaks[1:, None]
    half = 0.5 * (hi - lo)
    nodes = (0.5 * (lo + hi) + half * x).ravel()
    weights = (half * w).ravel()
    return nodes, weights


def polar_disk_rule(radius: float = 1.0, n_r: int = 48, n_theta: int = 64,
                    center: complex = 0.0) -> tuple[np.ndarray, np.ndarray]:
    """Tensor rule on a disk: Gauss-Legendre in ``r``, trapezoid (periodic) in ``theta``.

    Returns complex nodes and weights for ``dlambda``.
    """
    x, w = _leggauss(n_r)
    r = 0.5 * radius * (x + 1.0)
    wr = 0.5 * radius * w * r
    th = 2.0 * np.pi * np.arange(n_theta) / n_theta
    nodes = center + (r[:, None] * np.exp(1j * th[None, :])).ravel()
    weights = (wr[:, None] * np.full(n_theta, 2.0 * np.pi / n_theta)[None, :]).ravel()
    return nodes, weights


def circle_mean(f: Callable, center: complex, rho: float, n_theta: int = 256) -> float:
    """Mean of ``f`` over the circle ``|z - center| = rho`` (periodic trapezoid)."""
    th = 2.0 * np.pi * np.arange(n_theta) / n_theta
    return float(np.mean(f(center + rho * np.exp(1j * th))))


def moment(domain, weight, multi_index, tol: float = 1e-12) -> float:
    """``int_Omega |z^alpha|^2 e^{-u} dlambda`` for a radial weight on a Reinhardt domain.

    Polydisks factor into ``prod_i pi * int_0^{R_i^2} s^{alpha_i} e^{-g_i(s)} ds``.
    Balls (with ``u = g(|z|^2)``) reduce to
    ``pi^n alpha! / (|alpha| + n - 1)! * int_0^{R^2} s^{|alpha|+n-1} e^{-g(s)} ds``.
    """
    alpha = tuple(int(a) for a in np.atleast_1d(multi_index))
    if len(alpha) != domain.n:
        raise ValueError(f"multi-index {alpha} does not match dimension {domain.n}")
    if domain.kind == "polydisk":
        if weight.kind != "product":
            raise ValueError("polydisk moments need a product-radial weight")
        out = 1.0
        for a_i, R, prof in zip(alpha, domain.radii, weight.profiles):
            out *= math.pi * _radial_integral(prof, a_i, R * R, tol)
        return out
    n, R = domain.n, domain.radii[0]
    if weight.kind == "norm":
        prof = weight.profiles[0]
    elif all(np.all(p.g(np.linspace(0, R * R, 5)) == 0) for p in weight.profiles):
        from .weights import Profile
        prof = Profile.zero()
    else:
        raise ValueError("ball moments need a weight of the form g(|z|^2)")
    m = sum(alpha)
    coef = math.pi ** n * math.prod(math.factorial(a) for a in alpha) / math.factorial(m + n - 1)
    return coef * _radial_integral(prof, m + n - 1, R * R, tol)


def _radial_integral(prof, m: int, S: float, tol: float) -> float:
    """``int_0^S s^m e^{-g(s)} ds`` with a peak-aware initial split."""
    g0 = float(prof.g(0.0))

    def f(s):
        s = np.asarray(s, dtype=float)
        with np.errstate(divide="ignore"):
            logs = np.where(s > 0, m * np.log(np.where(s > 0, s, 1.0)), 0.0 if m == 0 else -np.inf)
        return np.exp(logs - (prof.g(s) - g0))

    s = np.linspace(0.0, S, 65)
    vals = f(s)
    ipk = int(np.argmax(vals))
    pts = sorted({s[max(ipk - 1, 1)], s[ipk], s[min(ipk + 1, 63)]} - {0.0, S})
    res = integrate(Integrand1D(f, 0.0, S, pts), tol=tol, abs_tol=0.0)
    return res.value * math.exp(-g0)
