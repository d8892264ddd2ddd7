"""Quantization of S^1-invariant potentials on CP^1.

Sections of ``O(k)`` are spanned by ``z^j`` (``j = 0..k``), which are
orthogonal for every S^1-invariant Hermitian metric, so all Gram data is the
list of norms

    ``n_j = 2*pi * int exp(j t - k phi(t)) phi_FS''(t) dt``.

All sums over ``j`` go through log-sum-exp because the terms ``e^{j t}/n_j``
span hundreds of decades for large ``k``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq
from scipy.special import logsumexp, softmax

from .errors import DegenerateLevelSet, LevelMismatch, NonConvergent
from .estimates import BoundReport
from .measures import RadonMeasure1D
from .quadrature import _leggauss, integrate, Integrand1D
from .weights import (TWO_PI, CurvatureBounds, MaxPotential, ToricPotential, default_grid,
                      fs_curvature, fs_potential, log_fs_curvature)

LOG_TAIL_GAP = math.log(1e30)
NORM_ORDER = 20
CHECK_ORDER = 14
NORM_RTOL = 1e-13
MASS_RTOL = 1e-12


# ---------------------------------------------------------------------------
# Hilbert norms
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class NormRule:
    """Shared nodes and log-weights (including ``2*pi*phi_FS''``) on the t-window."""

    k: int
    nodes: np.ndarray
    log_weights: np.ndarray
    window: tuple[float, float]
    error_estimate: float


@dataclass(frozen=True)
class QuantumSpectrum:
    """Level-``k`` norms ``log ||z^j||^2`` (``j = 0..k``) of a potential."""

    k: int
    log_norms: np.ndarray
    potential: ToricPotential
    window: tuple[float, float]
    error_estimate: float = 0.0
    rule: NormRule | None = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        if self.log_norms.shape != (self.k + 1,) or not np.all(np.isfinite(self.log_norms)):
            raise ValueError("spectrum needs k + 1 finite log-norms")

    @property
    def norms(self) -> np.ndarray:
        return np.exp(self.log_norms)


def _log_integrand_base(potential: ToricPotential, k: int, t: np.ndarray) -> np.ndarray:
    return -k * np.asarray(potential.phi(t), dtype=float) + log_fs_curvature(t)


def find_window(potential: ToricPotential, k: int, start: float = 40.0, step: float = 10.0,
                max_half_width: float = 5000.0) -> float:
    """Smallest symmetric half-width (from ``start`` in steps) where every norm integrand is
    ``1e30`` below its peak at both ends."""
    j = np.arange(k + 1, dtype=float)[:, None]
    T = start
    while T <= max_half_width:
        t = np.linspace(-T, T, int(16 * T) + 1)
        E = j * t[None, :] + _log_integrand_base(potential, k, t)[None, :]
        peak = E.max(axis=1)
        if np.all(E[:, 0] <= peak - LOG_TAIL_GAP) and np.all(E[:, -1] <= peak - LOG_TAIL_GAP):
            return T
        T += step
    raise NonConvergent(f"norm integrands of {potential.name} at k={k} do not decay "
                        f"within |t| <= {max_half_width:g}; enlarge the window")


def _panel_edges(potential: ToricPotential, k: int, T: float, hmax: float = 1.0,
                 hmin: float = 1e-9) -> np.ndarray:
    """Panels of width about one local standard deviation of the Laplace peaks."""
    probe = np.linspace(-T, T, int(64 * T) + 1)
    curv = k * np.maximum(np.asarray(potential.d2phi(probe), dtype=float), 0.0) + fs_curvature(probe)
    width = np.clip(1.0 / np.sqrt(curv), hmin, hmax)
    # march left to right using the smallest width seen over the next probe cell
    edges = [-T]
    x = -T
    while x < T:
        i = min(np.searchsorted(probe, x), probe.size - 1)
        h = min(width[max(i - 1, 0)], width[min(i + 1, probe.size - 1)], width[i])
        x = min(x + h, T)
        edges.append(x)
    bp = np.asarray(potential.breakpoints, dtype=float)
    bp = bp[(bp > -T) & (bp < T)]
    for x, _ in potential.atoms():
        if -T < x < T:
            bp = np.append(bp, x)
    e = np.unique(np.concatenate((edges, bp)))
    keep = np.concatenate(([True], np.diff(e) > 1e-13 * max(1.0, T)))
    return e[keep]


def _rule_from_edges(edges: np.ndarray, order: int):
    x, w = _leggauss(order)
    lo, hi = edges[:-1, None], edges[1:, None]
    half = 0.5 * (hi - lo)
    nodes = (0.5 * (lo + hi) + half * x).ravel()
    logw = np.log((half * w).ravel()) + math.log(TWO_PI) + log_fs_curvature(nodes)
    return nodes, logw


def _log_norms(potential: ToricPotential, k: int, nodes, logw) -> np.ndarray:
    base = logw - k * np.asarray(potential.phi(nodes), dtype=float)
    out = np.empty(k + 1)
    for j0 in range(0, k + 1, 64):
        j = np.arange(j0, min(j0 + 64, k + 1), dtype=float)[:, None]
        out[j0:j0 + j.shape[0]] = logsumexp(j * nodes[None, :] + base[None, :], axis=1)
    return out


def norm_rule(potential: ToricPotential, k: int, rtol: float = NORM_RTOL,
              max_refinements: int = 5) -> NormRule:
    """Composite Gauss-Legendre rule certified for all ``k + 1`` norm integrands."""
    if k < 1:
        raise ValueError("level k must be >= 1")
    T = find_window(potential, k)
    edges = _panel_edges(potential, k, T)
    for _ in range(max_refinements + 1):
        n_hi, w_hi = _rule_from_edges(edges, NORM_ORDER)
        n_lo, w_lo = _rule_from_edges(edges, CHECK_ORDER)
        a = _log_norms(potential, k, n_hi, w_hi)
        b = _log_norms(potential, k, n_lo, w_lo)
        err = float(np.max(np.abs(a - b)))
        # exponents of size k|phi| carry an absolute rounding floor
        floor = 64.0 * np.finfo(float).eps * max(1.0, float(np.max(np.abs(a))))
        if err <= max(rtol, floor):
            return NormRule(k, n_hi, w_hi, (-T, T), err)
        edges = np.unique(np.concatenate((edges, 0.5 * (edges[:-1] + edges[1:]))))
    raise NonConvergent(f"norm rule for {potential.name} at k={k} did not reach {rtol:g} "
                        f"(estimate {err:.3g})")


def hilbert_norms(potential: ToricPotential, k: int, rule: NormRule | None = None) -> QuantumSpectrum:
    """``log ||z^j||^2`` for ``j = 0..k``.

    Passing ``rule`` reuses nodes from another potential; this keeps finite
    differences in a perturbation parameter free of quadrature noise.
    """
    if rule is None:
        rule = norm_rule(potential, k)
    elif rule.k != k:
        raise LevelMismatch(f"rule built for k={rule.k}, requested k={k}")
    logn = _log_norms(potential, k, rule.nodes, rule.log_weights)
    return QuantumSpectrum(k, logn, potential, rule.window, rule.error_estimate, rule)


def fs_log_norms(k: int) -> np.ndarray:
    """Closed form ``log(2*pi * j!(k-j)!/(k+1)!)`` for the Fubini-Study metric."""
    j = np.arange(k + 1)
    from scipy.special import gammaln
    return math.log(TWO_PI) + gammaln(j + 1) + gammaln(k - j + 1) - gammaln(k + 2)


# ---------------------------------------------------------------------------
# Kernel, potential, measure and metric
# ---------------------------------------------------------------------------

def _weights(spec: QuantumSpectrum, t) -> np.ndarray:
    t = np.atleast_1d(np.asarray(t, dtype=float))
    j = np.arange(spec.k + 1, dtype=float)
    return j[None, :] * t[:, None] - spec.log_norms[None, :]


@dataclass(frozen=True)
class BergmanDensity:
    """Kernel, Bergman potential, measure density and metric ratio of one spectrum."""

    spectrum: QuantumSpectrum

    @property
    def k(self) -> int:
        return self.spectrum.k

    def log_trace(self, t) -> np.ndarray:
        """``log sum_j e^{j t} / n_j``."""
        return logsumexp(_weights(self.spectrum, t), axis=1)

    def log_kernel(self, t) -> np.ndarray:
        return self.log_trace(t) - self.k * fs_potential(np.atleast_1d(t))

    def kernel(self, t) -> np.ndarray:
        """``K^k`` measured in the Fubini-Study metric ``h^k``."""
        return np.exp(self.log_kernel(t))

    def potential(self, t) -> np.ndarray:
        """Relative Bergman potential ``(1/k) log K^k``."""
        return self.log_kernel(t) / self.k

    def log_m_density(self, t) -> np.ndarray:
        """``log`` of the density of ``M^k`` with respect to ``omega_FS``."""
        t = np.atleast_1d(np.asarray(t, dtype=float))
        return (math.log(TWO_PI / self.k) + self.log_trace(t)
                - self.k * np.asarray(self.spectrum.potential.phi(t), dtype=float))

    def m_density(self, t) -> np.ndarray:
        return np.exp(self.log_m_density(t))

    def variance(self, t) -> np.ndarray:
        """Variance of ``j`` under ``p_t(j) ~ e^{j t}/n_j``, from centred moments."""
        p = softmax(_weights(self.spectrum, t), axis=1)
        j = np.arange(self.k + 1, dtype=float)
        mean = p @ j
        return np.sum(p * (j[None, :] - mean[:, None]) ** 2, axis=1)

    def metric_ratio(self, t) -> np.ndarray:
        """``omega_{P^k} / omega_FS = Var_t(j) / (k phi_FS''(t))``."""
        t = np.atleast_1d(np.asarray(t, dtype=float))
        return self.variance(t) / (self.k * fs_curvature(t))

    # masses -------------------------------------------------------------

    def _points(self) -> list[float]:
        pot = self.spectrum.potential
        lo, hi = self.spectrum.window
        pts = [x for x in np.asarray(pot.breakpoints, dtype=float) if lo < x < hi]
        pts += [x for x, _ in pot.atoms() if lo < x < hi]
        return sorted(set(pts) | {0.0})

    def m_mass(self, lo: float = -math.inf, hi: float = math.inf, rtol: float = MASS_RTOL) -> float:
        """``M^k`` of ``[lo, hi]`` by adaptive quadrature (independent of the norm rule)."""
        if hi <= lo:
            return 0.0
        f = lambda t: TWO_PI * np.exp(self.log_m_density(t) + log_fs_curvature(t))
        pts = [x for x in self._points() if lo < x < hi]
        res = integrate(Integrand1D(f, lo, hi, tuple(pts)), tol=rtol, abs_tol=1e-15, limit=400000)
        return res.value

    def integrate(self, f, rtol: float = MASS_RTOL) -> float:
        """``int f dM^k`` for a bounded function ``f`` of ``t``.

        Uses the spectrum's norm rule when it has one: the density of ``M^k`` is
        a positive combination of the norm integrands that rule certifies.
        """
        rule = self.spectrum.rule
        if rule is None:
            g = lambda t: f(t) * TWO_PI * np.exp(self.log_m_density(t) + log_fs_curvature(t))
            return integrate(Integrand1D(g, -math.inf, math.inf, tuple(self._points())),
                             tol=rtol, abs_tol=1e-15, limit=400000).value
        total = []
        pot = self.spectrum.potential
        for i in range(0, rule.nodes.size, 8192):
            x = rule.nodes[i:i + 8192]
            logm = (rule.log_weights[i:i + 8192] + self.log_trace(x)
                    - self.k * np.asarray(pot.phi(x), dtype=float))
            total.append(np.asarray(f(x), dtype=float) * np.exp(logm))
        return TWO_PI * math.fsum(np.concatenate(total)) / self.k

    def metric_mass(self, rtol: float = MASS_RTOL) -> float:
        """Total mass ``2*pi int Var_t(j)/k dt`` of ``omega_{P^k}``."""
        f = lambda t: TWO_PI * self.variance(t) / self.k
        pts = tuple(self._points())
        return integrate(Integrand1D(f, -math.inf, math.inf, pts), tol=rtol, abs_tol=1e-15,
                         limit=400000).value


def bergman_density(spectrum: QuantumSpectrum) -> BergmanDensity:
    return BergmanDensity(spectrum)


def quantize(potential: ToricPotential, k: int) -> BergmanDensity:
    return BergmanDensity(hilbert_norms(potential, k))


def bergman_metric_ratio(spectrum: QuantumSpectrum, t) -> np.ndarray:
    return BergmanDensity(spectrum).metric_ratio(t)


def metric_ratio_fd(spectrum: QuantumSpectrum, t, h: float = 1e-3) -> np.ndarray:
    """Second difference of ``(1/k) log sum_j e^{j t}/n_j`` over ``phi_FS''``."""
    d = BergmanDensity(spectrum)
    t = np.atleast_1d(np.asarray(t, dtype=float))
    psi = lambda x: d.log_trace(x) / spectrum.k
    return (psi(t + h) - 2 * psi(t) + psi(t - h)) / (h * h) / fs_curvature(t)


def ma_measure(potential: ToricPotential) -> RadonMeasure1D:
    """``omega_phi`` pushed to the t-line: CDF ``2*pi * phi'``."""
    return RadonMeasure1D(
        lambda t: TWO_PI * np.asarray(potential.dphi(np.asarray(t, dtype=float)), dtype=float),
        lambda t: TWO_PI * np.asarray(potential.d2phi(np.asarray(t, dtype=float)), dtype=float),
        None, tuple(np.asarray(potential.breakpoints, dtype=float).tolist()),
        f"MA({potential.name})")


# ---------------------------------------------------------------------------
# Level sets on the t-line
# ---------------------------------------------------------------------------

def sublevel_intervals(g, level: float = 0.0, grid=None, xtol: float = 1e-10,
                       strict_ties: bool = False) -> list[tuple[float, float]]:
    """Closed intervals where ``g(t) <= level``; ends beyond the grid extend to infinity.

    Roots are isolated on the grid and refined by bisection.  With
    ``strict_ties`` a stretch of at least three consecutive grid zeros raises
    ``DegenerateLevelSet``; otherwise ties belong to the closed set.
    """
    t = default_grid(-60.0, 60.0, 12001) if grid is None else np.asarray(grid, dtype=float)
    d = np.asarray(g(t), dtype=float) - level
    zero = d == 0.0
    if strict_ties and not np.all(zero):
        run = np.convolve(zero.astype(int), np.ones(3, dtype=int), mode="valid")
        if np.any(run == 3):
            raise DegenerateLevelSet("the two potentials agree on a whole interval")
    inside = d <= 0.0
    out, start = [], (-math.inf if inside[0] else None)
    fz = lambda x: float(np.asarray(g(np.array([x])))[0]) - level
    for i in range(t.size - 1):
        if inside[i] == inside[i + 1]:
            continue
        a, b = t[i], t[i + 1]
        if d[i] == 0.0 or d[i + 1] == 0.0:
            x = a if d[i] == 0.0 else b
        else:
            x = brentq(fz, a, b, xtol=xtol, rtol=1e-15)
        if inside[i + 1]:
            start = x
        else:
            out.append((start, x))
            start = None
    if start is not None:
        out.append((start, math.inf))
    return out


def mass_on(density: BergmanDensity, intervals) -> float:
    return math.fsum(density.m_mass(a, b) for a, b in intervals)


# ---------------------------------------------------------------------------
# Checks
# ---------------------------------------------------------------------------

@dataclass
class C11Row:
    k: int
    min_ratio: float
    max_ratio: float
    sup_potential_error: float
    constant: float
    m_mass: float
    metric_mass: float


@dataclass
class C11Report:
    rows: list[C11Row]
    bounds: CurvatureBounds
    constant: float
    constant_spread: float
    potential_error_decreasing: bool
    bracket: tuple[float, float]
    k_threshold: int | None

    @property
    def stable(self) -> bool:
        return self.constant_spread <= 2.0

    @property
    def passed(self) -> bool:
        return bool(self.stable and self.potential_error_decreasing
                    and all(self.bracket[0] <= r.min_ratio and r.max_ratio <= self.bracket[1]
                            for r in self.rows))


def c11_bracket(bounds: CurvatureBounds, C: float) -> tuple[float, float]:
    """``[a^2 / (C(1 + A)), C(1 + A^2) / a]`` (one complex dimension)."""
    a, A = bounds.a, bounds.A
    return a * a / (C * (1.0 + A)), C * (1.0 + A * A) / a


def check_theorem_C11(potential: ToricPotential, bounds: CurvatureBounds, k_list,
                      grid=None, with_masses: bool = True) -> C11Report:
    """Two-sided metric bounds and potential convergence over ``k_list``.

    For each ``k`` the smallest admissible constant is
    ``C_k = max(a^2 / ((1 + A) min ratio), a max ratio / (1 + A^2))``; the
    extracted constant is the largest of these.
    """
    if not bounds.holds_for(potential, grid):
        raise ValueError(f"curvature bounds {bounds} are not certified for {potential.name}")
    t = default_grid() if grid is None else np.asarray(grid, dtype=float)
    rel = np.asarray(potential.rel(t), dtype=float)
    a, A = bounds.a, bounds.A
    rows = []
    for k in sorted(k_list):
        d = quantize(potential, k)
        r = d.metric_ratio(t)
        lo, hi = float(r.min()), float(r.max())
        err = float(np.max(np.abs(d.potential(t) - rel)))
        C_k = max(a * a / ((1.0 + A) * lo), a * hi / (1.0 + A * A))
        rows.append(C11Row(k, lo, hi, err, C_k,
                           d.m_mass() if with_masses else math.nan,
                           d.metric_mass() if with_masses else math.nan))
    Cs = [r.constant for r in rows]
    C = max(Cs)
    errs = [r.sup_potential_error for r in rows]
    decreasing = all(e2 <= e1 for e1, e2 in zip(errs, errs[1:]))
    br = c11_bracket(bounds, C)
    # smallest listed k from which a constant no larger than the final one suffices
    k_thr = None
    for i in range(len(rows)):
        if all(r.constant <= rows[-1].constant * (1 + 1e-12) for r in rows[i:]):
            k_thr = rows[i].k
            break
    return C11Report(rows, bounds, C, C / min(Cs), decreasing, br, k_thr)


def berndtsson_check(phi: ToricPotential, psi: ToricPotential, k: int,
                     grid=None, strict_ties: bool = False) -> BoundReport:
    """``int_{psi <= phi} M^k_phi <= int_{psi <= phi} M^k_psi``."""
    intervals = sublevel_intervals(lambda t: np.asarray(psi.rel(t)) - np.asarray(phi.rel(t)),
                                   0.0, grid, strict_ties=strict_ties)
    lhs = mass_on(quantize(phi, k), intervals)
    rhs = mass_on(quantize(psi, k), intervals)
    return BoundReport(f"berndtsson(k={k})", lhs, rhs, "upper",
                       {"intervals": intervals, "k": k})


def comparison_pointwise(phi: ToricPotential, psi: ToricPotential, k: int, grid=None,
                         rtol: float = 1e-9) -> BoundReport:
    """On ``{psi >= phi}``: density of ``M^k_psi`` <= density of ``M^k_{max(phi, psi)}``."""
    t = default_grid() if grid is None else np.asarray(grid, dtype=float)
    mask = np.asarray(psi.rel(t)) >= np.asarray(phi.rel(t))
    if not np.any(mask):
        return BoundReport(f"comparison_pointwise(k={k})", 0.0, 0.0, "upper", {"points": 0})
    tm = t[mask]
    lp = quantize(psi, k).log_m_density(tm)
    lm = quantize(MaxPotential(phi, psi), k).log_m_density(tm)
    worst = float(np.max(lp - lm))
    return BoundReport(f"comparison_pointwise(k={k})", worst, 0.0, "upper",
                       {"points": int(mask.sum())}, tol=rtol)


@dataclass
class EpsilonReport:
    name: str
    ks: list[int]
    eps: list[float]
    strict: bool = False

    @property
    def non_increasing(self) -> bool:
        return all(e2 <= e1 + 1e-12 for e1, e2 in zip(self.eps, self.eps[1:]))

    @property
    def decreasing(self) -> bool:
        return all(e2 < e1 for e1, e2 in zip(self.eps, self.eps[1:]))

    @property
    def passed(self) -> bool:
        return self.decreasing if self.strict else self.non_increasing

    def trend_fit(self) -> tuple[float, float]:
        """Least-squares ``(slope, intercept)`` of ``log|eps_k|`` against ``log k``."""
        e = np.abs(np.asarray(self.eps))
        ok = e > 0
        if ok.sum() < 2:
            return (math.nan, math.nan)
        s, c = np.polyfit(np.log(np.asarray(self.ks)[ok]), np.log(e[ok]), 1)
        return float(s), float(c)


def doubling_ratio(potential: ToricPotential, k: int, grid=None) -> float:
    """``min_t 2 M^{2k}_{phi/2} / M^k_phi`` on the grid."""
    t = default_grid() if grid is None else np.asarray(grid, dtype=float)
    l2 = quantize(potential.halved(), 2 * k).log_m_density(t)
    l1 = quantize(potential, k).log_m_density(t)
    return float(np.min(2.0 * np.exp(l2 - l1)))


def doubling_check(potential: ToricPotential, k_list=(10, 20, 40, 80), grid=None) -> EpsilonReport:
    ks = sorted(k_list)
    return EpsilonReport(f"doubling[{potential.name}]", ks,
                         [1.0 - doubling_ratio(potential, k, grid) for k in ks])


def lower_bound_check(potential: ToricPotential, a: float, k_list=(10, 20, 40, 80), grid=None,
                      certified: CurvatureBounds | None = None) -> EpsilonReport:
    """``eps_k = 1 - min_t (M^k density) / a``; ``a`` must be certified for the potential."""
    t = default_grid() if grid is None else np.asarray(grid, dtype=float)
    cert = certified or getattr(potential, "known_bounds", None) or potential.curvature_bounds(t)
    if a > cert.a * (1 + 1e-12):
        raise ValueError(f"a={a:g} exceeds the certified lower curvature bound {cert.a:g}")
    ks = sorted(k_list)
    eps = [1.0 - float(np.min(quantize(potential, k).m_density(t))) / a for k in ks]
    return EpsilonReport(f"lower_bound[{potential.name},a={a:g}]", ks, eps)


def tail_mass(potential: ToricPotential, c: float, k: int, grid=None) -> float:
    """``M^k`` of the sublevel set ``{rel <= c}``."""
    if grid is None and potential.window is None:
        grid = default_grid(-2000.0, 60.0, 206001)
    intervals = sublevel_intervals(potential.rel, c, grid)
    return mass_on(quantize(potential, k), intervals)
