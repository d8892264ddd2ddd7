"""Monge-Ampere energies, their quantized versions, and omega-psh envelopes on CP^1."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.optimize import minimize_scalar, root

from .errors import LevelMismatch
from .estimates import BoundReport
from .quadrature import quad
from .toric_cp1 import QuantumSpectrum, fs_log_norms, hilbert_norms, norm_rule, quantize
from .weights import (TWO_PI, PerturbedPotential, SmoothFunction, ToricPotential, default_grid,
                      fs_curvature, fs_potential, fs_slope)

ENERGY_RTOL = 1e-12


@dataclass(frozen=True)
class EnergyValue:
    """``I = (1/2) int rel (omega + omega_phi)`` with both halves kept."""

    value: float
    against_omega: float
    against_omega_phi: float


def _points(potential: ToricPotential) -> list[float]:
    pts = set(np.asarray(potential.breakpoints, dtype=float).tolist())
    pts |= {x for x, _ in potential.atoms()}
    pts.add(0.0)
    return sorted(pts)


def ma_energy(potential: ToricPotential, rtol: float = ENERGY_RTOL) -> EnergyValue:
    """Monge-Ampere energy of a bounded (or slowly diverging) relative potential.

    The ``omega_phi`` half is integrated by parts on each side of 0 so that
    only first derivatives enter and jumps of ``phi'`` need no special care:

    ``int rel dphi' = rel(0) + int_0^inf (1 - phi') rel' dt - int_{-inf}^0 phi' rel' dt``.
    """
    pts = _points(potential)
    left = [p for p in pts if p < 0]
    right = [p for p in pts if p > 0]
    kw = dict(tol=rtol, abs_tol=1e-14, limit=400000)
    a = quad(lambda t: potential.rel(t) * fs_curvature(t), -math.inf, math.inf, points=pts, **kw)
    b_right = quad(lambda t: (1.0 - potential.dphi(t)) * potential.drel(t), 0.0, math.inf,
                   points=right, **kw)
    b_left = quad(lambda t: potential.dphi(t) * potential.drel(t), -math.inf, 0.0,
                  points=left, **kw)
    rel0 = float(np.asarray(potential.rel(np.array([0.0])))[0])
    b = rel0 + b_right - b_left
    return EnergyValue(math.pi * (a + b), math.pi * a, math.pi * b)


def quantum_energy(spectrum: QuantumSpectrum, reference: QuantumSpectrum | None = None) -> float:
    """``-(2*pi/k^2) sum_j (log n_j - log n_j^ref)``; the reference defaults to Fubini-Study."""
    k = spectrum.k
    if reference is None:
        ref = fs_log_norms(k)
    else:
        if reference.k != k:
            raise LevelMismatch(f"levels differ: {k} vs {reference.k}")
        ref = reference.log_norms
    return -TWO_PI / (k * k) * math.fsum(spectrum.log_norms - ref)


# ---------------------------------------------------------------------------
# Envelopes
# ---------------------------------------------------------------------------

def discrete_envelope(t: np.ndarray, g: np.ndarray) -> np.ndarray:
    """Largest convex minorant of the samples ``(t_i, g_i)`` with slopes in [0, 1]."""
    t = np.asarray(t, dtype=float)
    g = np.asarray(g, dtype=float)
    i0 = int(np.argmin(g))
    i1 = int(np.argmin(g - t))
    i1 = max(i1, i0)
    hull = _lower_hull(t[i0:i1 + 1], g[i0:i1 + 1]) + i0
    out = np.interp(t, t[hull], g[hull])
    out[:i0] = g[i0]
    out[i1 + 1:] = g[i1] + (t[i1 + 1:] - t[i1])
    return out


def _lower_hull(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    hull: list[int] = []
    for i in range(x.size):
        while len(hull) >= 2:
            a, b = hull[-2], hull[-1]
            # drop b if it lies on or above the chord from a to i
            if (y[b] - y[a]) * (x[i] - x[a]) >= (y[i] - y[a]) * (x[b] - x[a]):
                hull.pop()
            else:
                break
        hull.append(i)
    return np.asarray(hull, dtype=int)


def legendre_biconjugate(t: np.ndarray, g: np.ndarray, m: int = 2000) -> np.ndarray:
    """``sup_p (p t - g*(p))`` over the slope grid ``{0, 1/m, ..., 1}``."""
    t = np.asarray(t, dtype=float)
    p = np.linspace(0.0, 1.0, m + 1)
    gstar = np.max(p[:, None] * t[None, :] - np.asarray(g)[None, :], axis=1)
    out = np.empty_like(t)
    for i in range(0, t.size, 512):
        out[i:i + 512] = np.max(p[None, :] * t[i:i + 512, None] - gstar[None, :], axis=1)
    return out


class EnvelopePotential(ToricPotential):
    """The envelope of ``G``: ``G`` on the contact set, bitangent chords on the gaps,
    the constant ``min G`` to the left and slope 1 to the right."""

    def __init__(self, G, dG, d2G, rel_fn, gaps, left, right, grid, name="envelope"):
        self._G, self._dG, self._d2G, self._rel = G, dG, d2G, rel_fn
        self.gaps = gaps            # list of (t1, t2, G(t1), slope)
        self.left = left            # (tl, G(tl)) or None
        self.right = right          # (tr, G(tr)) or None
        self.grid = grid
        self.window = (float(grid[0]), float(grid[-1]))
        self.name = name

    def phi(self, t):
        t = np.asarray(t, dtype=float)
        return self._patch(t, self._G(t), lambda t1, v1, s, x: v1 + s * (x - t1),
                           lambda tl, vl, x: np.full_like(x, vl),
                           lambda tr, vr, x: vr + (x - tr))

    def rel(self, t):
        t = np.asarray(t, dtype=float)
        out = np.asarray(self._rel(t), dtype=float)
        return self._patch(t, out, lambda t1, v1, s, x: v1 + s * (x - t1) - fs_potential(x),
                           lambda tl, vl, x: vl - fs_potential(x),
                           lambda tr, vr, x: vr - tr - fs_potential(-x))

    def dphi(self, t):
        t = np.asarray(t, dtype=float)
        out = np.asarray(self._dG(t), dtype=float)
        return self._patch(t, out, lambda t1, v1, s, x: np.full_like(x, s),
                           lambda tl, vl, x: np.zeros_like(x),
                           lambda tr, vr, x: np.ones_like(x))

    def d2phi(self, t):
        t = np.asarray(t, dtype=float)
        out = np.asarray(self._d2G(t), dtype=float)
        z = lambda *args: np.zeros_like(args[-1])
        return self._patch(t, out, z, z, z)

    def _patch(self, t, out, gap_fn, left_fn, right_fn):
        scalar = np.ndim(t) == 0
        t = np.atleast_1d(t)
        out = np.array(np.broadcast_to(out, t.shape), dtype=float)
        for t1, t2, v1, s in self.gaps:
            m = (t >= t1) & (t < t2)
            if np.any(m):
                out[m] = gap_fn(t1, v1, s, t[m])
        if self.left is not None:
            m = t < self.left[0]
            if np.any(m):
                out[m] = left_fn(*self.left, t[m])
        if self.right is not None:
            m = t >= self.right[0]
            if np.any(m):
                out[m] = right_fn(*self.right, t[m])
        return float(out[0]) if scalar else out

    @property
    def breakpoints(self):
        pts = [x for g in self.gaps for x in g[:2]]
        if self.left is not None:
            pts.append(self.left[0])
        if self.right is not None:
            pts.append(self.right[0])
        return np.unique(np.asarray(pts, dtype=float))

    def contact_set_mask(self, t) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        m = np.ones(t.shape, dtype=bool)
        for t1, t2, _, _ in self.gaps:
            m &= ~((t > t1) & (t < t2))
        if self.left is not None:
            m &= ~(t < self.left[0])
        if self.right is not None:
            m &= ~(t > self.right[0])
        return m


def _target(chi, base: ToricPotential | None):
    """``(G, G', G'', rel)`` for ``G = base + chi`` (``base`` defaults to Fubini-Study)."""
    if isinstance(chi, ToricPotential):
        p = chi
        return p.phi, p.dphi, p.d2phi, p.rel, p.name
    f = chi if isinstance(chi, SmoothFunction) else SmoothFunction(chi, None, None, "chi")
    if base is None:
        return (lambda t: fs_potential(t) + f(t), lambda t: fs_slope(t) + f.df(t),
                lambda t: fs_curvature(t) + f.d2f(t), lambda t: f(t), f"P({f.name})")
    return (lambda t: base.phi(t) + f(t), lambda t: base.dphi(t) + f.df(t),
            lambda t: base.d2phi(t) + f.d2f(t), lambda t: base.rel(t) + f(t),
            f"P({base.name}+{f.name})")


def envelope(chi, grid=None, base: ToricPotential | None = None,
             gap_tol: float = 1e-13) -> EnvelopePotential:
    """Largest omega-psh minorant of ``base + chi``: convex, slopes in [0, 1].

    ``chi`` is a relative function (``SmoothFunction`` with derivatives) or a
    ``ToricPotential`` giving the total target directly.  The discrete
    slope-clamped convex hull on ``grid`` locates contact set and gaps; each
    gap is then replaced by the exact bitangent of the continuous target.
    """
    G, dG, d2G, rel_fn, name = _target(chi, base)
    t = default_grid() if grid is None else np.asarray(grid, dtype=float)
    g = np.asarray(G(t), dtype=float)
    i0 = int(np.argmin(g))
    i1 = max(int(np.argmin(g - t)), i0)
    left = right = None
    if i0 > 0:
        tl = _refine_min(G, t, i0)
        left = (tl, float(G(np.array([tl]))[0]))
    if i1 < t.size - 1:
        tr = _refine_min(lambda x: G(x) - x, t, i1)
        right = (tr, float(G(np.array([tr]))[0]))
    hull = _lower_hull(t[i0:i1 + 1], g[i0:i1 + 1]) + i0
    gaps = []
    for a, b in zip(hull[:-1], hull[1:]):
        if b - a < 2:
            continue
        chord = g[a] + (g[b] - g[a]) * (t[a + 1:b] - t[a]) / (t[b] - t[a])
        if np.max(g[a + 1:b] - chord) <= gap_tol * (1.0 + np.max(np.abs(g[a:b + 1]))):
            continue
        gaps.append(_bitangent(G, dG, t, a, b))
    return EnvelopePotential(G, dG, d2G, rel_fn, gaps, left, right, t, name)


def _refine_min(f, t, i) -> float:
    lo, hi = t[max(i - 1, 0)], t[min(i + 1, t.size - 1)]
    res = minimize_scalar(lambda x: float(np.asarray(f(np.array([x])))[0]), bounds=(lo, hi),
                          method="bounded", options={"xatol": 1e-12})
    return float(res.x)


def _bitangent(G, dG, t, a, b):
    """Solve ``G'(t1) = G'(t2) = (G(t2) - G(t1)) / (t2 - t1)`` near grid vertices ``a``, ``b``."""
    g1 = lambda x: float(np.asarray(G(np.array([x])))[0])
    d1 = lambda x: float(np.asarray(dG(np.array([x])))[0])

    def eqs(x):
        t1, t2 = x
        s = (g1(t2) - g1(t1)) / (t2 - t1)
        return [d1(t1) - s, d1(t2) - s]

    sol = root(eqs, [t[a], t[b]], method="hybr", options={"xtol": 1e-14})
    t1, t2 = (float(v) for v in sol.x)
    # hybr may report stalled progress at a root it has already resolved
    solved = sol.success or max(abs(r) for r in eqs(sol.x)) <= 1e-12
    if not (solved and t[max(a - 1, 0)] <= t1 <= t[a + 1] and t[b - 1] <= t2 <= t[min(b + 1, t.size - 1)]):
        # fall back to the discrete chord when the tangency is not resolved
        t1, t2 = float(t[a]), float(t[b])
    v1 = g1(t1)
    return (t1, t2, v1, (g1(t2) - v1) / (t2 - t1))


# ---------------------------------------------------------------------------
# Identities and convergence
# ---------------------------------------------------------------------------

def _richardson(F, h1: float = 1e-3, h2: float = 1e-4) -> float:
    d1 = (F(h1) - F(-h1)) / (2 * h1)
    d2 = (F(h2) - F(-h2)) / (2 * h2)
    r = (h1 / h2) ** 2
    return (r * d2 - d1) / (r - 1)


def integrate_against_ma(potential: ToricPotential, f) -> float:
    """``int f omega_phi`` (absolutely continuous part plus jumps of ``phi'``)."""
    pts = _points(potential)
    ac = quad(lambda t: f(t) * TWO_PI * potential.d2phi(t), -math.inf, math.inf, tol=1e-12,
              abs_tol=1e-14, points=pts, limit=400000)
    jumps = sum(TWO_PI * j * float(f(np.array([x]))[0]) for x, j in potential.atoms())
    return ac + jumps


def derivative_identity_check(potential: ToricPotential, f: SmoothFunction, k: int,
                              rtol: float = 1e-6) -> tuple[BoundReport, BoundReport]:
    """First variations of ``I_k`` and of ``I o P`` against ``M^k_phi`` and ``omega_phi``."""
    rule = norm_rule(potential, k)
    Ik = lambda e: quantum_energy(hilbert_norms(PerturbedPotential(potential, f, e), k, rule))
    lhs_q = _richardson(Ik)
    rhs_q = quantize(potential, k).integrate(f)
    I = lambda e: ma_energy(envelope(f * e, base=potential)).value
    lhs_c = _richardson(I)
    rhs_c = integrate_against_ma(potential, f)
    scale = lambda r: max(abs(r), 1e-12)
    q = BoundReport(f"dI_k(k={k},{f.name})", abs(lhs_q - rhs_q) / scale(rhs_q), rtol, "upper",
                    {"fd": lhs_q, "integral": rhs_q}, tol=0.0)
    c = BoundReport(f"dI({f.name})", abs(lhs_c - rhs_c) / scale(rhs_c), rtol, "upper",
                    {"fd": lhs_c, "integral": rhs_c}, tol=0.0)
    return q, c


def concavity_check(potential: ToricPotential, f: SmoothFunction, k: int,
                    samples=(-0.2, -0.1, 0.0, 0.1, 0.2), h: float = 0.05,
                    tol: float = 1e-9) -> BoundReport:
    """Largest second difference of ``s -> I_k(H^k_{phi + s f})`` at the sample points."""
    rule = norm_rule(potential, k)
    Ik = lambda e: quantum_energy(hilbert_norms(PerturbedPotential(potential, f, e), k, rule))
    worst = max(Ik(s + h) - 2 * Ik(s) + Ik(s - h) for s in samples)
    return BoundReport(f"concavity(k={k},{f.name})", worst, tol, "upper", {"h": h}, tol=0.0)


@dataclass
class ConvergenceReport:
    name: str
    ks: list[int]
    quantum: list[float]
    classical: float
    sandwich: list[bool]

    @property
    def gaps(self) -> list[float]:
        return [abs(q - self.classical) for q in self.quantum]

    @property
    def trend_ok(self) -> bool:
        g = self.gaps[-3:]
        return all(b < a for a, b in zip(g, g[1:]))

    @property
    def passed(self) -> bool:
        return self.trend_ok and all(self.sandwich)


def perturbed_convergence_check(potential: ToricPotential, f: SmoothFunction | None,
                                k_list: Sequence[int]) -> ConvergenceReport:
    """``I_k(H^k_{phi + f})`` against ``I(P(phi + f))`` over ``k_list``.

    Also checks ``I_k(H^k_{P(phi + f)}) <= I_k(H^k_{phi + f})`` at every level.
    """
    if f is None:
        target, env = potential, potential
    else:
        target = PerturbedPotential(potential, f, 1.0)
        env = envelope(f, base=potential)
    classical = ma_energy(env).value
    qs, sand = [], []
    for k in sorted(k_list):
        q = quantum_energy(hilbert_norms(target, k))
        qs.append(q)
        sand.append(quantum_energy(hilbert_norms(env, k)) <= q + 1e-12 * max(1.0, abs(q)))
    return ConvergenceReport(target.name, sorted(k_list), qs, classical, sand)
