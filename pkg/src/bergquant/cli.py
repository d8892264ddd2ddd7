"""Command-line runner: one subcommand per check, CSV rows plus a JSON summary.

Every subcommand writes ``<out-dir>/<subcommand>.csv`` with the columns in
``COLUMNS`` and ``<out-dir>/<subcommand>.json``.  Exit status is 0 when every
asserted row passes, 1 when one fails (or, under ``--strict``, when a trend
warning is raised), and 2 on configuration or convergence errors.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Callable

import numpy as np

from . import bergman_local as bl
from . import energy as en
from . import estimates as es
from . import measure_quant as mq
from . import toric_cp1 as tc
from .errors import BergquantError, ConfigInvalid
from .measures import measure_from_config
from .weights import (FS, T_MAX, T_MIN, TWO_PI, PlanarWeight, RadialWeight, ReinhardtDomain,
                      default_grid, domain_from_config, function_from_config,
                      potential_from_config, random_mixture, random_radial_weight,
                      weight_from_config)


def rounding_floor(k: int) -> float:
    """Absolute error floor of ratios built from exponents of size ``k |t|`` on the default grid."""
    return 16.0 * np.finfo(float).eps * k * max(abs(T_MIN), abs(T_MAX))


COLUMNS = ("subcommand", "case", "check", "k", "value", "bound", "direction", "status")
PASS, FAIL, WARN, INFO = "pass", "fail", "warn", "info"


@dataclass(frozen=True)
class Row:
    case: str
    check: str
    k: int | None
    value: float
    bound: float = math.nan
    direction: str = ""
    status: str = INFO


def _ok(flag: bool) -> str:
    return PASS if flag else FAIL


def from_report(case: str, r: es.BoundReport, k: int | None = None) -> Row:
    return Row(case, r.name, k, float(r.value), float(r.bound), r.direction, _ok(r.passed))


def upper(case, check, value, bound, k=None, warn_only=False) -> Row:
    ok = value <= bound
    return Row(case, check, k, float(value), float(bound), "upper",
               PASS if ok else (WARN if warn_only else FAIL))


def lower(case, check, value, bound, k=None, warn_only=False) -> Row:
    ok = value >= bound
    return Row(case, check, k, float(value), float(bound), "lower",
               PASS if ok else (WARN if warn_only else FAIL))


def info(case, check, value, k=None) -> Row:
    return Row(case, check, k, float(value))


@dataclass
class Context:
    seed: int = 0
    threads: int = 1

    def map(self, fn: Callable, items) -> list:
        items = list(items)
        if self.threads <= 1 or len(items) < 2:
            return [fn(x) for x in items]
        with ThreadPoolExecutor(max_workers=self.threads) as ex:
            return list(ex.map(fn, items))


def _points(raw, n: int) -> list[np.ndarray]:
    """Points as lists of coordinates; a coordinate is a number or ``[re, im]``."""
    out = []
    for p in raw:
        p = p if isinstance(p, list) else [p]
        z = [complex(c[0], c[1]) if isinstance(c, list) else complex(c) for c in p]
        if len(z) != n:
            raise ConfigInvalid(f"point {p} does not have {n} coordinates")
        out.append(np.array(z, dtype=complex))
    return out


def _flatten(rows) -> list[Row]:
    out = []
    for r in rows:
        out.extend(r)
    return out


# ---------------------------------------------------------------------------
# Local kernels and estimates
# ---------------------------------------------------------------------------

def cmd_local_kernel(cfg: dict, ctx: Context) -> list[Row]:
    domain = domain_from_config(cfg["domain"])
    weight = weight_from_config(cfg["weight"], domain)
    n = domain.n
    v = np.asarray(cfg["direction"], dtype=complex)
    v = v / np.linalg.norm(v)
    pts = _points(cfg["points"], n)
    rng = np.random.default_rng(ctx.seed)
    fd = []
    for _ in range(int(cfg["fd_points"])):
        z = rng.normal(size=n) + 1j * rng.normal(size=n)
        z *= rng.uniform(0, cfg["fd_radius"]) / np.linalg.norm(z)
        fd.append(z)
    zero_disk = (cfg["weight"].get("kind") == "zero" and domain.kind == "polydisk"
                 and n == 1 and domain.radii[0] == 1.0)

    def one(item):
        i, z, closed = item
        case = f"z{i}"
        b = bl.converged_basis(domain, weight, z, rtol=cfg["rtol"], v=v)
        kv = bl.kernel_value(b, z, v)
        fdv = bl.log_kernel_hessian_fd(b, z, v)
        rows = [info(case, "K", kv.K), info(case, "K_tilde", kv.K_tilde), info(case, "B2", kv.B2),
                info(case, "degree", kv.degree),
                upper(case, "B2_vs_fd_hessian_rel", abs(kv.B2 - fdv) / kv.B2, 1e-3)]
        half = bl.basis(domain, weight, b.degree // 2)
        rows.append(lower(case, "K_monotone_in_degree", kv.K - bl.kernel_diag(half, z), 0.0))
        if closed:
            s = float(np.sum(np.abs(z) ** 2))
            rows.append(upper(case, "K_closed_form_rel",
                              abs(kv.K * math.pi * (1 - s) ** 2 - 1.0), 1e-8))
            rows.append(upper(case, "B2_closed_form_rel", abs(kv.B2 * (1 - s) ** 2 / 2 - 1.0), 1e-8))
        if np.all(z == 0):
            # a sub-polydisk centred at z has the larger kernel
            sub = ReinhardtDomain(domain.kind, tuple(0.5 * r for r in domain.radii), n)
            wsub = weight if isinstance(weight, PlanarWeight) else RadialWeight(
                weight.profiles, tuple(0.5 * r for r in weight.radii), weight.kind)
            bs = bl.converged_basis(sub, wsub, z, rtol=cfg["rtol"])
            rows.append(lower(case, "domain_monotonicity", bl.kernel_diag(bs, z) - kv.K, 0.0))
        return rows

    items = [(i, z, zero_disk) for i, z in enumerate(pts)]
    items += [(len(pts) + i, z, zero_disk) for i, z in enumerate(fd)]
    return _flatten(ctx.map(one, items))


def cmd_demailly(cfg: dict, ctx: Context) -> list[Row]:
    a = float(cfg["a"])
    domain = ReinhardtDomain.unit_disk()
    weight = RadialWeight.gaussian(a)
    pts = [complex(r) for r in cfg["radii"]]
    rep = bl.demailly_convergence(domain, weight, cfg["k_list"], pts, h=cfg["h"])
    case = f"a={a:g}"
    rows = []
    C = rep.fitted_constant
    lap0 = rep.rows[0].laplacian_sup
    for i, r in enumerate(rep.rows):
        rows.append(info(case, "sup_error", r.sup_error, r.k))
        rows.append(upper(case, "rate_bound", r.sup_error, C * math.log(r.k) / r.k * (1 + 1e-12), r.k))
        rows.append(upper(case, "laplacian_sup", r.laplacian_sup, lap0 * (1 + 1e-9), r.k))
        if i:
            rows.append(upper(case, "sup_error_non_increasing", r.sup_error,
                              rep.rows[i - 1].sup_error, r.k))
        exact = math.log(r.k * a / (math.pi * -math.expm1(-r.k * a))) / r.k
        u0 = bl.demailly_approx(domain, weight, r.k, np.zeros(1))
        rows.append(upper(case, "u_k(0)_closed_form_abs", abs(u0 - exact), 1e-10, r.k))
    rows.append(info(case, "fitted_rate_constant", C))
    return rows


def cmd_ot_check(cfg: dict, ctx: Context) -> list[Row]:
    def one(am):
        a, m = am
        r = es.ot_tightness(a, m)
        case = f"a={a:g},m={m}"
        return [info(case, "kernel_times_constant", r.value),
                upper(case, "abs_error", r.details["abs_error"], cfg["tol"])]
    return _flatten(ctx.map(one, [(float(a), int(m)) for a in cfg["a_list"] for m in cfg["m_list"]]))


def cmd_polydisk(cfg: dict, ctx: Context) -> list[Row]:
    def one(na):
        n, a = na
        case = f"n={n},a={a:g}"
        dom = ReinhardtDomain.polydisk(1.0, n)
        w = RadialWeight.gaussian(a, n)
        z = np.zeros(n)
        v = np.eye(n)[0]
        b = bl.converged_basis(dom, w, z, rtol=1e-10, v=v)
        K, Kt = bl.kernel_diag(b, z), bl.tilde_kernel(b, z, v)
        K_ex, Kt_ex = es.polydisk_gaussian_exact(n, a)
        lbK, lbKt = es.polydisk_lower_bounds(n, a)
        return [info(case, "K", K), info(case, "K_tilde", Kt),
                upper(case, "K_exact_rel", abs(K / K_ex - 1), cfg["tol"]),
                upper(case, "K_tilde_exact_rel", abs(Kt / Kt_ex - 1), cfg["tol"]),
                lower(case, "K_lower_bound", K, lbK * (1 - cfg["tol"])),
                lower(case, "K_tilde_lower_bound", Kt, lbKt * (1 - cfg["tol"]))]
    return _flatten(ctx.map(one, [(int(n), float(a)) for n in cfg["n_list"] for a in cfg["a_list"]]))


def cmd_bb_check(cfg: dict, ctx: Context) -> list[Row]:
    disk = ReinhardtDomain.unit_disk()
    weights = [(f"radial_seed{ctx.seed + i}", random_radial_weight(np.random.default_rng(ctx.seed + i)))
               for i in range(int(cfg["radial"]))]
    weights += [(f"planar{i}", weight_from_config(dict(p, kind="planar"), disk))
                for i, p in enumerate(cfg["planar"])]
    r = float(cfg["r"])
    z = np.zeros(1)

    def one(item):
        name, w = item
        b = bl.converged_basis(disk, w, z, rtol=1e-10, v=np.ones(1))
        K = bl.kernel_diag(b, z)
        Kt = bl.tilde_kernel(b, z, np.ones(1))
        B = es.bb_upper_bound(w, r)
        Bt = es.bb_tilde_upper_bound(w, r)
        return [Row(name, "bb_upper_bound", None, K, B, "upper", _ok(B - K >= -cfg["slack"])),
                Row(name, "bb_tilde_upper_bound", None, Kt, Bt, "upper",
                    _ok(Bt - Kt >= -cfg["slack"]))]
    return _flatten(ctx.map(one, weights))


def cmd_lemma_sphere(cfg: dict, ctx: Context) -> list[Row]:
    rows = []
    for n in cfg["n_list"]:
        exact = es.sphere_log_constant(n)
        case = f"n={n}"
        if n == 1:
            rows.append(upper(case, "C_1_minus_1", abs(exact - 1.0), 0.0))
            continue
        mc, se = es.sphere_log_constant_mc(n, int(cfg["mc_samples"]), ctx.seed)
        rows.append(info(case, "C_n_exact", exact))
        rows.append(info(case, "C_n_monte_carlo", mc))
        rows.append(upper(case, "C_n_abs_error", abs(mc - exact), cfg["constant_tol"]))
    n = int(cfg["n"])

    def one(i):
        f = es.Polynomial.random(np.random.default_rng(ctx.seed + i), n, int(cfg["degree"]))
        r = es.check_lemma_sphere_mean(f, cfg["rho"], int(cfg["samples"]), ctx.seed + i,
                                       cfg["z_sigma"])
        return [from_report(f"poly{i}", r)]
    rows += _flatten(ctx.map(one, range(int(cfg["polynomials"]))))
    return rows


def cmd_mt_check(cfg: dict, ctx: Context) -> list[Row]:
    disk = ReinhardtDomain.unit_disk()

    def one(a):
        return es.mt_case(disk, RadialWeight.gaussian(a), name=f"gaussian(a={a:g})")
    cases = ctx.map(one, [float(a) for a in cfg["a_list"]])
    rep = es.check_theorem_mt(cases)
    rows = []
    for c in cases:
        for key, val in sorted(c.ratios().items()):
            rows.append(info(c.name, f"ratio_{key}", val))
    for key in es.MT_NAMES:
        if key in rep.constants:
            rows.append(info("family", f"constant_{key}", rep.constants[key]))
            rows.append(upper("family", f"spread_{key}", rep.spread[key], cfg["max_spread"],
                              warn_only=True))
    return rows


# ---------------------------------------------------------------------------
# CP^1
# ---------------------------------------------------------------------------

def _potentials(specs) -> list:
    return [potential_from_config(s) for s in specs]


def cmd_cp1_exact(cfg: dict, ctx: Context) -> list[Row]:
    t = default_grid()
    pots = _potentials(cfg["potentials"])

    def one(item):
        p, k = item
        d = tc.quantize(p, k)
        rows = [upper(p.name, "m_mass_rel", abs(d.m_mass() / (TWO_PI * (k + 1) / k) - 1), cfg["tol"], k),
                upper(p.name, "metric_mass_rel", abs(d.metric_mass() / TWO_PI - 1), cfg["tol"], k)]
        if p is FS:
            err = float(np.max(np.abs(d.kernel(t) * TWO_PI / (k + 1) - 1)))
            rows.append(upper(p.name, "kernel_constant_rel", err, cfg["kernel_tol"], k))
        return rows
    return _flatten(ctx.map(one, [(p, int(k)) for p in pots for k in cfg["k_list"]]))


def cmd_cp1_c11(cfg: dict, ctx: Context) -> list[Row]:
    p = potential_from_config(cfg["potential"])
    t = default_grid()
    bounds = getattr(p, "known_bounds", None) or p.curvature_bounds(t)
    rep = tc.check_theorem_C11(p, bounds, cfg["k_list"])
    lo, hi = rep.bracket
    case = p.name
    rows = [info(case, "a", bounds.a), info(case, "A", bounds.A)]
    for r in rep.rows:
        rows += [info(case, "min_ratio", r.min_ratio, r.k), info(case, "max_ratio", r.max_ratio, r.k),
                 lower(case, "bracket_lower", r.min_ratio, lo, r.k),
                 upper(case, "bracket_upper", r.max_ratio, hi, r.k),
                 info(case, "C_k", r.constant, r.k),
                 info(case, "sup_potential_error", r.sup_potential_error, r.k),
                 upper(case, "m_mass_rel", abs(r.m_mass / (TWO_PI * (r.k + 1) / r.k) - 1), 1e-8, r.k),
                 upper(case, "metric_mass_rel", abs(r.metric_mass / TWO_PI - 1), 1e-8, r.k)]
    rows.append(info(case, "constant", rep.constant))
    rows.append(upper(case, "constant_spread", rep.constant_spread, cfg["max_spread"]))
    rows.append(Row(case, "potential_error_decreasing", None, float(rep.potential_error_decreasing),
                    1.0, "lower", _ok(rep.potential_error_decreasing)))
    return rows


def cmd_berndtsson(cfg: dict, ctx: Context) -> list[Row]:
    pairs = []
    for i in range(int(cfg["pairs"])):
        rng = np.random.default_rng(ctx.seed + i)
        pairs.append((i, random_mixture(rng), random_mixture(rng)))

    def one(item):
        (i, phi, psi), k = item
        case = f"pair{i}"
        r = tc.berndtsson_check(phi, psi, k)
        c = tc.comparison_pointwise(phi, psi, k)
        return [Row(case, "berndtsson", k, r.value, r.bound, "upper", _ok(r.slack >= -cfg["slack"])),
                from_report(case, c, k)]
    return _flatten(ctx.map(one, [(p, int(k)) for p in pairs for k in cfg["k_list"]]))


def _epsilon_rows(rep: tc.EpsilonReport, case: str, label: str) -> list[Row]:
    rows = [info(case, label, e, k) for k, e in zip(rep.ks, rep.eps)]
    for i in range(1, len(rep.eps)):
        rows.append(upper(case, f"{label}_non_increasing", rep.eps[i], rep.eps[i - 1] + 1e-12,
                          rep.ks[i]))
    return rows


def cmd_doubling(cfg: dict, ctx: Context) -> list[Row]:
    ks = [int(k) for k in cfg["k_list"]]

    def one(p):
        rep = tc.doubling_check(p, ks)
        rows = _epsilon_rows(rep, p.name, "eps")
        if p is FS:
            for k, e in zip(rep.ks, rep.eps):
                rows.append(upper(p.name, "closed_form_ratio_abs",
                                  abs((1 - e) - (2 * k + 1) / (k + 1)), rounding_floor(k), k))
        return rows
    return _flatten(ctx.map(one, _potentials(cfg["potentials"])))


def cmd_lower_bound(cfg: dict, ctx: Context) -> list[Row]:
    ks = [int(k) for k in cfg["k_list"]]
    t = default_grid()

    def one(p):
        a = (getattr(p, "known_bounds", None) or p.curvature_bounds(t)).a
        rep = tc.lower_bound_check(p, a, ks)
        rows = [info(p.name, "a", a)] + _epsilon_rows(rep, p.name, "eps")
        if p is FS:
            for k, e in zip(rep.ks, rep.eps):
                rows.append(upper(p.name, "closed_form_eps_abs", abs(e + 1.0 / k), rounding_floor(k), k))
        return rows
    return _flatten(ctx.map(one, _potentials(cfg["potentials"])))


def cmd_tail_mass(cfg: dict, ctx: Context) -> list[Row]:
    p = potential_from_config(cfg["potential"])
    c = float(cfg["c"])

    def one(k):
        m = tc.tail_mass(p, c, k)
        total = TWO_PI * (k + 1) / k
        return [info(p.name, f"tail_mass(c={c:g})", m, k),
                Row(p.name, "tail_mass_in_range", k, m, total, "upper",
                    _ok(-1e-12 <= m <= total * (1 + 1e-12)))]
    return _flatten(ctx.map(one, [int(k) for k in cfg["k_list"]]))


# ---------------------------------------------------------------------------
# Energy and measures
# ---------------------------------------------------------------------------

def cmd_energy(cfg: dict, ctx: Context) -> list[Row]:
    ks = [int(k) for k in cfg["k_list"]]
    rows = []
    c = float(cfg["shift"])
    for k in cfg["shift_k"]:
        Ik = en.quantum_energy(tc.hilbert_norms(FS.shifted(c), int(k)))
        rows.append(upper(f"shift(c={c:g})", "I_k_closed_form_abs",
                          abs(Ik - TWO_PI * c * (k + 1) / k), 1e-10, int(k)))
    rows.append(upper(f"shift(c={c:g})", "I_closed_form_abs",
                      abs(en.ma_energy(FS.shifted(c)).value - TWO_PI * c), 1e-10))

    def one(item):
        i, spec = item
        p = potential_from_config(spec["potential"])
        f = function_from_config(spec["f"])
        case = f"case{i}:{p.name}+{f.name}"
        out = []
        conv = en.perturbed_convergence_check(p, f, ks)
        for k, q, g, s in zip(conv.ks, conv.quantum, conv.gaps, conv.sandwich):
            out += [info(case, "I_k", q, k), info(case, "gap", g, k),
                    Row(case, "sandwich", k, float(s), 1.0, "lower", _ok(s))]
        out.append(info(case, "I_envelope", conv.classical))
        g = conv.gaps
        for j in range(max(1, len(g) - 2), len(g)):
            out.append(upper(case, "gap_decreasing_last_three", g[j], g[j - 1], conv.ks[j]))
        q, cl = en.derivative_identity_check(p, f, int(cfg["k_identity"]), cfg["identity_rtol"])
        out += [from_report(case, q, int(cfg["k_identity"])), from_report(case, cl)]
        cc = en.concavity_check(p, f, int(cfg["k_identity"]), tol=cfg["concavity_tol"])
        out.append(from_report(case, cc, int(cfg["k_identity"])))
        return out
    rows += _flatten(ctx.map(one, list(enumerate(cfg["cases"]))))
    return rows


def cmd_measure_quantize(cfg: dict, ctx: Context) -> list[Row]:
    ks = [int(k) for k in cfg["k_list"]]
    specs = list(cfg["measures"])
    specs += [{"kind": "random", "seed": ctx.seed + i} for i in range(int(cfg["round_trip_seeds"]))]
    n_weak = len(cfg["measures"])

    def one(item):
        i, spec = item
        nu = measure_from_config(spec)
        case = f"m{i}:{nu.name}"
        if i >= n_weak:
            pot = mq.solve_calabi_yau(nu)
            return [upper(case, "round_trip", mq.round_trip_error(nu, pot), cfg["round_trip_tol"]),
                    info(case, "interpolation_error", mq.interpolation_error(nu, pot)),
                    upper(case, "normalization_abs", abs(mq.normalization(pot)), 1e-8)]
        rep = mq.weak_convergence_report(nu, None, ks, cfg["threshold"])
        out = [upper(case, "round_trip", rep.round_trip, cfg["round_trip_tol"]),
               info(case, "interpolation_error", rep.interpolation)]
        E = rep.errors
        for fi, name in enumerate(rep.names):
            for kj, k in enumerate(rep.ks):
                out.append(info(case, f"error[{name}]", E[fi, kj], k))
            out.append(Row(case, f"last_is_min[{name}]", rep.ks[-1], float(E[fi, -1]),
                           float(min(E[fi].min() + mq.NOISE_FLOOR, rep.threshold)), "upper",
                           _ok(rep.row_passed(fi))))
        for kj, k in enumerate(rep.ks):
            out.append(upper(case, "constant_error_minus_2pi/k", abs(E[0, kj] - TWO_PI / k), 1e-9, k))
        return out
    return _flatten(ctx.map(one, list(enumerate(specs))))


# ---------------------------------------------------------------------------
# Configuration
# ---------------------------------------------------------------------------

_RANDOM5 = [{"kind": "fs"}, {"kind": "test", "s": 0.5, "c": 1.0},
            {"kind": "random", "seed": 1}, {"kind": "random", "seed": 2},
            {"kind": "random", "seed": 3}]

DEFAULTS: dict[str, dict] = {
    "local-kernel": {"domain": {"kind": "polydisk", "n": 1}, "weight": {"kind": "zero"},
                     "points": [0.0, 0.5], "direction": [1.0], "fd_points": 25,
                     "fd_radius": 0.7, "rtol": 1e-10},
    "demailly": {"a": 1.0, "k_list": [8, 16, 32, 64, 128],
                 "radii": [0.0, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8], "h": 1e-2},
    "ot-check": {"a_list": [0.0, 0.5, 1.0, 2.0, 5.0], "m_list": [0, 1, 2, 3], "tol": 1e-8},
    "polydisk": {"n_list": [1, 2, 3], "a_list": [0.5, 1.0, 2.0], "tol": 1e-6},
    "bb-check": {"radial": 20, "r": 1.0, "slack": 1e-9,
                 "planar": [{"form": "real_part", "c": 1.0}, {"form": "exp_real", "c": 1.0},
                            {"form": "gaussian_plus_harmonic", "a": 1.0, "eps": 0.3},
                            {"form": "real_part", "c": -2.0},
                            {"form": "gaussian_plus_harmonic", "a": 2.0, "eps": 0.5, "power": 3}]},
    "lemma-sphere": {"n_list": [1, 2, 3], "mc_samples": 1_000_000, "constant_tol": 1e-2,
                     "polynomials": 50, "n": 2, "degree": 3, "rho": 0.5, "samples": 20000,
                     "z_sigma": 4.0},
    "mt-check": {"a_list": [0.5, 1.0, 2.0], "max_spread": 2.0},
    "cp1-exact": {"potentials": _RANDOM5, "k_list": [1, 5, 50, 500], "tol": 1e-8,
                  "kernel_tol": 1e-9},
    "cp1-c11": {"potential": {"kind": "test", "s": 0.5, "c": 1.0}, "k_list": [25, 50, 100, 200],
                "max_spread": 2.0},
    "berndtsson": {"pairs": 10, "k_list": [20, 60, 120], "slack": 1e-9},
    "doubling": {"potentials": _RANDOM5, "k_list": [10, 20, 40, 80]},
    "lower-bound": {"potentials": _RANDOM5, "k_list": [10, 20, 40, 80]},
    "tail-mass": {"potential": {"kind": "logtail", "scale": 1.0}, "c": -5.0,
                  "k_list": [10, 20, 40, 80]},
    "energy": {"cases": [
        {"potential": {"kind": "fs"}, "f": {"kind": "bump", "height": -1.2, "center": 0.0, "width": 0.5}},
        {"potential": {"kind": "test", "s": 0.5, "c": 1.0}, "f": {"kind": "tanh"}},
        {"potential": {"kind": "test", "s": 0.5, "c": 1.0}, "f": {"kind": "lorentzian", "scale": -1.0}},
        {"potential": {"kind": "random", "seed": 1}, "f": {"kind": "sigmoid", "rate": 3.0}},
        {"potential": {"kind": "random", "seed": 2}, "f": {"kind": "tanh", "shift": 2.0, "scale": -0.3}}],
        "k_list": [10, 20, 40, 80, 160], "k_identity": 50, "identity_rtol": 1e-6,
        "concavity_tol": 1e-9, "shift": 0.3, "shift_k": [1, 5, 50, 500]},
    "measure-quantize": {"measures": [{"kind": "fs", "shift": 1.0},
                                      {"kind": "holder", "delta": 1.0, "gamma": 0.5}],
                         "k_list": [25, 50, 100, 200], "threshold": 0.1,
                         "round_trip_seeds": 10, "round_trip_tol": 1e-8},
}

COMMANDS: dict[str, Callable[[dict, Context], list[Row]]] = {
    "local-kernel": cmd_local_kernel, "demailly": cmd_demailly, "ot-check": cmd_ot_check,
    "polydisk": cmd_polydisk, "bb-check": cmd_bb_check, "lemma-sphere": cmd_lemma_sphere,
    "mt-check": cmd_mt_check, "cp1-exact": cmd_cp1_exact, "cp1-c11": cmd_cp1_c11,
    "berndtsson": cmd_berndtsson, "doubling": cmd_doubling, "lower-bound": cmd_lower_bound,
    "tail-mass": cmd_tail_mass, "energy": cmd_energy, "measure-quantize": cmd_measure_quantize,
}

RUN_KEYS = {"subcommand", "seed", "threads", "out_dir", "strict"}


def _same_kind(default, value) -> bool:
    if isinstance(default, bool) or isinstance(value, bool):
        return isinstance(default, bool) and isinstance(value, bool)
    if isinstance(default, (int, float)):
        return isinstance(value, (int, float))
    return isinstance(value, type(default))


def resolve_config(subcommand: str, user: dict | None) -> dict:
    """Defaults overlaid with the user's keys; unknown keys and wrong types are rejected."""
    if subcommand not in DEFAULTS:
        raise ConfigInvalid(f"unknown subcommand {subcommand!r}")
    cfg = json.loads(json.dumps(DEFAULTS[subcommand]))
    for key, val in (user or {}).items():
        if key in RUN_KEYS:
            continue
        if key not in cfg:
            raise ConfigInvalid(f"{subcommand}: unknown key {key!r}")
        if not _same_kind(cfg[key], val):
            raise ConfigInvalid(f"{subcommand}: key {key!r} expects {type(cfg[key]).__name__}")
        cfg[key] = val
    return cfg


def _fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, float):
        return "nan" if math.isnan(x) else f"{x:.17g}"
    return str(x)


def write_csv(path: Path, subcommand: str, rows: list[Row]) -> None:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(COLUMNS)
    for r in rows:
        w.writerow([subcommand, r.case, r.check, _fmt(r.k), _fmt(r.value), _fmt(r.bound),
                    r.direction, r.status])
    path.write_text(buf.getvalue())


def summarize(subcommand: str, cfg: dict, rows: list[Row], seed: int, strict: bool) -> dict:
    fails = [r for r in rows if r.status == FAIL]
    warns = [r for r in rows if r.status == WARN]
    ok = not fails and not (strict and warns)

    def js(x):
        return None if isinstance(x, float) and not math.isfinite(x) else x
    checks = [{"case": r.case, "check": r.check, "k": r.k, "value": js(r.value),
               "bound": js(r.bound), "direction": r.direction, "status": r.status}
              for r in rows if r.status != INFO]
    return {"subcommand": subcommand, "seed": seed, "strict": strict, "config": cfg,
            "passed": ok, "n_checks": len(checks), "n_failed": len(fails),
            "n_warnings": len(warns), "checks": checks}


def run(subcommand: str, user_cfg: dict | None, out_dir: Path, seed: int = 0, threads: int = 1,
        strict: bool = False) -> int:
    """Run one subcommand and write its reports; returns the exit status."""
    try:
        cfg = resolve_config(subcommand, user_cfg)
        rows = COMMANDS[subcommand](cfg, Context(seed, threads))
    except BergquantError as exc:
        print(f"{subcommand}: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2
    except (ValueError, KeyError, TypeError) as exc:
        print(f"{subcommand}: configuration error: {exc}", file=sys.stderr)
        return 2
    out_dir.mkdir(parents=True, exist_ok=True)
    write_csv(out_dir / f"{subcommand}.csv", subcommand, rows)
    summary = summarize(subcommand, cfg, rows, seed, strict)
    (out_dir / f"{subcommand}.json").write_text(json.dumps(summary, indent=1, sort_keys=True) + "\n")
    for r in rows:
        if r.status in (FAIL, WARN):
            print(f"{r.status.upper()} {r.case} {r.check} k={_fmt(r.k)} value={_fmt(r.value)} "
                  f"bound={_fmt(r.bound)}", file=sys.stderr)
    print(f"{subcommand}: {summary['n_checks'] - summary['n_failed'] - summary['n_warnings']} passed, "
          f"{summary['n_failed']} failed, {summary['n_warnings']} warnings")
    return 0 if summary["passed"] else 1


def _load_config(path: str | None) -> dict:
    if path is None:
        return {}
    try:
        data = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigInvalid(f"cannot read config {path}: {exc}") from exc
    if not isinstance(data, dict):
        raise ConfigInvalid("config must be a JSON object")
    return data


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON file with subcommand parameters")
    common.add_argument("--out-dir", default="reports", help="directory for CSV and JSON output")
    common.add_argument("--threads", type=int, default=1)
    common.add_argument("--seed", type=int, default=None)
    common.add_argument("--strict", action="store_true", help="treat trend warnings as failures")
    parser = argparse.ArgumentParser(prog="bergquant", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="subcommand", required=True)
    for name in COMMANDS:
        sub.add_parser(name, parents=[common])
    sub.add_parser("run", parents=[common], help="take the subcommand from the config file")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        user = _load_config(args.config)
    except ConfigInvalid as exc:
        print(f"ConfigInvalid: {exc}", file=sys.stderr)
        return 2
    name = args.subcommand
    if name == "run":
        name = user.get("subcommand")
        if name not in COMMANDS:
            print(f"ConfigInvalid: config needs a known 'subcommand', got {name!r}", file=sys.stderr)
            return 2
    elif user.get("subcommand", name) != name:
        print(f"ConfigInvalid: config is for {user['subcommand']!r}, not {name!r}", file=sys.stderr)
        return 2
    seed = args.seed if args.seed is not None else int(user.get("seed", 0))
    if seed < 0 or seed >= 2 ** 64:
        print("ConfigInvalid: seed must be an unsigned 64-bit integer", file=sys.stderr)
        return 2
    out = Path(args.out_dir if args.out_dir != "reports" else user.get("out_dir", "reports"))
    threads = max(1, args.threads if args.threads != 1 else int(user.get("threads", 1)))
    strict = args.strict or bool(user.get("strict", False))
    return run(name, user, out, seed, threads, strict)


if __name__ == "__main__":
    sys.exit(main())
