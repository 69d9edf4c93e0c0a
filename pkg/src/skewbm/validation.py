"""Independent oracles and the analytic-versus-simulation checks.

The quadrature oracles integrate the defining integrals with
``scipy.integrate`` so that they share no code with the closed forms or
with :mod:`skewbm.quadrature`.  The Monte Carlo statistics account for the
lattice of the random walk:

* ``tau``, ``V``, ``U`` and ``S_N - N`` are even; their atoms are spread
  uniformly over cells of width 2 clipped to ``[0, N]``.
* the local time is represented by the number of returns ``L_n - 1``,
  spread over ``[L_n - 1, L_n]``; the visit at step 0 is an ``O(1/sqrt(n))``
  offset that the limit ignores.
"""

from __future__ import annotations

import math
import time
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from itertools import product
from typing import Callable, List, Optional, Sequence

import numpy as np
from scipy import integrate, stats

from .errors import DomainError
from .sbm_density import SkewParams, occupation_cell_probabilities
from .skew_walk_sim import WalkConfig, simulate_counts

__all__ = [
    "CheckResult",
    "F1_oracle",
    "F2_oracle",
    "G1_oracle",
    "i_tilde_oracle",
    "quartet_mass",
    "enumerate_return_pmf",
    "enumerate_cycle_probability",
    "enumerate_return_table",
    "enumerate_cycle_table",
    "dequantize",
    "ks_distance",
    "DensityGrid",
    "DEFAULT_DENSITY_GRID",
    "DensityChi2",
    "density_chi2",
    "run_checks",
]


@dataclass
class CheckResult:
    name: str
    passed: bool
    value: float
    reference: float
    tolerance: float
    seconds: float = 0.0
    detail: str = ""

    def as_dict(self) -> dict:
        return asdict(self)


# ---------------------------------------------------------------------------
# quadrature oracles of the defining integrals


def _h(t, x):
    return abs(x) / math.sqrt(2.0 * math.pi * t ** 3) * math.exp(-x * x / (2.0 * t))


def _h_drift(t, x, b):
    return x / math.sqrt(2.0 * math.pi * t ** 3) * math.exp(-(x + b * t) ** 2 / (2.0 * t))


def F1_oracle(s: float, sigma1: float, sigma2: float) -> float:
    p = sigma2 / (sigma1 + sigma2)
    q = 1.0 - p
    lam1, lam2 = sigma1 ** 2 / 8.0, sigma2 ** 2 / 8.0

    def f(v):
        u = s - v
        return p * q / (math.sqrt(2.0 * math.pi) * (p * p * u + q * q * v) ** 1.5) * math.exp(-lam1 * v - lam2 * u)

    return integrate.quad(f, 0.0, s, epsabs=1e-14, epsrel=1e-12, limit=200)[0]


def F2_oracle(a: float, t: float, x0: float, k: float) -> float:
    y = abs(x0)

    def f(x):
        r = y + x
        return r / math.sqrt(2.0 * math.pi * t ** 3) * math.exp(a * x - r * r / (2.0 * t))

    return integrate.quad(f, k, math.inf, epsabs=1e-14, epsrel=1e-12, limit=200)[0]


def _dbl(f: Callable[[float, float], float], k: float) -> float:
    # outer x on (k, inf), inner l on (0, inf)
    def inner(x):
        return integrate.quad(lambda l: f(x, l), 0.0, math.inf, epsabs=1e-14, epsrel=1e-11, limit=200)[0]

    return integrate.quad(inner, k, math.inf, epsabs=1e-13, epsrel=1e-10, limit=200)[0]


def G1_oracle(a: float, v: float, y: float, w: float, p: float, k: float, T: float) -> float:
    q = 1.0 - p
    u = T - v
    return _dbl(lambda x, l: _h_drift(v, l * p + x, a) * _h_drift(u, l * q + y, w), k)


def i_tilde_oracle(b: float, a: float, v: float, y: float, p: float, T: float, k: float) -> float:
    q = 1.0 - p
    u = T - v

    def f(x, l):
        r1, r2 = l * p + x, l * q + y
        if r1 <= 0.0 or r2 <= 0.0:
            return 0.0
        expo = -a * x - b * l - r1 * r1 / (2.0 * v) - r2 * r2 / (2.0 * u)
        return r1 * r2 / (2.0 * math.pi * (u * v) ** 1.5) * math.exp(expo)

    return _dbl(f, k)


def quartet_mass(density: Callable, p: float, T: float, nodes: int = 64, cutoff: float = 12.0) -> float:
    """Total mass of a density ``f(t, v, x, l)`` on ``0 <= v <= t <= T``.

    ``t = T sin^2`` and ``v = t sin^2`` remove the inverse square roots at
    the ends; ``(t, v)`` go through ``scipy.integrate.dblquad``.  For each
    ``(t, v)`` the ``x`` and ``l`` integrals use Gauss-Legendre on
    ``[0, cutoff]`` in units of their diffusive scales.
    """
    q = 1.0 - p
    gx, gw = np.polynomial.legendre.leggauss(nodes)
    z = 0.5 * cutoff * (gx + 1.0)
    zw = 0.5 * cutoff * gw
    xi, eta = np.meshgrid(z, z, indexing="ij")
    wts = np.outer(zw, zw)

    def inner(phi_angle, theta):
        st, ct = math.sin(theta), math.cos(theta)
        t = T * st * st
        sv, cv = math.sin(phi_angle), math.cos(phi_angle)
        v = t * sv * sv
        w = t - v
        if t <= 0.0 or t >= T or v <= 0.0 or w <= 0.0:
            return 0.0
        jac = 2.0 * T * st * ct * 2.0 * t * sv * cv
        sx = math.sqrt(T - t)
        sl = 1.0 / math.sqrt(p * p / v + q * q / w)
        l = sl * eta
        tt = np.full_like(l, t)
        vv = np.full_like(l, v)
        total = 0.0
        for sign in (1.0, -1.0):
            total += float(np.sum(wts * density(tt, vv, sign * sx * xi, l)))
        return jac * sx * sl * total

    val, _ = integrate.dblquad(inner, 0.0, 0.5 * math.pi, 0.0, 0.5 * math.pi, epsabs=1e-9, epsrel=1e-8)
    return val


# ---------------------------------------------------------------------------
# exhaustive enumeration of simple walk paths


def enumerate_return_table(d: int) -> dict:
    """``{i: P(i-th return to 0 at time 2d)}`` from all 2^(2d) simple walk paths."""
    hits: dict = {}
    for steps in product((1, -1), repeat=2 * d):
        s, returns = 0, 0
        for st in steps:
            s += st
            returns += s == 0
        if s == 0:
            hits[returns] = hits.get(returns, 0) + 1
    return {i: Fraction(c, 2 ** (2 * d)) for i, c in hits.items()}


def enumerate_return_pmf(i: int, d: int) -> Fraction:
    return enumerate_return_table(d).get(i, Fraction(0))


def enumerate_cycle_table(r: int, p: Fraction) -> dict:
    """``{(r1, k): P(A)}`` over the first ``2r`` skew walk steps.

    ``A`` is the event ``S_2r = 0`` with exactly ``k`` returns and ``2 r1``
    edges with both ends ``>= 0``.
    """
    p = Fraction(p)
    q = 1 - p
    table: dict = {}
    for steps in product((1, -1), repeat=2 * r):
        s, returns, pos, ups, downs, halves = 0, 0, 0, 0, 0, 0
        for st in steps:
            if s == 0:
                if st == 1:
                    ups += 1
                else:
                    downs += 1
            else:
                halves += 1
            nxt = s + st
            pos += s >= 0 and nxt >= 0
            s = nxt
            returns += s == 0
        if s == 0:
            key = (pos // 2, returns)
            table[key] = table.get(key, 0) + p ** ups * q ** downs / 2 ** halves
    return table


def enumerate_cycle_probability(r: int, r1: int, k: int, p: Fraction) -> Fraction:
    """P(first 2r steps of the skew walk: S_2r = 0, exactly k returns, 2 r1 positive edges)."""
    return Fraction(enumerate_cycle_table(r, p).get((r1, k), 0))


# ---------------------------------------------------------------------------
# lattice-aware sample statistics


def dequantize(counts, n: int, T: float, seed: int = 0) -> dict:
    """Continuous representatives of ``(tau_n, V_n, U_n, L_n, S_N)`` counts."""
    tau, V, U, L, S = (np.asarray(c, dtype=float) for c in counts)
    N = int(round(T * n))
    rng = np.random.default_rng(seed)
    rn = math.sqrt(n)

    def even(c):
        lo = np.maximum(c - 1.0, 0.0)
        hi = np.minimum(c + 1.0, N)
        return (lo + (hi - lo) * rng.random(len(c))) / n

    return {
        "tau": even(tau),
        "v": even(V),
        "u": even(U),
        "l": (L - 1.0 + rng.random(len(L))) / rn,
        "x_T": (S - 1.0 + 2.0 * rng.random(len(S))) / rn,
    }


def ks_distance(sample, cdf: Callable) -> float:
    return float(stats.kstest(np.asarray(sample), cdf).statistic)


# ---------------------------------------------------------------------------
# 4-d histogram against the occupation-time density


@dataclass(frozen=True)
class DensityGrid:
    """Target cell edges for ``(tau, U, X_T, L_T)``.

    Edges are snapped to the walk lattice before use.  The ``x`` edges must
    contain one cell around 0; it is left out because the density is
    singular at ``x = 0, tau = T``.
    """

    tau: Sequence[float] = tuple(np.linspace(0.1, 0.9, 9))
    u: Sequence[float] = tuple(np.linspace(0.05, 0.95, 9))
    x: Sequence[float] = (-1.5, -0.9, -0.55, -0.3, -0.1, 0.1, 0.3, 0.55, 0.9, 1.5)
    l: Sequence[float] = tuple(np.linspace(0.15, 1.5, 9))


DEFAULT_DENSITY_GRID = DensityGrid()


@dataclass
class DensityChi2:
    n: int
    paths: int
    statistic: float
    df: int
    pvalue: float
    discrepancy: float
    cells: int
    seconds: float
    extra: dict = field(default_factory=dict)


def _lattice_edges(grid: DensityGrid, n: int, T: float):
    rn = math.sqrt(n)
    odd = lambda e, scale: 2.0 * np.floor(np.asarray(e) * scale / 2.0) + 1.0
    ti = odd(np.asarray(grid.tau) * T, n)
    ui = odd(np.asarray(grid.u) * T, n)
    xi = odd(grid.x, rn)
    li = np.floor(np.asarray(grid.l) * rn) + 1.5
    if np.any(np.diff(ti) <= 0) or np.any(np.diff(ui) <= 0) or np.any(np.diff(xi) <= 0) or np.any(np.diff(li) <= 0):
        raise DomainError("density grid is finer than the walk lattice")
    gap = np.flatnonzero((xi[:-1] < 0) & (xi[1:] > 0))
    if len(gap) != 1:
        raise DomainError("x edges need exactly one cell around 0")
    return ti, ui, xi, li, int(gap[0])


def _typical_cells(tc, uc, xc, lc, p, T):
    # keep cells whose centre is past the mode of both first-passage factors
    q = 1.0 - p
    t, u, x, l = np.meshgrid(tc, uc, xc, lc, indexing="ij")
    v1 = np.where(x >= 0, u + t - T, u)
    w1 = np.where(x >= 0, T - u, t - u)
    return (v1 >= (l * p) ** 2) & (w1 >= (l * q) ** 2)


def density_chi2(cfg: WalkConfig, grid: DensityGrid = DEFAULT_DENSITY_GRID, min_expected: float = 5.0) -> DensityChi2:
    """Pearson test of walk histograms against :func:`phi_occupation`.

    ``statistic`` is computed on the typical cells conditional on their
    total count, so it measures the shape of the density.  ``discrepancy``
    is the unconditional statistic with one remainder cell, as excess over
    its mean in standard deviations; it also sees mass shifted across cell
    boundaries and falls as ``n`` grows.
    """
    start = time.perf_counter()
    T, n = cfg.T, cfg.n
    ti, ui, xi, li, gap = _lattice_edges(grid, n, T)
    rn = math.sqrt(n)
    tau, _, U, L, S = simulate_counts(cfg)
    counts, _ = np.histogramdd(np.column_stack([tau, U, S, L]).astype(float), bins=[ti, ui, xi, li])
    xc_edges = np.insert(xi / rn, gap + 1, 0.0)
    params = SkewParams(cfg.p, cfg.m1, cfg.m2, T)
    prob = occupation_cell_probabilities(ti / n, ui / n, xc_edges, (li - 1.0) / rn, params)
    prob = np.concatenate([prob[:, :, :gap], prob[:, :, gap + 2:]], axis=2)
    counts = np.delete(counts, gap, axis=2)
    xmid = np.delete(0.5 * (xi[:-1] + xi[1:]), gap) / rn
    keep = _typical_cells(0.5 * (ti[:-1] + ti[1:]) / n, 0.5 * (ui[:-1] + ui[1:]) / n, xmid,
                          0.5 * (li[:-1] + li[1:] - 2.0) / rn, cfg.p, T)
    keep &= prob * cfg.paths >= min_expected
    obs = counts[keep]
    exp_abs = prob[keep] * cfg.paths
    exp_cond = exp_abs * obs.sum() / exp_abs.sum()
    stat = float(((obs - exp_cond) ** 2 / exp_cond).sum())
    df = int(keep.sum()) - 1
    rest_o = cfg.paths - obs.sum()
    rest_e = cfg.paths - exp_abs.sum()
    stat_u = float(((obs - exp_abs) ** 2 / exp_abs).sum() + (rest_o - rest_e) ** 2 / rest_e)
    df_u = df + 1
    return DensityChi2(
        n=n, paths=cfg.paths, statistic=stat, df=df, pvalue=float(stats.chi2.sf(stat, df)),
        discrepancy=(stat_u - df_u) / math.sqrt(2.0 * df_u), cells=int(keep.sum()),
        seconds=time.perf_counter() - start,
        extra={"unconditional": stat_u, "mass_observed": float(obs.sum() / cfg.paths),
               "mass_expected": float(exp_abs.sum() / cfg.paths)},
    )


# ---------------------------------------------------------------------------
# the validate report


def _timed(name, fn) -> CheckResult:
    t0 = time.perf_counter()
    res = fn()
    res.name = name
    res.seconds = time.perf_counter() - t0
    return res


def _close(value, reference, tol, detail=""):
    return CheckResult("", bool(abs(value - reference) <= tol), float(value), float(reference), float(tol), detail=detail)


def _mc_check(value, se, reference, detail=""):
    return CheckResult("", bool(abs(value - reference) <= 3.0 * se), float(value), float(reference), 3.0 * float(se),
                       detail=detail or f"z = {(value - reference) / se:+.2f}")


def run_checks(paths: int = 400_000, n: int = 2000, seed: int = 0, workers: int = 1,
               names: Optional[Sequence[str]] = None) -> List[CheckResult]:
    """Closed forms against quadrature, enumeration and Monte Carlo.

    Monte Carlo checks pass when the analytic value lies within three
    standard errors.  ``names`` restricts the run to a subset.
    """
    from .bs_approx import adjusted_prices
    from .displaced_pricer import DisplacedParams, displaced_knock_in_call
    from .exact_pricer import (F1, F2, G1Args, G1_closed, OptionSpec, call_price, generic_quadrature_price,
                               knock_out_call_lognormal, put_price)
    from .lvm_map import TwoValuedVol
    from .mc_oracles import displaced_call_mc, gbm_down_and_out_call_mc
    from .skew_walk_sim import exact_return_pmf, lvm_walk_config, mc_price
    from .special_fn import bivariate_normal_cdf

    vol = TwoValuedVol(0.5, 0.9)
    p = 9.0 / 14.0
    T = 2.0

    def bvn():
        worst = max(abs(bivariate_normal_cdf(0.0, 0.0, r) - (0.25 + math.asin(r) / (2 * math.pi)))
                    for r in (-0.9, -0.5, 0.0, 0.5, 0.9))
        return CheckResult("", worst <= 1e-10, worst, 0.0, 1e-10)

    def f1():
        worst = max(abs(F1(s, vol) - F1_oracle(s, 0.5, 0.9)) for s in (0.1, 0.5, 1.0, 2.0))
        return CheckResult("", worst <= 1e-8, worst, 0.0, 1e-8)

    def f2():
        worst = max(abs(F2(a, t, x0, 1.0, k) - F2_oracle(a, t, x0, k))
                    for a in (-0.25, 0.25) for t in (0.3, 1.0) for x0, k in ((0.0, 0.8), (0.5, 0.365)))
        return CheckResult("", worst <= 1e-8, worst, 0.0, 1e-8)

    def g1():
        w = -0.25 * p / (1 - p)
        worst = max(abs(G1_closed(G1Args(a, v, y, w), p, 0.8, T) - G1_oracle(a, v, y, w, p, 0.8, T))
                    for a in (-0.25, 0.25) for v in (0.3, 1.7) for y in (0.0, 1.2))
        return CheckResult("", worst <= 1e-6, worst, 0.0, 1e-6, detail="8 of the 27 grid points")

    def pmf():
        ok = all(exact_return_pmf(i, d) == enumerate_return_pmf(i, d) for d in range(1, 7) for i in range(1, d + 1))
        return CheckResult("", ok, float(ok), 1.0, 0.0, detail="2d <= 12")

    def triangle(S0, K):
        def run():
            a = call_price(OptionSpec(S0, K, T), vol).price
            b = generic_quadrature_price(OptionSpec(S0, K, T), vol).price
            return _close(a, b, 5e-4)
        return run

    def call_mc(S0, K, kind="call"):
        def run():
            spec = OptionSpec(S0, K, T, kind)
            ref = (call_price if kind == "call" else put_price)(spec, vol).price
            m, se = mc_price(spec, vol, lvm_walk_config(vol, T, n=n, paths=paths, seed=seed, workers=workers))
            return _mc_check(m, se, ref)
        return run

    def knock_out():
        spec = OptionSpec(1.1, 1.2, T)
        ref = knock_out_call_lognormal(spec, 0.5).price
        m, se = gbm_down_and_out_call_mc(1.1, 1.2, T, 0.5, paths=paths, steps=250, seed=seed, workers=workers)
        return _mc_check(m, se, ref)

    def displaced0():
        a = displaced_knock_in_call(0.8, 1.2, T, DisplacedParams(0.5, 0.9, 0.0)).price
        b = call_price(OptionSpec(0.8, 1.2, T), vol).price
        return _close(a, b, 5e-4)

    def displaced_mc():
        ref = displaced_knock_in_call(0.8, 1.3, T, DisplacedParams(0.5, 0.9, 0.4)).price
        m, se = displaced_call_mc(0.8, 1.3, T, 0.5, 0.9, 0.4, paths=paths, steps=500, seed=seed, workers=workers)
        return _mc_check(m, se, ref)

    def adjusted_parity():
        ap = adjusted_prices(1.0, T, vol)
        gap = abs(ap.call_adjusted - ap.put_adjusted)
        return CheckResult("", gap <= 1e-12, gap, 0.0, 1e-12)

    def arcsine():
        cfg = WalkConfig(n=n, T=1.0, p=0.5, seed=seed, paths=paths, workers=workers)
        d = dequantize(simulate_counts(cfg), n, 1.0, seed)
        ks = ks_distance(d["u"], lambda x: 2.0 / math.pi * np.arcsin(np.sqrt(np.clip(x, 0.0, 1.0))))
        return CheckResult("", ks < 0.005 + 1.36 / math.sqrt(paths), ks, 0.0, 0.005 + 1.36 / math.sqrt(paths))

    checks = {
        "bivariate_normal_arcsine": bvn,
        "F1_vs_quadrature": f1,
        "F2_vs_quadrature": f2,
        "G1_vs_quadrature": g1,
        "return_pmf_vs_enumeration": pmf,
        "closed_vs_generic_S0=1_K=1.2": triangle(1.0, 1.2),
        "closed_vs_generic_S0=1_K=1.5": triangle(1.0, 1.5),
        "closed_vs_generic_S0=0.8_K=1.2": triangle(0.8, 1.2),
        "adjusted_parity_atm": adjusted_parity,
        "displaced_alpha1=0_reduction": displaced0,
        "mc_call_S0=1_K=1.2": call_mc(1.0, 1.2),
        "mc_call_S0=0.8_K=1.2": call_mc(0.8, 1.2),
        "mc_put_S0=1_K=0.7": call_mc(1.0, 0.7, "put"),
        "mc_knock_out_lognormal": knock_out,
        "mc_displaced_alpha1=0.4": displaced_mc,
        "mc_arcsine_occupation": arcsine,
    }
    selected = list(checks) if names is None else list(names)
    unknown = [nm for nm in selected if nm not in checks]
    if unknown:
        raise DomainError(f"unknown checks: {unknown}")
    return [_timed(nm, checks[nm]) for nm in selected]
