"""European option prices under the two-valued local volatility model.

Zero interest rate, barrier normalised to ``S* = 1``.  For ``K > 1`` the
call is assembled from a knock-in part (closed forms in the skew
coordinates) and, for ``S0 >= 1``, a lognormal down-and-out part.  Strikes
``K <= 1`` and all cross checks go through :func:`generic_quadrature_price`,
which integrates an arbitrary payoff against the terminal law.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np
from scipy.special import erfcx

from .black_scholes import bs_call, bs_put, implied_vol as _bs_implied_vol
from .errors import DomainError
from .lvm_map import TwoValuedVol, derive_skew, to_skew
from .quadrature import IntegrationSpec, integrate_1d
from .special_fn import (
    INV_SQRT_2PI,
    SQRT_2PI,
    bivariate_normal_cdf,
    std_normal_cdf,
    std_normal_pdf,
)

__all__ = [
    "OptionSpec",
    "G1Args",
    "PriceResult",
    "F1",
    "F2",
    "G1_closed",
    "knock_in_call_above",
    "knock_in_call_below",
    "knock_out_call_lognormal",
    "call_price",
    "put_price",
    "price",
    "generic_quadrature_price",
    "implied_vol",
    "smile",
    "NEAR_FLAT_RTOL",
    "CLAMP_TOL",
]

NEAR_FLAT_RTOL = 1e-6
CLAMP_TOL = 1e-8
METHODS = ("closed_form", "generic_quadrature", "barrier_complement", "parity", "black_scholes")

# tolerances of the nested integrals; outer error dominates
_OUTER_ABS = 1e-9
_INNER_ABS = 1e-11
_REL = 1e-9


@dataclass(frozen=True)
class OptionSpec:
    S0: float
    K: float
    T: float
    kind: str = "call"

    def __post_init__(self):
        for name in ("S0", "K", "T"):
            val = getattr(self, name)
            if not (isinstance(val, (int, float)) and math.isfinite(val) and val > 0):
                raise DomainError(f"{name} must be a positive finite number, got {val!r}")
        if self.kind not in ("call", "put"):
            raise DomainError(f"kind must be 'call' or 'put', got {self.kind!r}")

    def with_kind(self, kind: str) -> "OptionSpec":
        return OptionSpec(self.S0, self.K, self.T, kind)


@dataclass(frozen=True)
class PriceResult:
    price: float
    method: str
    err_estimate: float = 0.0
    clamped: bool = False
    components: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        if self.method not in METHODS:
            raise DomainError(f"unknown pricing method {self.method!r}")


def _result(value: float, method: str, err: float, components=None) -> PriceResult:
    if value < 0:
        if value < -max(CLAMP_TOL, 10 * err):
            raise DomainError(f"negative price {value:.3e} beyond clamping tolerance")
        return PriceResult(0.0, method, err, True, components or {})
    return PriceResult(value, method, err, False, components or {})


def _is_near_flat(vol: TwoValuedVol) -> bool:
    return abs(vol.sigma1 - vol.sigma2) < NEAR_FLAT_RTOL * (vol.sigma1 + vol.sigma2)


def _require_skewed(vol: TwoValuedVol):
    if _is_near_flat(vol):
        raise DomainError("sigma1 == sigma2: use the Black-Scholes dispatch in call_price")


# ---------------------------------------------------------------------------
# kernels


def F1(s, vol: TwoValuedVol):
    """Local-time-integrated occupation kernel on a stretch of length ``s``.

    ``F1(s) = int_{u+v=s} g(u, v) exp(-lambda1 v - lambda2 u) dv``.
    """
    _require_skewed(vol)
    s = np.asarray(s, dtype=float)
    if np.any(s <= 0):
        raise DomainError("F1 needs s > 0")
    s1, s2 = vol.sigma1, vol.sigma2
    rs = np.sqrt(s)
    num = math.sqrt(2.0) * (s1 * np.exp(-s2 * s2 * s / 8.0) - s2 * np.exp(-s1 * s1 * s / 8.0))
    num = num + np.sqrt(math.pi * s) * s1 * s2 * (std_normal_cdf(rs * s2 / 2.0) - std_normal_cdf(rs * s1 / 2.0))
    out = num / (np.sqrt(math.pi * s) * (s1 - s2))
    return float(out) if out.ndim == 0 else out


def F2(a: float, t, x0: float, theta: float, k: float):
    """``int_k^inf h(t, |x0| + x) exp(a x) dx`` for ``k >= 0``.

    The second term carries ``exp(-a |x0|)``; this is the value of the
    defining integral.
    """
    t = np.asarray(t, dtype=float)
    if np.any(t <= 0):
        raise DomainError("F2 needs t > 0")
    d = abs(x0) + abs(k)
    rt = np.sqrt(t)
    first = INV_SQRT_2PI / rt * np.exp(k * a - d * d / (2.0 * t))
    # exp(..) * Phi-bar(..) without overflow: combine exponents in log space
    z = theta * d / rt - a * rt
    tail = std_normal_cdf(-z)
    with np.errstate(divide="ignore"):
        second = np.where(tail > 0, a * np.exp(-a * abs(x0) + t * a * a / 2.0 + np.log(tail)), 0.0)
    out = first + second
    if theta == 1.0 and a < 0:
        # both terms are of order 1/sqrt(t) and cancel; 1/sqrt(t) + a R(z) = d/(z t) + a (z R(z) - 1)/z
        zs = np.where(z > 0, z, 1.0)
        mills = math.sqrt(0.5 * math.pi) * erfcx(zs / math.sqrt(2.0))
        pref = INV_SQRT_2PI * np.exp(k * a - d * d / (2.0 * t))
        out = np.where(z > 0, pref * (d / (zs * t) + a * (zs * mills - 1.0) / zs), out)
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class G1Args:
    """Arguments ``(a, v, y, w)`` of the Part-2 kernel plus derived terms."""

    a: float
    v: float
    y: float
    w: float

    def derived(self, p: float, k: float, T: float) -> dict:
        if not 0.0 < self.v < T:
            raise DomainError("G1 needs 0 < v < T")
        if self.y < 0:
            raise DomainError("G1 needs y >= 0")
        if not 0.0 < p < 1.0:
            raise DomainError("p must lie in (0, 1)")
        q = 1.0 - p
        u = T - self.v
        su, sv = math.sqrt(u), math.sqrt(self.v)
        return {
            "alpha": self.w * su,
            "beta": self.a * sv,
            "gamma": (p / q) * su / sv,
            "X": (self.y + u * self.w) / su,
            "Y": (q * k - p * self.y - p * self.w * u + q * self.v * self.a) / (q * sv),
        }


def G1_closed(args: G1Args, p: float, k: float, T: float) -> float:
    """``int_k^inf int_0^inf h(v, lp + x, a) h(T - v, lq + y, w) dl dx``.

    Evaluated through normal pdf/cdf terms and one bivariate normal cdf.
    """
    d = args.derived(p, k, T)
    alpha, beta, gamma, X, Y = d["alpha"], d["beta"], d["gamma"], d["X"], d["Y"]
    q = 1.0 - p
    s2 = 1.0 + gamma * gamma
    s = math.sqrt(s2)
    nY = std_normal_pdf(Y / s)
    tail = std_normal_cdf(-(s2 * X + gamma * Y) / s)
    j1 = std_normal_pdf(X) * std_normal_pdf(Y + gamma * X) / s2 - gamma * Y / (s2 * s) * nY * tail
    j2 = -alpha / s * nY * tail
    j3 = -beta * std_normal_pdf(X) * std_normal_cdf(-gamma * X - Y) + beta * gamma / s * nY * tail
    j4 = alpha * beta * bivariate_normal_cdf(-X, -Y / s, -gamma / s) if alpha * beta != 0 else 0.0
    return (j1 + j2 + j3 + j4) / (q * math.sqrt(args.v * (T - args.v)))


# ---------------------------------------------------------------------------
# closed-form branches


def knock_in_call_above(spec: OptionSpec, vol: TwoValuedVol) -> PriceResult:
    """Knock-in call (barrier 1) for ``S0 >= 1`` and ``K > 1``."""
    if not (spec.S0 >= 1.0 and spec.K > 1.0):
        raise DomainError("knock_in_call_above needs S0 >= 1 and K > 1")
    _require_skewed(vol)
    d = derive_skew(vol)
    s1, T = vol.sigma1, spec.T
    x0 = to_skew(spec.S0, vol)
    k = to_skew(spec.K, vol)

    def f_call(a):
        def integrand(t):
            return F1(T - t, vol) * F2(a, t, x0, 1.0, k) * np.exp(-t * d.lambda1)

        return integrate_1d(
            integrand,
            IntegrationSpec(0.0, T, abs_tol=_OUTER_ABS * 0.1, rel_tol=_REL, singular_lower=x0 == 0.0, singular_upper=True),
        )

    v_plus, e_plus = f_call(s1 / 2.0)
    v_minus, e_minus = f_call(-s1 / 2.0)
    pref = d.p * math.exp(s1 * x0 / 2.0)
    ek = math.exp(s1 * k)
    value = pref * (v_plus - ek * v_minus)
    err = pref * (e_plus + ek * e_minus)
    return _result(value, "closed_form", err)


def _i_part2(a: float, y: float, v: float, p: float, k: float, T: float) -> float:
    q = 1.0 - p
    w = -a * p / q
    u = T - v
    g1 = G1_closed(G1Args(a, v, y, w), p, k, T)
    return math.exp(v * a * a / 2.0 + u * w * w / 2.0 - a * y * p / q) * g1


def knock_in_call_below(spec: OptionSpec, vol: TwoValuedVol) -> PriceResult:
    """Call for ``S0 < 1`` and ``K > 1``; every paying path crosses 1."""
    if not (spec.S0 < 1.0 and spec.K > 1.0):
        raise DomainError("knock_in_call_below needs S0 < 1 and K > 1")
    _require_skewed(vol)
    d = derive_skew(vol)
    s1, T, p = vol.sigma1, spec.T, d.p
    x0 = to_skew(spec.S0, vol)
    y = abs(x0)
    k = to_skew(spec.K, vol)
    ek = math.exp(s1 * k)

    def integrand(vs):
        out = np.empty(len(vs))
        for i, v in enumerate(vs):
            if not 0.0 < v < T:
                out[i] = 0.0
                continue
            w = math.exp(-d.lambda1 * v - d.lambda2 * (T - v))
            out[i] = w * (_i_part2(-s1 / 2.0, y, v, p, k, T) - ek * _i_part2(s1 / 2.0, y, v, p, k, T))
        return out

    val, err = integrate_1d(integrand, IntegrationSpec(0.0, T, abs_tol=_OUTER_ABS * 0.1, rel_tol=_REL))
    pref = 2.0 * p * math.exp(vol.sigma2 * x0 / 2.0)
    return _result(pref * val, "closed_form", pref * err)


def knock_out_call_lognormal(spec: OptionSpec, sigma: float) -> PriceResult:
    """Zero-rate down-and-out call, barrier 1, constant volatility ``sigma``."""
    if not (spec.S0 >= 1.0 and spec.K > 1.0):
        raise DomainError("knock_out_call_lognormal needs S0 >= 1 and K > 1")
    if not sigma > 0:
        raise DomainError("sigma must be positive")
    S0, K, T = spec.S0, spec.K, spec.T
    if S0 == 1.0:
        return PriceResult(0.0, "barrier_complement", 0.0)
    sd = sigma * math.sqrt(T)
    y = math.log(1.0 / (S0 * K)) / sd + sd / 2.0
    # down-and-in by reflection: (S0 / H) * BS(H^2 / S0, K) with H = 1
    c_di = std_normal_cdf(y) - K * S0 * std_normal_cdf(y - sd)
    value = bs_call(S0, K, T, sigma) - c_di
    return _result(value, "barrier_complement", 1e-14)


# ---------------------------------------------------------------------------
# generic pricer


def _local_time_pair(c_pos, c_neg, P, N, p):
    """``int_0^inf h(c_pos, l p + P) h(c_neg, l q + N) dl`` in closed form."""
    q = 1.0 - p
    c_pos = np.asarray(c_pos, dtype=float)
    c_neg = np.asarray(c_neg, dtype=float)
    P = np.asarray(P, dtype=float)
    N = np.asarray(N, dtype=float)
    kappa = p * p / c_pos + q * q / c_neg
    beta = p * P / c_pos + q * N / c_neg
    gamma0 = P * P / c_pos + N * N / c_neg
    m = beta / kappa
    s_sq = 1.0 / kappa
    a0 = P - p * m
    b0 = N - q * m
    r = math.sqrt(2.0 * math.pi) * np.sqrt(s_sq) * 0.5 * erfcx(m * np.sqrt(kappa) / math.sqrt(2.0))
    poly = p * q * (s_sq * m + s_sq * r) + (p * b0 + q * a0) * s_sq + a0 * b0 * r
    cd = c_pos * c_neg
    return np.exp(-0.5 * gamma0) / (2.0 * math.pi * cd * np.sqrt(cd)) * poly


def _half_line(f: Callable, scale: float, breaks: Sequence[float]):
    """``int_0^inf f(y) dy`` with breakpoints; ``scale`` sets the tail map."""
    pts = sorted(b for b in breaks if 0.0 < b < math.inf)
    edges = [0.0] + pts
    total = 0.0
    err = 0.0
    for lo, hi in zip(edges[:-1], edges[1:]):
        if hi - lo <= 0:
            continue
        v, e = integrate_1d(f, IntegrationSpec(lo, hi, abs_tol=_INNER_ABS, rel_tol=_REL))
        total += v
        err += e
    start = edges[-1]

    def tail(z):
        return f(start + scale * z) * scale

    v, e = integrate_1d(tail, IntegrationSpec(0.0, math.inf, abs_tol=_INNER_ABS, rel_tol=_REL))
    return total + v, err + e


def generic_quadrature_price(
    spec: OptionSpec,
    vol: TwoValuedVol,
    payoff: Optional[Callable[[np.ndarray], np.ndarray]] = None,
    kinks: Sequence[float] = (),
) -> PriceResult:
    """Price of ``payoff(S_T)`` by integrating against the terminal law.

    The law splits into paths that never reach the barrier (killed
    Brownian motion with drift in the starting regime) and paths that do.
    For the latter the first hitting time is convolved with the last-zero
    and local-time structure; the local time integral is done in closed
    form, leaving a time integral over a terminal-value integral.  With no
    ``payoff`` the call or put of ``spec`` is priced.
    """
    _require_skewed(vol)
    d = derive_skew(vol)
    p, q = d.p, d.q
    T, S0 = spec.T, spec.S0
    if payoff is None:
        K = spec.K
        if spec.kind == "call":
            def payoff(S):
                return np.maximum(S - K, 0.0)
        else:
            def payoff(S):
                return np.maximum(K - S, 0.0)
        kinks = tuple(kinks) + (K,)
    x0 = to_skew(S0, vol)
    kink_x = [to_skew(s, vol) for s in kinks if s > 0]
    sig = {1: vol.sigma1, -1: vol.sigma2}
    mu = {1: d.mu1, -1: d.mu2}
    lam = {1: d.lambda1, -1: d.lambda2}
    weight = {1: p, -1: q}
    side0 = 1 if x0 > 0 else (-1 if x0 < 0 else 0)
    ax0 = abs(x0)

    def f_side(side, absx):
        # payoff and drift factor at x = side * absx
        x = side * absx
        return payoff(np.exp(sig[side] * x)) * np.exp(mu[side] * x - (mu[side0] * x0 if side0 else 0.0))

    def kinks_on(side):
        return [abs(kx) for kx in kink_x if kx * side > 0]

    components = {}
    total = 0.0
    total_err = 0.0

    # paths that never hit the barrier
    if side0 != 0:
        s = side0
        rt = math.sqrt(T)

        def no_hit(absx):
            absx = np.asarray(absx, dtype=float)
            dens = (np.exp(-0.5 * (absx - ax0) ** 2 / T) - np.exp(-0.5 * (absx + ax0) ** 2 / T)) / (SQRT_2PI * rt)
            return f_side(s, absx) * dens * math.exp(-lam[s] * T)

        v, e = _half_line(no_hit, rt, kinks_on(s) + [ax0])
        components["no_hit"] = v
        total += v
        total_err += e

    # hit, terminal value on the starting side (or either side when x0 = 0)
    sides = (1, -1) if side0 == 0 else (side0,)
    for s in sides:
        ks = kinks_on(s)

        def inner_same(t, s=s, ks=ks):
            rt = math.sqrt(t)

            def g(yv):
                absx = rt * np.asarray(yv, dtype=float)
                dist = ax0 + absx
                h = dist / (SQRT_2PI * t * rt) * np.exp(-0.5 * dist * dist / t)
                return f_side(s, absx) * h * rt

            return _half_line(g, 1.0, [kk / rt for kk in ks])

        def outer_same(ts, s=s, inner=inner_same):
            out = np.empty(len(ts))
            for i, t in enumerate(ts):
                if not 0.0 < t < T:
                    out[i] = 0.0
                    continue
                val, _ = inner(t)
                out[i] = F1(T - t, vol) * math.exp(-lam[s] * t) * val
            return out

        v, e = integrate_1d(
            outer_same,
            IntegrationSpec(0.0, T, abs_tol=_OUTER_ABS, rel_tol=_REL, singular_lower=True, singular_upper=True),
        )
        v *= weight[s]
        e *= weight[s]
        components["hit_same" if side0 else ("hit_pos" if s == 1 else "hit_neg")] = v
        total += v
        total_err += e

    # hit, terminal value on the opposite side
    if side0 != 0:
        s = -side0
        ks = kinks_on(s)

        def inner_opp(c):
            # c is the time spent on the terminal side
            rc = math.sqrt(c)
            c0 = T - c
            if s == 1:
                c_pos, c_neg = c, c0
            else:
                c_pos, c_neg = c0, c
            wgt = math.exp(-d.lambda1 * c_pos - d.lambda2 * c_neg)

            def g(yv):
                absx = rc * np.asarray(yv, dtype=float)
                if s == 1:
                    kern = _local_time_pair(c_pos, c_neg, absx, ax0, p)
                else:
                    kern = _local_time_pair(c_pos, c_neg, ax0, absx, p)
                return f_side(s, absx) * kern * rc

            val, err = _half_line(g, 1.0, [kk / rc for kk in ks])
            return wgt * val, wgt * err

        def outer_opp(cs):
            out = np.empty(len(cs))
            for i, c in enumerate(cs):
                out[i] = inner_opp(c)[0] if 0.0 < c < T else 0.0
            return out

        v, e = integrate_1d(
            outer_opp,
            IntegrationSpec(0.0, T, abs_tol=_OUTER_ABS, rel_tol=_REL, singular_lower=True, singular_upper=True),
        )
        v *= 2.0 * weight[s]
        e *= 2.0 * weight[s]
        components["hit_opposite"] = v
        total += v
        total_err += e

    return _result(total, "generic_quadrature", total_err, components)


# ---------------------------------------------------------------------------
# public pricers


def call_price(spec: OptionSpec, vol: TwoValuedVol) -> PriceResult:
    """Call price of ``spec`` (its ``kind`` is ignored)."""
    S0, K, T = spec.S0, spec.K, spec.T
    if vol.is_flat or _is_near_flat(vol):
        return PriceResult(bs_call(S0, K, T, vol.sigma1), "black_scholes", 0.0)
    call = spec.with_kind("call")
    if K <= 1.0:
        return generic_quadrature_price(call, vol)
    if S0 < 1.0:
        return knock_in_call_below(call, vol)
    k_in = knock_in_call_above(call, vol)
    k_out = knock_out_call_lognormal(call, vol.sigma1)
    return _result(
        k_in.price + k_out.price,
        "closed_form",
        k_in.err_estimate + k_out.err_estimate,
        {"knock_in": k_in.price, "knock_out": k_out.price},
    )


def put_price(spec: OptionSpec, vol: TwoValuedVol) -> PriceResult:
    """Put by zero-rate parity ``P = C - S0 + K``."""
    S0, K, T = spec.S0, spec.K, spec.T
    if vol.is_flat or _is_near_flat(vol):
        return PriceResult(bs_put(S0, K, T, vol.sigma1), "black_scholes", 0.0)
    c = call_price(spec, vol)
    return _result(c.price - S0 + K, "parity", c.err_estimate, {"call": c.price, "call_method": c.method})


def price(spec: OptionSpec, vol: TwoValuedVol) -> PriceResult:
    return call_price(spec, vol) if spec.kind == "call" else put_price(spec, vol)


def implied_vol(price_value: float, spec: OptionSpec) -> float:
    """Black-Scholes implied volatility of ``price_value`` for ``spec``."""
    return _bs_implied_vol(price_value, spec.S0, spec.K, spec.T, spec.kind)


def smile(strikes: Sequence[float], S0: float, T: float, vol: TwoValuedVol, engine: str = "exact"):
    """Implied volatilities across ``strikes``.

    Calls are used for ``K >= 1`` and puts for ``K < 1``.  Returns a list of
    ``(K, price, implied_vol)``.
    """
    strikes = [float(k) for k in strikes]
    if any(k <= 0 for k in strikes):
        raise DomainError("strikes must be positive")
    if any(b < a for a, b in zip(strikes, strikes[1:])):
        raise DomainError("strikes must be sorted")
    if engine not in ("exact", "bs_approx", "bs_approx_adjusted"):
        raise DomainError(f"unknown engine {engine!r}")
    out = []
    if engine != "exact":
        from .bs_approx import adjusted_prices

    for K in strikes:
        kind = "call" if K >= 1.0 else "put"
        spec = OptionSpec(S0, K, T, kind)
        if engine == "exact":
            value = price(spec, vol).price
        else:
            ap = adjusted_prices(K, T, vol, S0=S0)
            if engine == "bs_approx":
                value = ap.call_raw if kind == "call" else ap.put_raw
            else:
                value = ap.call_adjusted if kind == "call" else ap.put_adjusted
        out.append((K, value, implied_vol(value, spec)))
    return out
