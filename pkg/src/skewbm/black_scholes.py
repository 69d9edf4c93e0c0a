"""Zero-rate Black-Scholes prices and implied volatility."""

from __future__ import annotations

import math

from scipy.optimize import brentq

from .errors import ConvergenceError, DomainError
from .special_fn import std_normal_cdf

VOL_BRACKET = (1e-6, 5.0)


def bs_call(S0: float, K: float, T: float, sigma: float) -> float:
    if sigma <= 0 or T <= 0:
        return max(S0 - K, 0.0)
    sd = sigma * math.sqrt(T)
    d1 = (math.log(S0 / K) + 0.5 * sd * sd) / sd
    return S0 * std_normal_cdf(d1) - K * std_normal_cdf(d1 - sd)


def bs_put(S0: float, K: float, T: float, sigma: float) -> float:
    if sigma <= 0 or T <= 0:
        return max(K - S0, 0.0)
    sd = sigma * math.sqrt(T)
    d1 = (math.log(S0 / K) + 0.5 * sd * sd) / sd
    return K * std_normal_cdf(sd - d1) - S0 * std_normal_cdf(-d1)


def bs_price(S0: float, K: float, T: float, sigma: float, kind: str) -> float:
    if kind == "call":
        return bs_call(S0, K, T, sigma)
    if kind == "put":
        return bs_put(S0, K, T, sigma)
    raise DomainError(f"unknown option kind {kind!r}")


def implied_vol(price: float, S0: float, K: float, T: float, kind: str, tol: float = 1e-10) -> float:
    """Volatility at which the zero-rate Black-Scholes price equals ``price``.

    Solved with Brent's method on ``[1e-6, 5]``.  Prices at or below the
    lower-bracket value return the lower bracket.
    """
    intrinsic = max(S0 - K, 0.0) if kind == "call" else max(K - S0, 0.0)
    upper_bound = S0 if kind == "call" else K
    if not (intrinsic - tol <= price < upper_bound):
        raise DomainError(f"price {price} outside the no-arbitrage band [{intrinsic}, {upper_bound})")
    lo, hi = VOL_BRACKET

    def f(s):
        return bs_price(S0, K, T, s, kind) - price

    f_lo = f(lo)
    if f_lo >= -tol:
        return lo
    if f(hi) < 0:
        raise ConvergenceError(f"price {price} needs a volatility above {hi}", value=hi)
    sigma = brentq(f, lo, hi, xtol=1e-15, rtol=4 * 2.220446049250313e-16, maxiter=200)
    if abs(f(sigma)) > tol:
        raise ConvergenceError("implied volatility did not reach the price tolerance", value=sigma)
    return sigma
