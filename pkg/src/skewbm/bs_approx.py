"""Black-Scholes approximation for an at-barrier spot, with parity repair.

For ``S0 = 1`` the call is approximated by ``2p BSC(sigma1)`` and the put
by ``2q BSP(sigma2)``.  These do not satisfy put-call parity at ``K = 1``;
scaling both by factors built from at-the-money prices restores it.
"""

from __future__ import annotations

from dataclasses import dataclass

from .black_scholes import bs_call, bs_put
from .errors import DomainError
from .lvm_map import TwoValuedVol, derive_skew

__all__ = ["ApproxPrices", "approx_call", "approx_put", "adjustment_factors", "adjusted_prices"]


@dataclass(frozen=True)
class ApproxPrices:
    call_raw: float
    put_raw: float
    call_adjusted: float
    put_adjusted: float
    a_cl: float
    a_pt: float


def _check_spot(S0: float):
    if S0 != 1.0:
        raise DomainError("the approximation is only defined for S0 = 1")


def approx_call(K: float, T: float, vol: TwoValuedVol, S0: float = 1.0) -> float:
    _check_spot(S0)
    if K < 1.0:
        raise DomainError("approx_call needs K >= 1")
    return 2.0 * derive_skew(vol).p * bs_call(1.0, K, T, vol.sigma1)


def approx_put(K: float, T: float, vol: TwoValuedVol, S0: float = 1.0) -> float:
    _check_spot(S0)
    if K > 1.0:
        raise DomainError("approx_put needs K <= 1")
    return 2.0 * derive_skew(vol).q * bs_put(1.0, K, T, vol.sigma2)


def adjustment_factors(T: float, vol: TwoValuedVol):
    """``(A_cl, A_pt)`` from the at-the-money Black-Scholes prices."""
    d = derive_skew(vol)
    c = bs_call(1.0, 1.0, T, vol.sigma1)
    pt = bs_put(1.0, 1.0, T, vol.sigma2)
    mid = d.p * c + d.q * pt
    return mid / (2.0 * d.p * c), mid / (2.0 * d.q * pt)


def adjusted_prices(K: float, T: float, vol: TwoValuedVol, S0: float = 1.0) -> ApproxPrices:
    """Raw and parity-adjusted approximations at strike ``K``.

    Both raw formulas are evaluated at every strike; which one is meaningful
    depends on the side of the barrier ``K`` falls on.
    """
    _check_spot(S0)
    if not K > 0 or not T > 0:
        raise DomainError("K and T must be positive")
    d = derive_skew(vol)
    call_raw = 2.0 * d.p * bs_call(1.0, K, T, vol.sigma1)
    put_raw = 2.0 * d.q * bs_put(1.0, K, T, vol.sigma2)
    a_cl, a_pt = adjustment_factors(T, vol)
    return ApproxPrices(call_raw, put_raw, a_cl * call_raw, a_pt * put_raw, a_cl, a_pt)
