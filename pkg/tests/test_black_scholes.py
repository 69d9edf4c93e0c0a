import math

import pytest
from hypothesis import given, strategies as st

from skewbm.black_scholes import bs_call, bs_price, bs_put, implied_vol
from skewbm.errors import ConvergenceError, DomainError


@given(st.floats(0.2, 5), st.floats(0.2, 5), st.floats(0.01, 5), st.floats(0.01, 2))
def test_parity(S0, K, T, sigma):
    assert abs(bs_call(S0, K, T, sigma) - bs_put(S0, K, T, sigma) - (S0 - K)) < 1e-12 * max(S0, K)


def test_atm_value():
    # S0 (2 Phi(sigma sqrt(T) / 2) - 1)
    assert bs_call(1.0, 1.0, 2.0, 0.5) == pytest.approx(math.erf(0.5 * math.sqrt(2) / 2 / math.sqrt(2)), rel=1e-14)


def test_zero_vol_is_intrinsic():
    assert bs_call(1.2, 1.0, 1.0, 0.0) == pytest.approx(0.2)
    assert bs_put(1.2, 1.0, 0.0, 0.3) == 0.0


@given(st.floats(0.05, 1.5), st.floats(0.6, 1.6), st.floats(0.1, 3), st.sampled_from(["call", "put"]))
def test_implied_vol_round_trip(sigma, K, T, kind):
    price = bs_price(1.0, K, T, sigma, kind)
    intrinsic = max(1.0 - K, 0.0) if kind == "call" else max(K - 1.0, 0.0)
    if price - intrinsic < 1e-9:
        return
    assert implied_vol(price, 1.0, K, T, kind) == pytest.approx(sigma, rel=1e-6)


def test_implied_vol_errors():
    with pytest.raises(DomainError):
        implied_vol(1.5, 1.0, 1.0, 1.0, "call")
    with pytest.raises(DomainError):
        bs_price(1.0, 1.0, 1.0, 0.2, "digital")
    with pytest.raises(ConvergenceError):
        implied_vol(0.9999, 1.0, 1.0, 1.0, "call")
