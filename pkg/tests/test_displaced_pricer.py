import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from skewbm.displaced_pricer import DisplacedParams, displaced_knock_in_call, i_tilde_closed
from skewbm.errors import DomainError
from skewbm.exact_pricer import G1Args, G1_closed, OptionSpec, knock_in_call_below
from skewbm.lvm_map import TwoValuedVol, derive_skew
from skewbm.mc_oracles import displaced_call_mc
from skewbm.validation import i_tilde_oracle

PARAMS = DisplacedParams(0.5, 0.9, 0.4)


def test_frozen_prices():
    assert displaced_knock_in_call(0.8, 1.3, 2.0, PARAMS).price == pytest.approx(0.09140710326081485, abs=1e-10)
    other = DisplacedParams(0.5, 0.9, -0.5)
    assert displaced_knock_in_call(0.8, 1.3, 2.0, other).price == pytest.approx(0.22266138934405563, abs=1e-10)


def test_zero_shift_reduces():
    d = DisplacedParams(0.5, 0.9, 0.0)
    ref = derive_skew(TwoValuedVol(0.5, 0.9))
    assert d.p == ref.p
    assert d.b == pytest.approx(0.0, abs=1e-16)
    assert d.k(1.2) == math.log(1.2) / 0.5
    assert d.x0(0.8) == math.log(0.8) / 0.9
    price = displaced_knock_in_call(0.8, 1.2, 2.0, d).price
    assert abs(price - knock_in_call_below(OptionSpec(0.8, 1.2, 2.0), TwoValuedVol(0.5, 0.9)).price) < 5e-4


@given(st.floats(0.05, 2.0), st.floats(0.05, 2.0), st.floats(-3.0, 0.95))
def test_b_vanishes_only_without_shift(s1, s2, alpha1):
    d = DisplacedParams(s1, s2, alpha1)
    assert d.p * d.sigma1 * (1 - alpha1) == pytest.approx(d.q * d.sigma2, rel=1e-12)
    if abs(alpha1) > 1e-6:
        assert abs(d.b) > 0
    assert d.b == pytest.approx(-0.5 * d.p * s1 * alpha1, rel=1e-9, abs=1e-15)


@given(st.floats(0.05, 5.0))
def test_coordinate_round_trip(S):
    assert float(PARAMS.from_skew(PARAMS.to_skew(S))) == pytest.approx(S, rel=1e-12)


@pytest.mark.parametrize("a,v,y", [(-0.25, 0.3, 0.0), (0.25, 1.0, 0.5), (0.0, 1.7, 1.2)])
def test_i_tilde_against_quadrature(a, v, y):
    k = PARAMS.k(1.3)
    closed = i_tilde_closed(PARAMS.b, a, v, y, PARAMS, 2.0, k)
    assert abs(closed - i_tilde_oracle(PARAMS.b, a, v, y, PARAMS.p, 2.0, k)) < 1e-6


@pytest.mark.parametrize("a,v,y", [(-0.25, 0.3, 0.2), (0.25, 1.0, 0.5), (0.1, 1.7, 1.2)])
def test_i_tilde_matches_G1_without_shift(a, v, y):
    d = DisplacedParams(0.5, 0.9, 0.0)
    p, q, T, k = d.p, d.q, 2.0, 0.8
    u = T - v
    w = -a * p / q
    scale = math.exp(-(v * a * a / 2 + u / 2 * (a * p / q) ** 2 - a * y * p / q))
    assert i_tilde_closed(0.0, a, v, y, d, T, k) * scale == pytest.approx(G1_closed(G1Args(a, v, y, w), p, k, T),
                                                                          rel=1e-9, abs=1e-12)


def test_i_tilde_tail():
    assert abs(i_tilde_closed(PARAMS.b, 0.25, 1.0, 50.0, PARAMS, 2.0, PARAMS.k(1.3))) < 1e-10


def test_i_tilde_domain():
    with pytest.raises(DomainError):
        i_tilde_closed(0.0, 0.1, 2.0, 0.5, PARAMS, 2.0, 0.5)
    with pytest.raises(DomainError):
        i_tilde_closed(0.0, 0.1, 1.0, -0.5, PARAMS, 2.0, 0.5)


def test_increasing_in_lower_vol():
    vals = [displaced_knock_in_call(0.8, 1.3, 2.0, DisplacedParams(0.5, s2, 0.4)).price for s2 in (0.7, 0.9, 1.1)]
    assert vals[0] < vals[1] < vals[2]


def test_monte_carlo():
    ref = displaced_knock_in_call(0.8, 1.3, 2.0, PARAMS).price
    m, se = displaced_call_mc(0.8, 1.3, 2.0, 0.5, 0.9, 0.4, paths=100_000, steps=200, seed=7)
    assert abs(m - ref) < 3 * se


def test_preconditions():
    with pytest.raises(DomainError):
        displaced_knock_in_call(1.1, 1.3, 2.0, PARAMS)
    with pytest.raises(DomainError):
        displaced_knock_in_call(0.8, 0.9, 2.0, PARAMS)
    with pytest.raises(DomainError):
        DisplacedParams(0.5, 0.9, 1.0)
    with pytest.raises(DomainError):
        DisplacedParams(-0.5, 0.9, 0.0)
