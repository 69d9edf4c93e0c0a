import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from skewbm.errors import DomainError
from skewbm.lvm_map import TwoValuedVol, derive_skew, from_skew, to_skew

vols = st.floats(0.01, 3.0)
FIG1 = TwoValuedVol(0.5, 0.9)


def test_to_skew_examples():
    assert to_skew(1.0, FIG1) == 0.0
    assert to_skew(math.exp(0.5), FIG1) == pytest.approx(1.0, rel=1e-15)
    for S in (0.3, 1.0, 2.7):
        assert from_skew(to_skew(S, FIG1), FIG1) == pytest.approx(S, rel=1e-15)


def test_from_skew_examples():
    assert from_skew(0.0, FIG1) == 1.0
    assert from_skew(1.0, FIG1) == pytest.approx(1.6487213, abs=1e-7)
    assert from_skew(-1.0, FIG1) == pytest.approx(0.4065697, abs=1e-7)


def test_bad_prices():
    with pytest.raises(DomainError):
        to_skew(0.0, FIG1)
    with pytest.raises(DomainError):
        to_skew(np.array([1.0, -2.0]), FIG1)
    with pytest.raises(DomainError):
        TwoValuedVol(0.0, 0.5)
    with pytest.raises(DomainError):
        TwoValuedVol(0.5, math.inf)


def test_fig1_skew():
    d = derive_skew(FIG1)
    assert d.p == pytest.approx(9 / 14, rel=1e-15)
    assert d.p + d.q == 1.0
    assert (d.mu1, d.mu2) == (-0.25, -0.45)
    assert d.lambda1 == pytest.approx(0.5 ** 2 / 8)


def test_flat():
    d = derive_skew(TwoValuedVol(0.7, 0.7))
    assert d.p == 0.5
    assert d.mu1 == d.mu2


@given(vols, vols)
def test_local_time_free_drift(s1, s2):
    d = derive_skew(TwoValuedVol(s1, s2))
    assert abs(d.p * d.mu1 - d.q * d.mu2) <= 1e-15 * (s1 + s2)
    assert d.p * s1 == pytest.approx(d.q * s2, rel=1e-14)


@given(vols, vols, st.floats(-5, 5), st.floats(-5, 5))
def test_monotone_bijection(s1, s2, a, b):
    vol = TwoValuedVol(s1, s2)
    Sa, Sb = math.exp(a), math.exp(b)
    xa, xb = to_skew(Sa, vol), to_skew(Sb, vol)
    assert np.sign(xa) == np.sign(Sa - 1.0)
    if a < b:
        assert xa <= xb
    assert from_skew(xa, vol) == pytest.approx(Sa, rel=1e-12)
