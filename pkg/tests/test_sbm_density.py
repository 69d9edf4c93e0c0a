import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy import integrate

from skewbm.errors import DomainError
from skewbm.sbm_density import (
    JointDensityPoint,
    SkewParams,
    girsanov_weight,
    occupation_cell_probabilities,
    occupation_from_v,
    phi,
    phi_occupation,
    psi,
    trivariate_rho,
)
from skewbm.validation import quartet_mass

P = 9 / 14
LVM_DRIFTS = SkewParams(P, -0.25, -0.45, 2.0)


def interior_points(rng, k, T):
    t = rng.uniform(0.05, 0.95, k) * T
    v = t * rng.uniform(0.05, 0.95, k)
    x = rng.uniform(-2, 2, k)
    l = rng.uniform(0.05, 2, k)
    return t, v, x, l


def test_zero_local_time():
    assert psi(1.0, 0.4, 0.3, 0.0, P, 2.0) == 0.0


def test_sign_ratio():
    rng = np.random.default_rng(3)
    t, v, x, l = interior_points(rng, 20, 2.0)
    x = np.abs(x)
    ratio = psi(t, v, x, l, P, 2.0) / psi(t, v, -x, l, P, 2.0)
    assert np.allclose(ratio, P / (1 - P), rtol=1e-13)


def test_boundary_is_zero():
    for args in ((1.0, 0.0, 0.3, 0.5), (1.0, 1.0, 0.3, 0.5), (2.0, 1.0, 0.3, 0.5), (1.0, 0.5, 0.0, 0.5)):
        assert psi(*args, P, 2.0) == 0.0


def test_domain_errors():
    with pytest.raises(DomainError):
        psi(1.0, 1.5, 0.3, 0.5, P, 2.0)
    with pytest.raises(DomainError):
        psi(1.0, 0.5, 0.3, -0.1, P, 2.0)
    with pytest.raises(DomainError):
        phi_occupation(1.0, 0.5, 0.3, 0.5, LVM_DRIFTS)  # x >= 0 needs u >= T - t
    with pytest.raises(DomainError):
        trivariate_rho(2.0, 0.3, 0.5, P, 2.0)
    with pytest.raises(DomainError):
        SkewParams(1.0)


@pytest.mark.parametrize("p,T", [(0.5, 1.0), (9 / 14, 2.0)])
def test_psi_normalised(p, T):
    assert abs(quartet_mass(lambda t, v, x, l: psi(t, v, x, l, p, T), p, T) - 1) < 1e-3


def test_phi_normalised():
    assert abs(quartet_mass(lambda t, v, x, l: phi(t, v, x, l, LVM_DRIFTS), P, 2.0) - 1) < 1e-3


def test_zero_drift_phi_is_psi():
    rng = np.random.default_rng(4)
    t, v, x, l = interior_points(rng, 20, 2.0)
    assert np.array_equal(phi(t, v, x, l, SkewParams(P, 0, 0, 2.0)), psi(t, v, x, l, P, 2.0))


def test_lvm_drift_weight_has_no_local_time():
    assert abs(LVM_DRIFTS.local_time_rate) < 1e-15
    w = girsanov_weight(0.0, 0.7, 1.1, np.array([0.1, 0.5, 2.0]), LVM_DRIFTS)
    assert np.allclose(w, w[0], rtol=1e-14, atol=0)


def test_phi_is_psi_times_weight():
    rng = np.random.default_rng(5)
    t, v, x, l = interior_points(rng, 20, 2.0)
    params = SkewParams(0.3, 0.4, -0.2, 2.0)
    u = occupation_from_v(t, v, x, 2.0)
    ref = psi(t, v, x, l, 0.3, 2.0) * girsanov_weight(0.0, x, u, l, params)
    assert np.allclose(phi(t, v, x, l, params), ref, rtol=1e-13, atol=0)


def test_occupation_form_matches_phi():
    rng = np.random.default_rng(6)
    t, v, x, l = interior_points(rng, 20, 2.0)
    u = occupation_from_v(t, v, x, 2.0)
    assert np.allclose(phi_occupation(t, u, x, l, LVM_DRIFTS), phi(t, v, x, l, LVM_DRIFTS), rtol=1e-13, atol=0)


def test_constant_drift_weight():
    rng = np.random.default_rng(7)
    m, T, p = 0.3, 2.0, 0.4
    params = SkewParams(p, m, m, T)
    x = rng.uniform(-2, 2, 10)
    w = rng.uniform(0, T, 10)
    l = rng.uniform(0, 2, 10)
    ref = np.exp(-m * m * T / 2 + x * m - l * m * (p - (1 - p)))
    assert np.allclose(girsanov_weight(0.0, x, w, l, params), ref, rtol=1e-13)


def test_weight_zero_drift():
    assert girsanov_weight(0.0, 0.4, 0.5, 0.3, SkewParams(0.4, 0.0, 0.0, 1.0)) == 1.0


def test_occupation_from_v():
    assert occupation_from_v(2, 1, 1.0, 3) == 2
    assert occupation_from_v(2, 1, -1.0, 3) == 1
    assert occupation_from_v(3, 1, 1.0, 3) == occupation_from_v(3, 1, -1.0, 3) == 1
    assert JointDensityPoint(2, 1, 1.0, 0.3).u(3) == 2


def _rho_by_t(u, x, l, p, T):
    lo = T - u if x >= 0 else u
    params = SkewParams(p, 0.0, 0.0, T)
    return integrate.quad(lambda t: phi_occupation(t, u, x, l, params), lo, T, epsabs=1e-13, epsrel=1e-11,
                          limit=200)[0]


def test_trivariate_is_t_marginal():
    rho = _rho_by_t(0.6, 0.4, 0.7, P, 2.0)
    assert abs(rho - trivariate_rho(0.6, 0.4, 0.7, P, 2.0)) < 1e-6


def test_trivariate_normalised():
    # u = T sin^2 on the outside, (x, l) on Gauss-Legendre in diffusive units
    p, T = 0.3, 1.0
    q = 1 - p
    gx, gw = np.polynomial.legendre.leggauss(64)
    z, zw = 6 * (gx + 1), 6 * gw
    xi, eta = np.meshgrid(z, z, indexing="ij")
    wts = np.outer(zw, zw)

    def inner(th):
        u = T * math.sin(th) ** 2
        sl = 1 / math.sqrt(p * p / u + q * q / (T - u))
        l = sl * eta
        pos = trivariate_rho(u, math.sqrt(u) * xi, l, p, T) * math.sqrt(u)
        neg = trivariate_rho(u, -math.sqrt(T - u) * xi, l, p, T) * math.sqrt(T - u)
        return 2 * T * math.sin(th) * math.cos(th) * sl * float(np.sum(wts * (pos + neg)))

    tot = integrate.quad(inner, 0, math.pi / 2, epsabs=1e-10)[0]
    assert abs(tot - 1) < 1e-3


@given(st.floats(0.05, 0.95), st.floats(0.05, 0.95), st.floats(-2, 2), st.floats(0, 3))
def test_densities_nonnegative(a, b, x, l):
    t = a * 2.0
    v = b * t
    assert psi(t, v, x, l, P, 2.0) >= 0
    assert phi(t, v, x, l, LVM_DRIFTS) >= 0


def test_cell_probabilities_against_brute_force():
    te, ue, xe, le = [0.5, 0.7], [0.5, 0.725], [0.1, 0.5], [0.4875, 0.825]
    params = SkewParams(P, -0.25, -0.45, 1.0)
    cell = occupation_cell_probabilities(te, ue, xe, le, params)
    g = np.polynomial.legendre.leggauss(24)

    def nodes(a, b):
        return 0.5 * (b - a) * g[0] + 0.5 * (a + b), 0.5 * (b - a) * g[1]

    (tn, tw), (un, uw), (xn, xw), (ln, lw) = nodes(*te), nodes(*ue), nodes(*xe), nodes(*le)
    T4 = np.meshgrid(tn, un, xn, ln, indexing="ij")
    W = np.einsum("i,j,k,l->ijkl", tw, uw, xw, lw)
    dens = phi_occupation(*T4, params)
    brute = float(np.sum(W * dens))
    assert cell.shape == (1, 1, 1, 1)
    assert cell[0, 0, 0, 0] == pytest.approx(brute, rel=1e-5)


def test_cell_probabilities_sum_below_one():
    params = SkewParams(0.5, 0.0, 0.0, 1.0)
    cells = occupation_cell_probabilities(np.linspace(0, 1, 5), np.linspace(0, 1, 5), [-3, -1, 0, 1, 3],
                                          np.linspace(0, 3, 5), params)
    assert np.all(cells >= 0)
    assert 0.9 < cells.sum() <= 1.0 + 1e-9


def test_cell_x_edges_must_not_straddle_zero():
    with pytest.raises(DomainError):
        occupation_cell_probabilities([0, 1], [0, 1], [-1, 1], [0, 1], SkewParams(0.5))
