import math
from fractions import Fraction

import numpy as np
import pytest

from skewbm.errors import DomainError
from skewbm.sbm_density import psi
from skewbm.skew_walk_sim import WalkConfig
from skewbm.validation import (
    DensityGrid,
    dequantize,
    density_chi2,
    enumerate_cycle_probability,
    enumerate_return_pmf,
    ks_distance,
    quartet_mass,
    run_checks,
)


def test_enumeration_small_cases():
    assert enumerate_return_pmf(1, 1) == Fraction(1, 2)
    assert enumerate_return_pmf(2, 2) == Fraction(1, 4)
    # up from 0 with probability p, then down with probability 1/2
    assert enumerate_cycle_probability(1, 1, 1, Fraction(1, 3)) == Fraction(1, 6)
    assert enumerate_cycle_probability(1, 0, 1, Fraction(1, 3)) == Fraction(1, 3)


def test_dequantize_ranges():
    counts = (np.array([0, 2, 10]), np.array([0, 2, 4]), np.array([0, 8, 10]), np.array([1, 2, 5]),
              np.array([-2, 0, 10]))
    d = dequantize(counts, n=100, T=0.1, seed=1)
    assert np.all((d["tau"] >= 0) & (d["tau"] <= 0.1))
    assert np.all(d["l"] >= 0) and np.all(d["l"] <= 0.5)
    assert np.all(np.abs(d["x_T"] * 10 - counts[4]) <= 1)


def test_ks_distance_uniform():
    x = np.linspace(0.0005, 0.9995, 1000)
    assert ks_distance(x, lambda t: np.clip(t, 0, 1)) == pytest.approx(0.0005, abs=1e-9)


def test_quartet_mass_of_psi():
    assert quartet_mass(lambda t, v, x, l: psi(t, v, x, l, 0.3, 1.5), 0.3, 1.5) == pytest.approx(1.0, abs=1e-6)


def test_density_chi2_small():
    cfg = WalkConfig(n=500, T=1.0, p=9 / 14, m1=-0.25, m2=-0.45, seed=5, paths=100_000, zero_correction=True)
    res = density_chi2(cfg)
    assert res.cells == res.df + 1 > 100
    assert 0 < res.extra["mass_observed"] < 1
    assert abs(res.extra["mass_observed"] - res.extra["mass_expected"]) < 0.02


def test_density_grid_checks():
    cfg = WalkConfig(n=4, T=1.0, p=0.5, paths=10)
    with pytest.raises(DomainError):
        density_chi2(cfg)
    with pytest.raises(DomainError):
        density_chi2(WalkConfig(n=500, paths=10), DensityGrid(x=(0.1, 0.5, 1.0)))


def test_run_checks_subset():
    res = run_checks(names=["bivariate_normal_arcsine", "F1_vs_quadrature", "adjusted_parity_atm"])
    assert [r.name for r in res] == ["bivariate_normal_arcsine", "F1_vs_quadrature", "adjusted_parity_atm"]
    assert all(r.passed for r in res)
    assert set(res[0].as_dict()) == {"name", "passed", "value", "reference", "tolerance", "seconds", "detail"}
    with pytest.raises(DomainError):
        run_checks(names=["nope"])
