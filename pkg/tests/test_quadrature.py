import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from skewbm.errors import ConvergenceError, DomainError
from skewbm.quadrature import IntegrationSpec, integrate_1d, integrate_2d
from skewbm.special_fn import first_passage_density, std_normal_cdf, std_normal_pdf


def test_inverse_sqrt():
    val, err = integrate_1d(lambda s: s ** -0.5, IntegrationSpec(0.0, 1.0, singular_lower=True))
    assert abs(val - 2.0) < 1e-10
    assert err >= 0


def test_first_passage_mass():
    val, _ = integrate_1d(lambda s: first_passage_density(s, 1.0), IntegrationSpec(0.0, math.inf))
    assert abs(val - 1.0) < 1e-8


def test_constant():
    assert integrate_1d(lambda s: np.ones_like(s), IntegrationSpec(0.0, 1.0))[0] == 1.0
    assert integrate_2d(lambda x, y: np.ones_like(y), IntegrationSpec(0, 1), IntegrationSpec(0, 1))[0] == 1.0


def test_product_normal():
    val, _ = integrate_2d(lambda x, y: std_normal_pdf(x) * std_normal_pdf(y),
                          IntegrationSpec(-3, 3), IntegrationSpec(-3, 3))
    assert abs(val - (std_normal_cdf(3) - std_normal_cdf(-3)) ** 2) < 1e-10


def test_2d_against_monte_carlo():
    # int_{x > 0.2} int_{l > 0} h(1, l/2 + x) h(1, l/2 + 0.3) dl dx
    f = lambda x, l: first_passage_density(1.0, 0.5 * l + x) * first_passage_density(1.0, 0.5 * l + 0.3)
    val, _ = integrate_2d(f, IntegrationSpec(0.2, math.inf), IntegrationSpec(0.0, math.inf))
    rng = np.random.default_rng(11)
    x = 0.2 + rng.exponential(1.0, 400_000)
    l = rng.exponential(2.0, 400_000)
    w = f(x, l) * np.exp(x - 0.2) * 2.0 * np.exp(l / 2.0)
    assert abs(w.mean() - val) < 3 * w.std() / math.sqrt(len(w))


def test_spec_validation():
    with pytest.raises(DomainError):
        IntegrationSpec(1.0, 0.0)
    with pytest.raises(DomainError):
        IntegrationSpec(0.0, 1.0, abs_tol=0.0, rel_tol=0.0)


def test_convergence_error_carries_estimate():
    spec = IntegrationSpec(0.0, 1.0, abs_tol=1e-15, rel_tol=0.0, max_subdivisions=2)
    with pytest.raises(ConvergenceError) as info:
        integrate_1d(lambda x: np.abs(np.sin(40 * x)), spec)
    assert math.isfinite(info.value.value)
    assert info.value.err_estimate > 0


def test_deterministic():
    f = lambda x: np.exp(-x) * np.cos(3 * x)
    spec = IntegrationSpec(0.0, math.inf)
    assert integrate_1d(f, spec) == integrate_1d(f, spec)


@given(st.floats(-3, 3), st.floats(-3, 3))
def test_linearity(a, b):
    spec = IntegrationSpec(0.0, 2.0)
    f = lambda x: np.exp(-x * x)
    g = lambda x: np.sin(x) + 2
    lhs = integrate_1d(lambda x: a * f(x) + b * g(x), spec)[0]
    rhs = a * integrate_1d(f, spec)[0] + b * integrate_1d(g, spec)[0]
    assert abs(lhs - rhs) < 1e-9 * (1 + abs(a) + abs(b))


@given(st.floats(0.05, 1.95))
def test_additivity(c):
    f = lambda x: 1 / np.sqrt(x) * np.exp(-x)
    whole = integrate_1d(f, IntegrationSpec(0.0, 2.0, singular_lower=True))[0]
    left = integrate_1d(f, IntegrationSpec(0.0, c, singular_lower=True))[0]
    right = integrate_1d(f, IntegrationSpec(c, 2.0))[0]
    assert abs(whole - left - right) < 1e-9
