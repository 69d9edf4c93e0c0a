"""Knock-in calls under a displaced diffusion with a volatility switch at 1.

``dS = sigma1 (S - alpha1) dW`` on ``S >= 1`` and ``dS = sigma2 S dW`` below.
The map ``x = log((S - alpha1)/(1 - alpha1))/sigma1`` above and
``log(S)/sigma2`` below turns ``S`` into skew Brownian motion with
``p = sigma2/(sigma2 + sigma1 (1 - alpha1))`` and drifts ``-sigma_i/2``.
Unlike the undisplaced case the Girsanov weight keeps a local time term
with rate ``b = (q sigma2 - p sigma1)/2``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError
from .exact_pricer import PriceResult, _result
from .quadrature import IntegrationSpec, integrate_1d
from .special_fn import bivariate_normal_cdf, std_normal_cdf

__all__ = ["DisplacedParams", "i_tilde_closed", "displaced_knock_in_call"]


@dataclass(frozen=True)
class DisplacedParams:
    sigma1: float
    sigma2: float
    alpha1: float = 0.0

    def __post_init__(self):
        for name in ("sigma1", "sigma2"):
            val = getattr(self, name)
            if not (math.isfinite(val) and val > 0):
                raise DomainError(f"{name} must be positive, got {val!r}")
        if not (math.isfinite(self.alpha1) and self.alpha1 < 1.0):
            raise DomainError(f"alpha1 must be below 1, got {self.alpha1!r}")

    @property
    def p(self) -> float:
        return self.sigma2 / (self.sigma2 + self.sigma1 * (1.0 - self.alpha1))

    @property
    def q(self) -> float:
        return 1.0 - self.p

    @property
    def b(self) -> float:
        return 0.5 * (self.q * self.sigma2 - self.p * self.sigma1)

    def k(self, K: float) -> float:
        if not K > 1.0:
            raise DomainError("strike must exceed the barrier 1")
        return math.log((K - self.alpha1) / (1.0 - self.alpha1)) / self.sigma1

    def x0(self, S0: float) -> float:
        if not 0.0 < S0:
            raise DomainError("spot must be positive")
        return math.log(S0) / self.sigma2

    def to_skew(self, S):
        S = np.asarray(S, dtype=float)
        with np.errstate(invalid="ignore", divide="ignore"):
            up = np.log((S - self.alpha1) / (1.0 - self.alpha1)) / self.sigma1
            down = np.log(S) / self.sigma2
        return np.where(S >= 1.0, up, down)

    def from_skew(self, x):
        x = np.asarray(x, dtype=float)
        up = self.alpha1 + (1.0 - self.alpha1) * np.exp(self.sigma1 * x)
        return np.where(x >= 0.0, up, np.exp(self.sigma2 * x))


def i_tilde_closed(b: float, a: float, v: float, y: float, params: DisplacedParams, T: float, k: float) -> float:
    """``int_k^inf int_0^inf exp(-a x - b l) h(v, lp + x) h(T - v, lq + y) dl dx``."""
    if not 0.0 < v < T:
        raise DomainError("need 0 < v < T")
    if y < 0:
        raise DomainError("need y >= 0")
    p, q = params.p, params.q
    u = T - v
    nu = -(a * p - b) / q
    A = nu * math.sqrt(u)
    B = a * math.sqrt(v)
    X = (nu * u + y) / math.sqrt(u)
    Y = (q * (k + a * v) - p * (nu * u + y)) / (q * math.sqrt(v))
    gamma = (p / q) * math.sqrt(u / v)
    g2 = 1.0 + gamma * gamma
    g = math.sqrt(g2)
    tail = std_normal_cdf(-(g2 * X + gamma * Y) / g)
    ey = math.exp(-Y * Y / (2.0 * g2))
    inner = (
        math.exp(-(X * X + (Y + gamma * X) ** 2) / 2.0) / (2.0 * math.pi * g2)
        - B * math.exp(-X * X / 2.0) * std_normal_cdf(-Y - gamma * X) / math.sqrt(2.0 * math.pi)
        + (-A + B * gamma - gamma * Y / g2) * ey * tail / math.sqrt(2.0 * math.pi * g2)
    )
    if A * B != 0.0:
        inner += A * B * bivariate_normal_cdf(-X, -Y / g, -gamma / g)
    # exponent and pdf terms combined so large y underflows to 0 instead of inf * 0
    log_pref = nu * nu * u / 2.0 + a * a * v / 2.0 + nu * y
    if inner == 0.0:
        return 0.0
    sign = 1.0 if inner > 0 else -1.0
    return sign * math.exp(log_pref + math.log(abs(inner))) / (q * math.sqrt(u * v))


def displaced_knock_in_call(S0: float, K: float, T: float, params: DisplacedParams) -> PriceResult:
    """Call with strike ``K > 1`` for a spot ``S0 < 1`` below the barrier."""
    if not (0.0 < S0 < 1.0):
        raise DomainError("displaced_knock_in_call needs 0 < S0 < 1")
    if not K > 1.0:
        raise DomainError("displaced_knock_in_call needs K > 1")
    if not T > 0:
        raise DomainError("T must be positive")
    s1, s2 = params.sigma1, params.sigma2
    lam1, lam2 = s1 * s1 / 8.0, s2 * s2 / 8.0
    x0 = params.x0(S0)
    y = abs(x0)
    k = params.k(K)
    b = params.b
    ek = math.exp(s1 * k)

    def integrand(vs):
        out = np.empty(len(vs))
        for i, v in enumerate(vs):
            if not 0.0 < v < T:
                out[i] = 0.0
                continue
            w = math.exp(-lam1 * v - lam2 * (T - v))
            out[i] = w * (
                i_tilde_closed(b, -s1 / 2.0, v, y, params, T, k)
                - ek * i_tilde_closed(b, s1 / 2.0, v, y, params, T, k)
            )
        return out

    val, err = integrate_1d(integrand, IntegrationSpec(0.0, T, abs_tol=1e-10, rel_tol=1e-9))
    pref = 2.0 * params.p * (1.0 - params.alpha1) * math.exp(s2 * x0 / 2.0)
    return _result(pref * val, "closed_form", pref * err)
