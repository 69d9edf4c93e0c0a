"""Two-valued local volatility and its skew Brownian coordinates.

With a barrier normalised to 1, ``dS = sigma(S) S dW`` with
``sigma = sigma1`` on ``S >= 1`` and ``sigma2`` below maps under
``x = log(S) / sigma(S)`` to a skew Brownian motion with parameter
``p = sigma2 / (sigma1 + sigma2)`` and drift ``-sigma1/2`` above zero,
``-sigma2/2`` below.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError

__all__ = ["TwoValuedVol", "DerivedSkew", "to_skew", "from_skew", "derive_skew"]


@dataclass(frozen=True)
class TwoValuedVol:
    """Volatility ``sigma1`` on ``S >= 1`` and ``sigma2`` on ``S < 1``."""

    sigma1: float
    sigma2: float

    def __post_init__(self):
        for name in ("sigma1", "sigma2"):
            val = getattr(self, name)
            if not (math.isfinite(val) and val > 0):
                raise DomainError(f"{name} must be a positive finite number, got {val!r}")

    @property
    def is_flat(self) -> bool:
        return self.sigma1 == self.sigma2


@dataclass(frozen=True)
class DerivedSkew:
    p: float
    q: float
    mu1: float
    mu2: float
    lambda1: float
    lambda2: float


def derive_skew(vol: TwoValuedVol) -> DerivedSkew:
    """Skew parameter, drifts and occupation rates implied by ``vol``."""
    s1, s2 = vol.sigma1, vol.sigma2
    p = s2 / (s1 + s2)
    return DerivedSkew(
        p=p,
        q=s1 / (s1 + s2),
        mu1=-0.5 * s1,
        mu2=-0.5 * s2,
        lambda1=s1 * s1 / 8.0,
        lambda2=s2 * s2 / 8.0,
    )


def to_skew(S, vol: TwoValuedVol):
    """Map a price to skew coordinates, ``log(S) / sigma(S)``."""
    S = np.asarray(S, dtype=float)
    if np.any(~(S > 0)):
        raise DomainError("prices must be positive")
    logs = np.log(S)
    x = np.where(S >= 1.0, logs / vol.sigma1, logs / vol.sigma2)
    return float(x) if x.ndim == 0 else x


def from_skew(x, vol: TwoValuedVol):
    """Inverse of :func:`to_skew`."""
    x = np.asarray(x, dtype=float)
    S = np.where(x >= 0.0, np.exp(vol.sigma1 * x), np.exp(vol.sigma2 * x))
    return float(S) if S.ndim == 0 else S
