"""scikit-learn style wrappers around the pricers.

``fit`` validates the model parameters and stores the derived skew
quantities; ``predict`` prices rows of ``(S0, K, T)``.  Nothing is learned
from data, so ``fit`` ignores ``X`` and ``y``.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, RegressorMixin, TransformerMixin
from sklearn.utils.validation import check_array, check_is_fitted

from .displaced_pricer import DisplacedParams, displaced_knock_in_call
from .errors import DomainError
from .exact_pricer import OptionSpec, implied_vol, price
from .lvm_map import TwoValuedVol, derive_skew

__all__ = ["TwoValuedLVMPricer", "DisplacedDiffusionPricer", "ImpliedVolSmile", "check_contracts"]


def check_contracts(X) -> np.ndarray:
    """Validate a contract matrix with columns ``(S0, K, T)``."""
    X = check_array(X, dtype=float, ensure_2d=True)
    if X.shape[1] != 3:
        raise DomainError(f"expected 3 columns (S0, K, T), got {X.shape[1]}")
    if np.any(X <= 0):
        raise DomainError("S0, K and T must be positive")
    return X


class TwoValuedLVMPricer(RegressorMixin, BaseEstimator):
    def __init__(self, sigma1=0.5, sigma2=0.9, kind="call"):
        self.sigma1 = sigma1
        self.sigma2 = sigma2
        self.kind = kind

    def fit(self, X=None, y=None):
        if self.kind not in ("call", "put"):
            raise DomainError(f"kind must be 'call' or 'put', got {self.kind!r}")
        self.vol_ = TwoValuedVol(float(self.sigma1), float(self.sigma2))
        d = derive_skew(self.vol_)
        self.p_, self.q_ = d.p, d.q
        self.mu_ = (d.mu1, d.mu2)
        self.lambda_ = (d.lambda1, d.lambda2)
        return self

    def predict(self, X):
        check_is_fitted(self, "vol_")
        X = check_contracts(X)
        return np.array([price(OptionSpec(s0, k, t, self.kind), self.vol_).price for s0, k, t in X])


class DisplacedDiffusionPricer(RegressorMixin, BaseEstimator):
    """Calls with ``K > 1`` from spots ``S0 < 1`` in the displaced model."""

    def __init__(self, sigma1=0.5, sigma2=0.9, alpha1=0.0):
        self.sigma1 = sigma1
        self.sigma2 = sigma2
        self.alpha1 = alpha1

    def fit(self, X=None, y=None):
        self.params_ = DisplacedParams(float(self.sigma1), float(self.sigma2), float(self.alpha1))
        self.p_ = self.params_.p
        self.b_ = self.params_.b
        return self

    def predict(self, X):
        check_is_fitted(self, "params_")
        X = check_contracts(X)
        return np.array([displaced_knock_in_call(s0, k, t, self.params_).price for s0, k, t in X])


class ImpliedVolSmile(TransformerMixin, BaseEstimator):
    """Map ``(S0, K, T)`` rows to Black-Scholes implied volatilities.

    Calls are inverted for ``K >= S0`` and puts below, matching
    :func:`skewbm.exact_pricer.smile` at ``S0 = 1``.
    """

    def __init__(self, sigma1=0.5, sigma2=0.9):
        self.sigma1 = sigma1
        self.sigma2 = sigma2

    def fit(self, X=None, y=None):
        self.vol_ = TwoValuedVol(float(self.sigma1), float(self.sigma2))
        return self

    def transform(self, X):
        check_is_fitted(self, "vol_")
        X = check_contracts(X)
        out = np.empty((X.shape[0], 1))
        for i, (s0, k, t) in enumerate(X):
            spec = OptionSpec(s0, k, t, "call" if k >= s0 else "put")
            out[i, 0] = implied_vol(price(spec, self.vol_).price, spec)
        return out
