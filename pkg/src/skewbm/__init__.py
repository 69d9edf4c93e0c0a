"""Skew Brownian motion densities and two-valued local volatility pricing."""

from .errors import ConfigError, ConvergenceError, DomainError
from .lvm_map import TwoValuedVol, derive_skew, from_skew, to_skew
from .exact_pricer import OptionSpec, PriceResult, call_price, put_price, price, implied_vol, smile
from .estimators import DisplacedDiffusionPricer, ImpliedVolSmile, TwoValuedLVMPricer

__version__ = "0.1.0"

__all__ = [
    "ConfigError",
    "ConvergenceError",
    "DomainError",
    "TwoValuedVol",
    "derive_skew",
    "to_skew",
    "from_skew",
    "OptionSpec",
    "PriceResult",
    "call_price",
    "put_price",
    "price",
    "implied_vol",
    "smile",
    "TwoValuedLVMPricer",
    "DisplacedDiffusionPricer",
    "ImpliedVolSmile",
]
