"""Scalar special functions used by the densities and pricing formulas.

All functions accept Python floats or numpy arrays and broadcast in the
usual numpy way.  ``math.inf`` is accepted wherever a cdf argument is
allowed to be infinite.
"""

from __future__ import annotations

import math
from functools import lru_cache

import numpy as np
from scipy.special import ndtr

from .errors import DomainError

SQRT_2PI = math.sqrt(2.0 * math.pi)
INV_SQRT_2PI = 1.0 / SQRT_2PI

__all__ = [
    "std_normal_pdf",
    "std_normal_cdf",
    "bivariate_normal_cdf",
    "first_passage_density",
    "drifted_first_passage_density",
    "local_time_kernel_g",
]


def _out(x):
    """Return a Python float for 0-d results, the array otherwise."""
    x = np.asarray(x, dtype=float)
    return float(x) if x.ndim == 0 else x


def std_normal_pdf(x):
    """Standard normal density ``exp(-x**2/2) / sqrt(2*pi)``."""
    x = np.asarray(x, dtype=float)
    return _out(INV_SQRT_2PI * np.exp(-0.5 * x * x))


def std_normal_cdf(z):
    """Standard normal cdf.

    Backed by ``scipy.special.ndtr``, which evaluates through ``erf``/``erfc``
    and keeps full relative precision in both tails.
    """
    return _out(ndtr(np.asarray(z, dtype=float)))


@lru_cache(maxsize=None)
def _gauss_legendre_half(n: int):
    # positive half of the n-point rule on [-1, 1]
    x, w = np.polynomial.legendre.leggauss(n)
    mask = x > 0
    return x[mask], w[mask]


def _bvn_upper(h: float, k: float, r: float) -> float:
    """P(X > h, Y > k) for a standard bivariate normal with correlation r.

    Drezner-Wesolowsky integration as refined by Genz (2004): Gauss-Legendre
    on the arcsine form for |r| < 0.925, and an asymptotic expansion plus
    quadrature of the remainder for high correlation.  Double precision
    accuracy is about 1e-15.
    """
    if h == math.inf or k == math.inf:
        return 0.0
    if h == -math.inf:
        return 1.0 if k == -math.inf else float(ndtr(-k))
    if k == -math.inf:
        return float(ndtr(-h))

    ar = abs(r)
    n = 6 if ar < 0.3 else (12 if ar < 0.75 else 20)
    xs_, ws_ = _gauss_legendre_half(n)
    hk = h * k
    twopi = 2.0 * math.pi

    if ar < 0.925:
        hs = 0.5 * (h * h + k * k)
        asr = math.asin(r)
        sn1 = np.sin(asr * (1.0 - xs_) / 2.0)
        sn2 = np.sin(asr * (1.0 + xs_) / 2.0)
        s = np.sum(ws_ * np.exp((sn1 * hk - hs) / (1.0 - sn1 * sn1)))
        s += np.sum(ws_ * np.exp((sn2 * hk - hs) / (1.0 - sn2 * sn2)))
        return float(s * asr / (4.0 * math.pi) + ndtr(-h) * ndtr(-k))

    if r < 0:
        k = -k
        hk = -hk
    bvn = 0.0
    if ar < 1.0:
        as_ = (1.0 - r) * (1.0 + r)
        a = math.sqrt(as_)
        bs = (h - k) ** 2
        c = (4.0 - hk) / 8.0
        d = (12.0 - hk) / 16.0
        asr = -(bs / as_ + hk) / 2.0
        if asr > -100.0:
            bvn = a * math.exp(asr) * (1.0 - c * (bs - as_) * (1.0 - d * bs / 5.0) / 3.0 + c * d * as_ * as_ / 5.0)
        if hk > -100.0:
            b = math.sqrt(bs)
            sp = math.sqrt(twopi) * float(ndtr(-b / a))
            bvn -= math.exp(-hk / 2.0) * sp * b * (1.0 - c * bs * (1.0 - d * bs / 5.0) / 3.0)
        a /= 2.0
        for sgn in (-1.0, 1.0):
            xs = (a + a * sgn * xs_) ** 2
            rs = np.sqrt(1.0 - xs)
            asr_v = -(bs / xs + hk) / 2.0
            keep = asr_v > -100.0
            if np.any(keep):
                xk, rk, wk = xs[keep], rs[keep], ws_[keep]
                sp_v = 1.0 + c * xk * (1.0 + d * xk)
                ep = np.exp(-hk * xk / (2.0 * (1.0 + rk) ** 2)) / rk
                bvn += float(np.sum(a * wk * np.exp(asr_v[keep]) * (ep - sp_v)))
        bvn = -bvn / twopi
    if r > 0:
        bvn += float(ndtr(-max(h, k)))
    elif h >= k:
        bvn = -bvn
    else:
        lower = float(ndtr(k) - ndtr(h)) if h < 0 else float(ndtr(-h) - ndtr(-k))
        bvn = lower - bvn
    return min(1.0, max(0.0, bvn))


def bivariate_normal_cdf(x, y, rho):
    """P(Z1 <= x, Z2 <= y) for standard normals with correlation ``rho``.

    ``x`` and ``y`` may be ``math.inf``/``-math.inf``.  ``|rho| >= 1`` is a
    degenerate law and raises :class:`DomainError`.
    """
    x_arr, y_arr, r_arr = np.broadcast_arrays(
        np.asarray(x, dtype=float), np.asarray(y, dtype=float), np.asarray(rho, dtype=float)
    )
    if np.any(np.abs(r_arr) >= 1.0) or np.any(np.isnan(r_arr)):
        raise DomainError("bivariate normal cdf needs |rho| < 1")
    if np.any(np.isnan(x_arr)) or np.any(np.isnan(y_arr)):
        raise DomainError("bivariate normal cdf arguments must not be NaN")
    if x_arr.ndim == 0:
        return _bvn_upper(-float(x_arr), -float(y_arr), float(r_arr))
    out = np.empty(x_arr.shape)
    for idx in np.ndindex(x_arr.shape):
        out[idx] = _bvn_upper(-x_arr[idx], -y_arr[idx], r_arr[idx])
    return out


def first_passage_density(s, y):
    """Density at time ``s`` of the first hitting time of 0 by BM started at ``y``.

    ``h(s, y) = |y| / sqrt(2 pi s^3) * exp(-y^2 / (2 s))``.  Underflow for
    small ``s`` returns exactly 0.
    """
    s = np.asarray(s, dtype=float)
    y = np.asarray(y, dtype=float)
    if np.any(s <= 0):
        raise DomainError("first passage density needs s > 0")
    ay = np.abs(y)
    return _out(ay / (SQRT_2PI * s * np.sqrt(s)) * np.exp(-0.5 * ay * ay / s))


def drifted_first_passage_density(t, x, b):
    """Signed drifted kernel ``x / sqrt(2 pi t^3) * exp(-(x + b t)^2 / (2 t))``.

    No absolute value is taken, so the sign of ``x`` carries through.
    """
    t = np.asarray(t, dtype=float)
    x = np.asarray(x, dtype=float)
    b = np.asarray(b, dtype=float)
    if np.any(t <= 0):
        raise DomainError("drifted first passage density needs t > 0")
    z = x + b * t
    return _out(x / (SQRT_2PI * t * np.sqrt(t)) * np.exp(-0.5 * z * z / t))


def local_time_kernel_g(u, v, p):
    """Local time integral ``2 int_0^inf h(v, l p) h(u, l q) dl``.

    Closed form ``p q / (sqrt(2 pi) (p^2 u + q^2 v)^{3/2})``; ``u`` is the
    time spent negative and ``v`` the time spent positive.
    """
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    p = np.asarray(p, dtype=float)
    if np.any((p <= 0) | (p >= 1)):
        raise DomainError("p must lie in (0, 1)")
    if np.any(u < 0) or np.any(v < 0) or np.any((u == 0) & (v == 0)):
        raise DomainError("g(u, v) needs u, v >= 0 and u + v > 0")
    q = 1.0 - p
    base = p * p * u + q * q * v
    return _out(p * q / (SQRT_2PI * base * np.sqrt(base)))
