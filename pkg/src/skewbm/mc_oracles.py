"""Monte Carlo oracles that work directly on the price process.

These do not use the skew coordinates, so they check the coordinate maps
as well as the formulas.  Both use the per-path streams of
:mod:`skewbm.skew_walk_sim`.
"""

from __future__ import annotations

import math

import numpy as np
from numba import njit, prange

from .errors import ConfigError, DomainError
from .skew_walk_sim import _next_normal, _next_uniform, _path_state, _set_threads

__all__ = ["gbm_down_and_out_call_mc", "displaced_call_mc"]


@njit(cache=True, parallel=True)
def _gbm_knock_out(seed, paths, steps, S0, K, T, sigma, out):
    dt = T / steps
    sd = sigma * math.sqrt(dt)
    drift = -0.5 * sigma * sigma * dt
    for j in prange(paths):
        state = _path_state(seed, j)
        y = math.log(S0)
        alive = y > 0.0
        for _ in range(steps):
            if not alive:
                break
            z, state = _next_normal(state)
            y_new = y + drift + sd * z
            if y_new <= 0.0:
                alive = False
            else:
                # bridge between two points above the barrier crosses it with this probability
                u, state = _next_uniform(state)
                if u < math.exp(-2.0 * y * y_new / (sd * sd)):
                    alive = False
            y = y_new
        out[j] = max(math.exp(y) - K, 0.0) if alive else 0.0


def gbm_down_and_out_call_mc(S0: float, K: float, T: float, sigma: float, paths: int = 1_000_000,
                             steps: int = 250, seed: int = 0, workers: int = 1):
    """Down-and-out call (barrier 1) under zero-rate GBM; ``(price, se)``.

    Each step adds the Brownian bridge crossing probability, so the
    estimate has no monitoring bias.
    """
    if not (S0 > 0 and K > 0 and T > 0 and sigma > 0):
        raise DomainError("S0, K, T and sigma must be positive")
    if paths < 2 or steps < 1:
        raise ConfigError("need paths >= 2 and steps >= 1")
    _set_threads(workers)
    out = np.empty(paths)
    _gbm_knock_out(np.uint64(seed), paths, steps, float(S0), float(K), float(T), float(sigma), out)
    return math.fsum(out) / paths, float(np.std(out, ddof=1) / math.sqrt(paths))


@njit(cache=True, inline="always")
def _regime_step(s, dt, rdt, s1, s2, alpha1, z):
    if s >= 1.0:
        return alpha1 + (s - alpha1) * math.exp(-0.5 * s1 * s1 * dt + s1 * rdt * z)
    return s * math.exp(-0.5 * s2 * s2 * dt + s2 * rdt * z)


@njit(cache=True, parallel=True)
def _displaced(seed, paths, steps, S0, T, s1, s2, alpha1, out_fine, out_coarse, hit_fine, hit_coarse):
    # fine path with 4 * steps steps; the coarse path sums groups of four increments
    dt = T / (4 * steps)
    rdt = math.sqrt(dt)
    dtc = 4.0 * dt
    rdtc = 2.0 * rdt
    for j in prange(paths):
        state = _path_state(seed, j)
        sf = S0
        sc = S0
        hf = S0 >= 1.0
        hc = hf
        for _ in range(steps):
            zsum = 0.0
            for _k in range(4):
                z, state = _next_normal(state)
                zsum += z
                sf = _regime_step(sf, dt, rdt, s1, s2, alpha1, z)
                if sf >= 1.0:
                    hf = True
            sc = _regime_step(sc, dtc, rdtc, s1, s2, alpha1, 0.5 * zsum)
            if sc >= 1.0:
                hc = True
        out_fine[j] = sf
        out_coarse[j] = sc
        hit_fine[j] = 1 if hf else 0
        hit_coarse[j] = 1 if hc else 0


def displaced_call_mc(S0: float, K: float, T: float, sigma1: float, sigma2: float, alpha1: float,
                      paths: int = 1_000_000, steps: int = 1000, seed: int = 0, workers: int = 1,
                      knock_in: bool = True, extrapolate: bool = True):
    """Call under ``dS = sigma1 (S - alpha1) dW`` above 1 and ``sigma2 S dW`` below.

    Each step is the exact lognormal move of the regime the step starts in.
    The switch at 1 makes the weak error of order ``sqrt(dt)``, so by
    default the estimate is ``2 P(dt/4) - P(dt)`` from a fine and a coarse
    path driven by the same increments.  ``steps`` is the coarse count.
    With ``knock_in`` the payoff requires a monitored visit to ``S >= 1``.
    Returns ``(price, se)``.
    """
    if not (S0 > 0 and K > 0 and T > 0 and sigma1 > 0 and sigma2 > 0):
        raise DomainError("S0, K, T and volatilities must be positive")
    if not alpha1 < 1.0:
        raise DomainError("alpha1 must be below 1")
    if paths < 2 or steps < 1:
        raise ConfigError("need paths >= 2 and steps >= 1")
    _set_threads(workers)
    sf = np.empty(paths)
    sc = np.empty(paths)
    hf = np.empty(paths, dtype=np.int8)
    hc = np.empty(paths, dtype=np.int8)
    _displaced(np.uint64(seed), paths, steps, float(S0), float(T), float(sigma1), float(sigma2), float(alpha1),
               sf, sc, hf, hc)
    fine = np.maximum(sf - K, 0.0)
    coarse = np.maximum(sc - K, 0.0)
    if knock_in:
        fine = np.where(hf == 1, fine, 0.0)
        coarse = np.where(hc == 1, coarse, 0.0)
    vals = 2.0 * fine - coarse if extrapolate else fine
    return math.fsum(vals) / paths, float(np.std(vals, ddof=1) / math.sqrt(paths))
