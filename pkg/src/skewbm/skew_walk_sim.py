"""Skew random walk Monte Carlo.

The chain on the integers moves up with probability ``p`` from 0 and with
probability ``(1 + m_i/sqrt(n))/2`` elsewhere, ``m1`` above zero and ``m2``
below.  Rescaled by ``1/sqrt(n)`` in space and ``1/n`` in time it converges
to skew Brownian motion with drifts ``(m1, m2)``.

Every path draws from its own splitmix64 stream keyed by ``(seed, path
index)``, so results do not depend on the number of worker threads.

For drifted chains the step from 0 can be shifted to
``p + p q (m1 + m2)/sqrt(n)`` (``zero_correction``).  This matches the
scale function of the limit at order ``1/sqrt(n)`` and removes the leading
bias of prices; without it ``E[S_T] - S0`` is of order ``1/sqrt(n)``.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass
from fractions import Fraction
from math import comb
from typing import Callable, Optional, Sequence, Union

import numba
import numpy as np
from numba import njit, prange

# the bundled TBB is too old on some systems and only produces a warning
if numba.config.THREADING_LAYER == "default":
    numba.config.THREADING_LAYER = "workqueue"

from .errors import ConfigError, DomainError
from .lvm_map import TwoValuedVol, derive_skew, from_skew, to_skew

__all__ = [
    "WalkConfig",
    "PathFunctionals",
    "simulate_paths",
    "first_steps",
    "exact_return_pmf",
    "cycle_mixture_probability",
    "mc_price",
    "mc_density_histogram",
    "HistogramGrid",
    "DensityHistogram",
    "default_workers",
    "lvm_walk_config",
    "mc_terminal",
    "simulate_all",
    "simulate_counts",
]

WORKERS_ENV = "SKEWBM_WORKERS"


def default_workers() -> int:
    raw = os.environ.get(WORKERS_ENV)
    if raw is None:
        return 1
    try:
        val = int(raw)
    except ValueError:
        raise ConfigError(f"{WORKERS_ENV} must be a positive integer, got {raw!r}") from None
    if val < 1:
        raise ConfigError(f"{WORKERS_ENV} must be a positive integer, got {raw!r}")
    return val


@dataclass(frozen=True)
class WalkConfig:
    n: int = 2000
    T: float = 1.0
    p: float = 0.5
    m1: float = 0.0
    m2: float = 0.0
    seed: int = 0
    paths: int = 100_000
    workers: int = 1
    zero_correction: bool = False

    def __post_init__(self):
        if not (isinstance(self.n, (int, np.integer)) and self.n >= 1):
            raise ConfigError(f"n must be a positive integer, got {self.n!r}")
        if not (math.isfinite(self.T) and self.T > 0):
            raise ConfigError(f"T must be positive, got {self.T!r}")
        if round(self.T * self.n) < 1:
            raise ConfigError("T * n must cover at least one step")
        if not 0.0 < self.p < 1.0:
            raise ConfigError(f"p must lie in (0, 1), got {self.p!r}")
        rn = math.sqrt(self.n)
        if abs(self.m1) / rn >= 1.0 or abs(self.m2) / rn >= 1.0:
            raise ConfigError("drifted chain needs |m_i| / sqrt(n) < 1")
        if not (isinstance(self.paths, (int, np.integer)) and self.paths >= 1):
            raise ConfigError(f"paths must be a positive integer, got {self.paths!r}")
        if not (isinstance(self.workers, (int, np.integer)) and self.workers >= 1):
            raise ConfigError(f"workers must be a positive integer, got {self.workers!r}")
        if not (isinstance(self.seed, (int, np.integer)) and 0 <= self.seed < 2 ** 64):
            raise ConfigError("seed must be an integer in [0, 2**64)")
        if self.zero_step_probability() >= 1.0 or self.zero_step_probability() <= 0.0:
            raise ConfigError("corrected zero-step probability left (0, 1); increase n")

    @property
    def steps(self) -> int:
        return int(round(self.T * self.n))

    def zero_step_probability(self) -> float:
        if not self.zero_correction:
            return self.p
        return self.p + self.p * (1.0 - self.p) * (self.m1 + self.m2) / math.sqrt(self.n)


@dataclass(frozen=True)
class PathFunctionals:
    """Rescaled functionals of simulated paths, one array entry per path."""

    tau: np.ndarray
    v: np.ndarray
    u: np.ndarray
    l: np.ndarray
    x_T: np.ndarray

    def __len__(self):
        return len(self.tau)


# ---------------------------------------------------------------------------
# random numbers

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)


@njit(cache=True, inline="always")
def _mix(z):
    z = (z ^ (z >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)
    z = (z ^ (z >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)
    return z ^ (z >> np.uint64(31))


@njit(cache=True, inline="always")
def _path_state(seed, idx):
    return _mix(np.uint64(seed) ^ _mix(np.uint64(idx) * np.uint64(0x9E3779B97F4A7C15) + np.uint64(1)))


@njit(cache=True, inline="always")
def _next_uniform(state):
    # returns (uniform in [0, 1), new state)
    state = state + np.uint64(0x9E3779B97F4A7C15)
    return (_mix(state) >> np.uint64(11)) * (1.0 / 9007199254740992.0), state


@njit(cache=True, inline="always")
def _next_normal(state):
    u1, state = _next_uniform(state)
    u2, state = _next_uniform(state)
    return math.sqrt(-2.0 * math.log(1.0 - u1)) * math.cos(2.0 * math.pi * u2), state


# ---------------------------------------------------------------------------
# kernels


@njit(cache=True, inline="always")
def _threshold(prob):
    # P(u32 < threshold) = prob up to 2**-32
    return np.uint64(min(max(prob, 0.0), 1.0) * 4294967296.0)


@njit(cache=True, inline="always")
def _walk(state, steps, p0, up_pos, up_neg):
    """Run the chain from 0; returns counts and the final position.

    Each 64-bit draw supplies two steps through its 32-bit halves.
    """
    t0 = np.int64(_threshold(p0))
    tp = np.int64(_threshold(up_pos))
    tn = np.int64(_threshold(up_neg))
    mask = np.uint64(0xFFFFFFFF)
    s = 0
    zeros = 1
    last_zero = 0
    pos_edges = 0
    pos_before = 0
    bits = np.uint64(0)
    # branch-free step selection; the up/down branch is unpredictable
    for i in range(steps):
        if i & 1 == 0:
            state = state + np.uint64(0x9E3779B97F4A7C15)
            bits = _mix(state)
            u = np.int64(bits >> np.uint64(32))
        else:
            u = np.int64(bits & mask)
        thr = tn + (s > 0) * (tp - tn) + (s == 0) * (t0 - tn)
        nxt = s + 2 * (u < thr) - 1
        pos_edges += (s >= 0) & (nxt >= 0)
        s = nxt
        if s == 0:
            zeros += 1
            last_zero = i + 1
            pos_before = pos_edges
    return s, zeros, last_zero, pos_before, pos_edges, state


@njit(cache=True, parallel=True)
def _simulate(seed, paths, steps, p0, up_pos, up_neg, first, out_tau, out_v, out_u, out_l, out_x):
    for j in prange(paths):
        state = _path_state(seed, first + j)
        s, zeros, last_zero, pos_before, pos_edges, state = _walk(state, steps, p0, up_pos, up_neg)
        out_tau[j] = last_zero
        out_v[j] = pos_before
        out_u[j] = pos_edges
        out_l[j] = zeros
        out_x[j] = s


@njit(cache=True, parallel=True)
def _first_steps(seed, paths, p0, out):
    for j in prange(paths):
        state = _path_state(seed, j)
        state = state + np.uint64(0x9E3779B97F4A7C15)
        u = _mix(state) >> np.uint64(32)
        out[j] = 1 if u < _threshold(p0) else -1


@njit(cache=True, inline="always")
def _inverse_gaussian(state, mu, lam):
    z, state = _next_normal(state)
    y = z * z
    x = mu + mu * mu * y / (2.0 * lam) - mu / (2.0 * lam) * math.sqrt(4.0 * mu * lam * y + mu * mu * y * y)
    u, state = _next_uniform(state)
    if u <= mu / (mu + x):
        return x, state
    return mu * mu / x, state


@njit(cache=True, inline="always")
def _hitting_time(state, dist, drift_toward):
    """First hitting time of 0 by BM with drift started at distance ``dist``.

    ``drift_toward`` is the drift component pointing at 0.  Returns ``inf``
    if the level is never reached.
    """
    if drift_toward == 0.0:
        z, state = _next_normal(state)
        if z == 0.0:
            return math.inf, state
        return dist * dist / (z * z), state
    if drift_toward < 0.0:
        u, state = _next_uniform(state)
        if u >= math.exp(2.0 * dist * drift_toward):
            return math.inf, state
    return _inverse_gaussian(state, dist / abs(drift_toward), dist * dist)


@njit(cache=True, parallel=True)
def _terminal_from(seed, paths, n, T, x0, m_start, p0, up_pos, up_neg, out_x, out_hit):
    """Terminal values started at ``x0`` (continuum units).

    The excursion until the first visit to 0 is sampled exactly: hitting
    time from the inverse Gaussian law, or, for paths that stay away, the
    endpoint by rejection from the killed Gaussian.  The chain then runs
    from 0 for the remaining steps.
    """
    rn = math.sqrt(n)
    dist = abs(x0)
    side = 1.0 if x0 > 0 else -1.0
    toward = -side * m_start
    for j in prange(paths):
        state = _path_state(seed, j)
        if dist == 0.0:
            t_hit = 0.0
        else:
            t_hit, state = _hitting_time(state, dist, toward)
        if t_hit < T:
            steps = int(round((T - t_hit) * n))
            s, zeros, last_zero, pos_before, pos_edges, state = _walk(state, steps, p0, up_pos, up_neg)
            out_x[j] = s / rn
            out_hit[j] = 1
        else:
            mean = x0 + m_start * T
            sd = math.sqrt(T)
            while True:
                z, state = _next_normal(state)
                xt = mean + sd * z
                if xt * side <= 0.0:
                    continue
                u, state = _next_uniform(state)
                if u >= math.exp(-2.0 * x0 * xt / T):
                    break
            out_x[j] = xt
            out_hit[j] = 0


def _set_threads(workers: int):
    numba.set_num_threads(max(1, min(workers, numba.config.NUMBA_NUM_THREADS)))


def _probs(cfg: WalkConfig):
    rn = math.sqrt(cfg.n)
    return cfg.zero_step_probability(), 0.5 * (1.0 + cfg.m1 / rn), 0.5 * (1.0 + cfg.m2 / rn)


def simulate_paths(cfg: WalkConfig, chunk: Optional[int] = None):
    """Yield :class:`PathFunctionals` blocks for ``cfg.paths`` chains from 0.

    ``tau = tau_n/n`` (last zero), ``v = V_n/n`` (edges with both ends
    ``>= 0`` before the last zero), ``u`` the same count over all edges,
    ``l = L_n/sqrt(n)`` with ``L_n`` the zero visits at steps ``0..[Tn]``,
    and ``x_T = S_[Tn]/sqrt(n)``.  Blocks come in path-index order.
    """
    _set_threads(cfg.workers)
    p0, up_pos, up_neg = _probs(cfg)
    chunk = chunk or min(cfg.paths, 1_000_000)
    n, rn = cfg.n, math.sqrt(cfg.n)
    done = 0
    while done < cfg.paths:
        m = min(chunk, cfg.paths - done)
        tau = np.empty(m, dtype=np.int64)
        v = np.empty(m, dtype=np.int64)
        u = np.empty(m, dtype=np.int64)
        l = np.empty(m, dtype=np.int64)
        x = np.empty(m, dtype=np.int64)
        _simulate(np.uint64(cfg.seed), m, cfg.steps, p0, up_pos, up_neg, done, tau, v, u, l, x)
        yield PathFunctionals(tau / n, v / n, u / n, l / rn, x / rn)
        done += m


def simulate_all(cfg: WalkConfig) -> PathFunctionals:
    blocks = list(simulate_paths(cfg))
    if len(blocks) == 1:
        return blocks[0]
    return PathFunctionals(*(np.concatenate([getattr(b, f) for b in blocks]) for f in ("tau", "v", "u", "l", "x_T")))


def simulate_counts(cfg: WalkConfig):
    """Raw integer counts ``(tau_n, V_n, U_n, L_n, S_N)`` per path."""
    _set_threads(cfg.workers)
    p0, up_pos, up_neg = _probs(cfg)
    arrs = [np.empty(cfg.paths, dtype=np.int64) for _ in range(5)]
    _simulate(np.uint64(cfg.seed), cfg.paths, cfg.steps, p0, up_pos, up_neg, 0, *arrs)
    return tuple(arrs)


def first_steps(cfg: WalkConfig) -> np.ndarray:
    """First increment (+1 or -1) of each path."""
    _set_threads(cfg.workers)
    out = np.empty(cfg.paths, dtype=np.int64)
    _first_steps(np.uint64(cfg.seed), cfg.paths, _probs(cfg)[0], out)
    return out


# ---------------------------------------------------------------------------
# exact combinatorics


def exact_return_pmf(i: int, d: int) -> Fraction:
    """P(the i-th return of the simple symmetric walk to 0 happens at 2d)."""
    if not (isinstance(i, int) and isinstance(d, int)) or i < 1 or d < 1:
        raise DomainError("need positive integers i and d")
    if i > d:
        return Fraction(0)
    m = 2 * d - i
    return Fraction(i, m) * Fraction(comb(m, d), 2 ** m)


def _f0(i: int, d: int) -> Fraction:
    # extends the pmf with the empty concatenation
    if i == 0:
        return Fraction(1 if d == 0 else 0)
    if d == 0:
        return Fraction(0)
    return exact_return_pmf(i, d)


def cycle_mixture_probability(r: int, r1: int, k: int, p: Fraction) -> Fraction:
    """Probability that the first ``2r`` steps of the skew walk form exactly
    ``k`` excursions from 0, of total positive length ``2 r1``, ending at 0.

    ``sum_i C(k, i) p^i q^(k-i) f_{2 r1}^(i) f_{2(r - r1)}^(k - i)``.
    """
    p = Fraction(p)
    q = 1 - p
    total = Fraction(0)
    for i in range(k + 1):
        total += comb(k, i) * p ** i * q ** (k - i) * _f0(i, r1) * _f0(k - i, r - r1)
    return total


# ---------------------------------------------------------------------------
# pricing


Payoff = Union[str, Callable[[np.ndarray], np.ndarray]]


def _payoff_fn(payoff: Payoff, K: float):
    if callable(payoff):
        return payoff
    if payoff == "call":
        return lambda S: np.maximum(S - K, 0.0)
    if payoff == "put":
        return lambda S: np.maximum(K - S, 0.0)
    if payoff == "unit":
        return lambda S: np.ones_like(S)
    if payoff == "spot":
        return lambda S: S
    raise DomainError(f"unknown payoff {payoff!r}")


def lvm_walk_config(vol: TwoValuedVol, T: float, n: int = 2000, paths: int = 1_000_000, seed: int = 0,
                    workers: int = 1, zero_correction: bool = True) -> WalkConfig:
    """Walk configuration for the skew image of the two-valued LVM."""
    d = derive_skew(vol)
    return WalkConfig(n=n, T=T, p=d.p, m1=d.mu1, m2=d.mu2, seed=seed, paths=paths, workers=workers,
                      zero_correction=zero_correction)


def mc_terminal(S0: float, vol: TwoValuedVol, cfg: WalkConfig):
    """Terminal prices ``S_T`` and barrier-hit flags, one per path."""
    x0 = to_skew(S0, vol)
    m_start = cfg.m1 if x0 >= 0 else cfg.m2
    p0, up_pos, up_neg = _probs(cfg)
    _set_threads(cfg.workers)
    x = np.empty(cfg.paths)
    hit = np.empty(cfg.paths, dtype=np.int8)
    _terminal_from(np.uint64(cfg.seed), cfg.paths, cfg.n, cfg.T, float(x0), m_start, p0, up_pos, up_neg, x, hit)
    return from_skew(x, vol), hit.astype(bool)


def mc_price(spec, vol: TwoValuedVol, cfg: WalkConfig, payoff: Optional[Payoff] = None,
             barrier: Optional[str] = None):
    """Monte Carlo price and standard error.

    ``spec`` is an ``OptionSpec``; ``cfg.T`` must equal ``spec.T`` and the
    drifts of ``cfg`` are normally the drifts induced by the volatility model (see
    :func:`lvm_walk_config`).  ``barrier`` selects a knock-in (``"in"``) or
    knock-out (``"out"``) at 1 monitored by visits to 0.
    """
    if abs(cfg.T - spec.T) > 1e-12:
        raise ConfigError("walk horizon must match the option expiry")
    S, hit = mc_terminal(spec.S0, vol, cfg)
    f = _payoff_fn(payoff or spec.kind, spec.K)
    vals = np.asarray(f(S), dtype=float)
    if barrier == "in":
        vals = np.where(hit, vals, 0.0)
    elif barrier == "out":
        vals = np.where(hit, 0.0, vals)
    elif barrier is not None:
        raise DomainError(f"barrier must be None, 'in' or 'out', got {barrier!r}")
    mean = math.fsum(vals) / len(vals)
    se = float(np.std(vals, ddof=1) / math.sqrt(len(vals))) if len(vals) > 1 else math.inf
    return mean, se


# ---------------------------------------------------------------------------
# density histograms


@dataclass(frozen=True)
class HistogramGrid:
    """Bin edges for ``(tau, u, x_T, l)``."""

    tau: Sequence[float]
    u: Sequence[float]
    x: Sequence[float]
    l: Sequence[float]

    def edges(self):
        return [np.asarray(e, dtype=float) for e in (self.tau, self.u, self.x, self.l)]


@dataclass(frozen=True)
class DensityHistogram:
    counts: np.ndarray
    edges: tuple
    paths: int

    @property
    def density(self) -> np.ndarray:
        vol = np.ones_like(self.counts, dtype=float)
        for ax, e in enumerate(self.edges):
            shape = [1] * self.counts.ndim
            shape[ax] = len(e) - 1
            vol = vol * np.diff(e).reshape(shape)
        return self.counts / (self.paths * vol)


def mc_density_histogram(cfg: WalkConfig, binning: HistogramGrid) -> DensityHistogram:
    """4-d histogram of ``(tau, u, x_T, l)`` over ``cfg.paths`` chains."""
    edges = binning.edges()
    counts = None
    for block in simulate_paths(cfg):
        sample = np.column_stack([block.tau, block.u, block.x_T, block.l])
        c, _ = np.histogramdd(sample, bins=edges)
        counts = c if counts is None else counts + c
    return DensityHistogram(counts.astype(np.int64), tuple(edges), cfg.paths)
