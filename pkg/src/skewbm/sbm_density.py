"""Joint densities of skew Brownian motion and its path functionals.

Coordinates used throughout, for a path started at 0 and observed on [0, T]:

``t``  last time at zero,
``v``  time spent ``>= 0`` before ``t``,
``u``  total time spent ``>= 0``,
``x``  terminal value,
``l``  symmetric local time at zero.

The densities are zero on the boundary of their support, which keeps them
usable inside quadrature rules.  Arguments broadcast like numpy arrays.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import ndtr

from .errors import DomainError
from .special_fn import SQRT_2PI

__all__ = [
    "SkewParams",
    "JointDensityPoint",
    "psi",
    "phi",
    "phi_occupation",
    "trivariate_rho",
    "occupation_from_v",
    "girsanov_weight",
    "occupation_cell_probabilities",
]


@dataclass(frozen=True)
class SkewParams:
    """Skew parameter ``p`` with drift ``m1`` on ``x >= 0`` and ``m2`` below."""

    p: float
    m1: float = 0.0
    m2: float = 0.0
    T: float = 1.0

    def __post_init__(self):
        if not 0.0 < self.p < 1.0:
            raise DomainError(f"p must lie in (0, 1), got {self.p}")
        if not self.T > 0:
            raise DomainError(f"T must be positive, got {self.T}")

    @property
    def q(self) -> float:
        return 1.0 - self.p

    @property
    def local_time_rate(self) -> float:
        """``p m1 - q m2``, the coefficient of the local time in the weight."""
        return self.p * self.m1 - self.q * self.m2


@dataclass(frozen=True)
class JointDensityPoint:
    t: float
    v: float
    x: float
    l: float

    def u(self, T: float) -> float:
        return occupation_from_v(self.t, self.v, self.x, T)


def _h0(s, y):
    # first passage kernel extended by 0 for s <= 0
    s = np.asarray(s, dtype=float)
    y = np.abs(np.asarray(y, dtype=float))
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        val = y / (SQRT_2PI * s * np.sqrt(s)) * np.exp(-0.5 * y * y / s)
    return np.where(s > 0, np.nan_to_num(val, nan=0.0, posinf=0.0), 0.0)


def _out(x):
    x = np.asarray(x, dtype=float)
    return float(x) if x.ndim == 0 else x


def _check_quartet(t, v, l, T):
    tol = 1e-12 * T
    if np.any(v < -tol) or np.any(v > t + tol) or np.any(t > T + tol) or np.any(l < 0):
        raise DomainError("need 0 <= v <= t <= T and l >= 0")


def psi(t, v, x, l, p: float, T: float):
    """Driftless density of ``(tau, V, X_T, L_T)`` for SBM(p) from 0."""
    t, v, x, l = (np.asarray(a, dtype=float) for a in (t, v, x, l))
    _check_quartet(t, v, l, T)
    q = 1.0 - p
    a = np.where(x >= 0, p, q)
    return _out(2.0 * a * _h0(v, l * p) * _h0(t - v, l * q) * _h0(T - t, x))


def occupation_from_v(t, v, x, T):
    """Total positive occupation from ``(t, v)`` and the sign of ``x``."""
    t, v, x = (np.asarray(a, dtype=float) for a in (t, v, x))
    if np.any(v < 0) or np.any(v > t) or np.any(t > T):
        raise DomainError("need 0 <= v <= t <= T")
    return _out(np.where(x >= 0, v + T - t, v))


def _weight_exponent(x, w, l, params: SkewParams):
    x = np.asarray(x, dtype=float)
    m_line = np.where(x >= 0, params.m1 * x, params.m2 * x)
    occ = params.m1 ** 2 * w + params.m2 ** 2 * (params.T - w)
    return m_line - 0.5 * occ - params.local_time_rate * l


def girsanov_weight(x0, x, w, l, params: SkewParams):
    """Likelihood ratio of drifted to driftless SBM along a path.

    Depends on the path only through ``x0``, ``X_T = x``, the positive
    occupation time ``w`` and the local time ``l``.
    """
    x0, x, w, l = (np.asarray(a, dtype=float) for a in (x0, x, w, l))
    if np.any(w < 0) or np.any(w > params.T) or np.any(l < 0):
        raise DomainError("need 0 <= w <= T and l >= 0")
    start = np.where(x0 >= 0, params.m1 * x0, params.m2 * x0)
    return _out(np.exp(_weight_exponent(x, w, l, params) - start))


def phi(t, v, x, l, params: SkewParams):
    """Density of ``(tau, V, X_T, L_T)`` for SBM with two-valued drift."""
    t, v, x, l = (np.asarray(a, dtype=float) for a in (t, v, x, l))
    base = psi(t, v, x, l, params.p, params.T)
    w = np.where(x >= 0, v + params.T - t, v)
    return _out(base * np.exp(_weight_exponent(x, w, l, params)))


def phi_occupation(t, u, x, l, params: SkewParams):
    """Density of ``(tau, U, X_T, L_T)``; ``U`` is the total positive time."""
    t, u, x, l = (np.asarray(a, dtype=float) for a in (t, u, x, l))
    T, p = params.T, params.p
    q = 1.0 - p
    tol = 1e-12 * T
    pos = x >= 0
    bad_pos = pos & ((t > T + tol) | (u < T - t - tol) | (u > T + tol))
    bad_neg = ~pos & ((u < -tol) | (u > t + tol) | (t > T + tol))
    if np.any(bad_pos | bad_neg) or np.any(l < 0):
        raise DomainError("point outside the support of the occupation-time density")
    dens_pos = 2.0 * p * _h0(u + t - T, l * p) * _h0(T - u, l * q) * _h0(T - t, x)
    dens_neg = 2.0 * q * _h0(u, l * p) * _h0(t - u, l * q) * _h0(T - t, x)
    dens = np.where(pos, dens_pos, dens_neg)
    return _out(dens * np.exp(_weight_exponent(x, u, l, params)))


def trivariate_rho(u, x, l, p: float, T: float):
    """Driftless density of ``(U, X_T, L_T)`` for SBM(p) started at 0."""
    u, x, l = (np.asarray(a, dtype=float) for a in (u, x, l))
    if np.any(u <= 0) or np.any(u >= T):
        raise DomainError("need 0 < u < T")
    if np.any(l < 0):
        raise DomainError("need l >= 0")
    q = 1.0 - p
    dens = np.where(
        x >= 0,
        2.0 * p * _h0(T - u, l * q) * _h0(u, l * p + x),
        2.0 * q * _h0(u, l * p) * _h0(T - u, l * q - x),
    )
    return _out(dens)



# ---------------------------------------------------------------------------
# cell probabilities of the occupation-time density

_GRADING = (1e-5, 1e-4, 1e-3, 1e-2, 0.04, 0.15, 0.4)


def _graded_nodes(a: float, b: float, nodes: int):
    # Gauss-Legendre on panels that shrink geometrically toward both ends
    if not b > a:
        return np.empty(0), np.empty(0)
    half = np.array(_GRADING) * 0.5
    br = np.unique(np.concatenate([[0.0, 0.5, 1.0], half, 1.0 - half]))
    gx, gw = np.polynomial.legendre.leggauss(nodes)
    gx, gw = 0.5 * (gx + 1.0), 0.5 * gw
    lo, hi = br[:-1, None], br[1:, None]
    return (a + (b - a) * (lo + (hi - lo) * gx)).ravel(), ((b - a) * (hi - lo) * gw).ravel()


def _x_mass(s, x0, x1, m):
    # int_{x0}^{x1} h(s, x) e^{m x} dx on an interval of one sign
    rs = np.sqrt(s)
    a = (x0 - m * s) / rs
    b = (x1 - m * s) / rs
    core = (np.exp(-0.5 * a * a) - np.exp(-0.5 * b * b)) / (SQRT_2PI * rs) + m * (ndtr(b) - ndtr(a))
    return np.sign(x0 + x1) * np.exp(0.5 * m * m * s) * core


def _l_mass(v, w, l0, l1, p, r):
    # int_{l0}^{l1} h(v, l p) h(w, l q) e^{-r l} dl
    q = 1.0 - p
    c = p * p / v + q * q / w
    rc = np.sqrt(c)
    a = r / c

    def prim(l):
        y = l + a
        e = np.exp(-0.5 * c * y * y)
        g0 = SQRT_2PI / rc * ndtr(y * rc)
        g1 = -e / c
        g2 = -y * e / c + g0 / c
        return g2 - 2.0 * a * g1 + a * a * g0

    return p * q / (2.0 * np.pi * (v * w) ** 1.5) * np.exp(0.5 * r * a) * (prim(l1) - prim(l0))


def occupation_cell_probabilities(t_edges, u_edges, x_edges, l_edges, params: SkewParams, nodes: int = 8):
    """Mass of :func:`phi_occupation` on every cell of a 4-d grid.

    The ``x`` and ``l`` integrals are done in closed form and the ``(t, u)``
    integral by Gauss-Legendre panels graded toward the support edges
    ``u = T - t`` (``x >= 0``) and ``u = t`` (``x < 0``).  Every ``x`` cell
    must lie on one side of 0.  Returns an array of shape
    ``(len(t_edges) - 1, ..., len(l_edges) - 1)``.
    """
    te, ue, xe, le = (np.asarray(e, dtype=float) for e in (t_edges, u_edges, x_edges, l_edges))
    T, p = params.T, params.p
    q = 1.0 - p
    for e in (te, ue, xe, le):
        if e.ndim != 1 or len(e) < 2 or np.any(np.diff(e) <= 0):
            raise DomainError("edges must be increasing 1-d sequences")
    if te[0] < 0 or te[-1] > T or ue[0] < 0 or ue[-1] > T or le[0] < 0:
        raise DomainError("t and u edges must lie in [0, T] and l edges in [0, inf)")
    xlo, xhi = xe[:-1], xe[1:]
    if np.any((xlo < 0) & (xhi > 0)):
        raise DomainError("x cells must not straddle 0")
    out = np.zeros((len(te) - 1, len(ue) - 1, len(xe) - 1, len(le) - 1))
    r = params.local_time_rate
    for i, (t0, t1) in enumerate(zip(te[:-1], te[1:])):
        for j, (u0, u1) in enumerate(zip(ue[:-1], ue[1:])):
            for positive in (True, False):
                cols = np.flatnonzero(xlo >= 0) if positive else np.flatnonzero(xhi <= 0)
                if len(cols) == 0:
                    continue
                cuts = (T - u1, T - u0) if positive else (u0, u1)
                br = sorted({t0, t1, *(c for c in cuts if t0 < c < t1)})
                tn, un, wn = [], [], []
                for a, b in zip(br[:-1], br[1:]):
                    for tt, tw in zip(*_graded_nodes(a, b, nodes)):
                        lo, hi = (max(u0, T - tt), u1) if positive else (u0, min(u1, tt))
                        uu, uw = _graded_nodes(lo, hi, nodes)
                        tn.append(np.full_like(uu, tt))
                        un.append(uu)
                        wn.append(uw * tw)
                if not tn:
                    continue
                tn, un, wn = np.concatenate(tn), np.concatenate(un), np.concatenate(wn)
                v1, w1 = (un + tn - T, T - un) if positive else (un, tn - un)
                ok = (v1 > 0) & (w1 > 0) & (tn < T)
                tn, un, wn, v1, w1 = tn[ok], un[ok], wn[ok], v1[ok], w1[ok]
                m = params.m1 if positive else params.m2
                weight = wn * np.exp(-0.5 * (params.m1 ** 2 * un + params.m2 ** 2 * (T - un)))
                xm = np.stack([_x_mass(T - tn, xlo[k], xhi[k], m) for k in cols], axis=1)
                lm = np.stack([_l_mass(v1, w1, l0, l1, p, r) for l0, l1 in zip(le[:-1], le[1:])], axis=1)
                a_sign = p if positive else q
                out[i, j, cols] += 2.0 * a_sign * np.einsum("n,nx,nl->xl", weight, xm, lm)
    return out
