"""Lattice sums for the periodic-box ground-state formula.

* Bogoliubov sum over the dual lattice ``2 pi Z^3 \\ {0}`` of the unit torus,
  cut off spherically at ``|n| <= M``; the summand decays like ``|p|^-4`` and
  the tail beyond the cutoff is added from its integral.
* The boundary constant ``b = 2 - lim sum_{0 < |p| <= M} cos|p| / p^2`` over
  ``p in Z^3``.  Plain spherical partial sums oscillate with amplitude O(1),
  so the limit is taken in the sense of a second-order moving average over a
  window of one period (2 pi) in the cutoff radius.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate

from .errors import ConfigError

LATTICE_CONVENTION = "bogoliubov: 2*pi*Z^3 (unit torus); boundary sum: Z^3, cos|p|/p^2"
AVERAGE_WINDOW = 2 * math.pi


def _lattice_norms2(radius: float) -> np.ndarray:
    """Squared norms of the nonzero points of Z^3 with |n| <= radius, sorted."""
    R = int(math.floor(radius))
    n = np.arange(-R, R + 1)
    n2 = n * n
    r2 = (n2[:, None, None] + n2[None, :, None] + n2[None, None, :]).ravel()
    r2 = r2[(r2 > 0) & (r2 <= radius * radius)]
    return np.sort(r2)


def bogoliubov_summand(p2, a: float):
    """``p^2 + B - sqrt(p^4 + 2 B p^2) - B^2 / (2 p^2)`` with ``B = 8 pi a``,
    rewritten without cancellation."""
    p2 = np.asarray(p2, dtype=float)
    B = 8 * math.pi * a
    S = np.sqrt(p2 * p2 + 2 * B * p2)
    return -B**3 * (1 + 2 * p2 / (p2 + S)) / (2 * p2 * (p2 + B + S))


@dataclass
class BogoliubovSum:
    value: float          # sum including the integral tail
    partial: float        # lattice part only
    tail: float
    outer_shell_max: float
    cutoff: int


def bogoliubov_sum(a: float, cutoff: int = 60) -> BogoliubovSum:
    if a == 0:
        return BogoliubovSum(0.0, 0.0, 0.0, 0.0, cutoff)
    r2 = _lattice_norms2(cutoff)
    p2 = (2 * math.pi) ** 2 * r2.astype(float)
    s = bogoliubov_summand(p2, a)
    partial = float(np.sum(s[::-1]))  # small terms first
    outer = r2 > (cutoff - 1) ** 2
    outer_max = float(np.max(np.abs(s[outer])))
    tail, _ = integrate.quad(
        lambda q: 4 * math.pi * q * q * float(bogoliubov_summand((2 * math.pi * q) ** 2, a)),
        cutoff, np.inf, epsabs=1e-16, epsrel=1e-12, limit=200)
    return BogoliubovSum(partial + tail, partial, tail, outer_max, cutoff)


def _window_weight(a):
    """Weight of a lattice point at scaled distance ``a = (|p| - M) / W`` in the
    second-order average of spherical partial sums over cutoffs [M, M + W]."""
    def F(u):
        return np.where(u <= 0, u, np.where(u < 1, u - 0.5 * u * u, 0.5))
    return F(a) - F(a - 1)


@dataclass
class BoundaryConstant:
    value: float               # 2 - averaged sum at the largest cutoff
    cutoffs: np.ndarray
    averaged: np.ndarray       # 2 - averaged sum per cutoff
    raw: np.ndarray            # 2 - plain partial sum per cutoff
    converged: bool
    flags: list = field(default_factory=list)


def boundary_constant(cutoffs, window: float = AVERAGE_WINDOW, tol: float = 5e-4) -> BoundaryConstant:
    """``b`` from averaged partial sums at each cutoff.  ``converged`` when the
    last two averaged values differ by at most ``tol`` and the spread of the
    averages is shrinking."""
    cutoffs = np.asarray(sorted(cutoffs), dtype=float)
    if len(cutoffs) == 0 or cutoffs[0] < 4:
        raise ConfigError("cutoffs must be >= 4", key="cutoff")
    r2 = _lattice_norms2(cutoffs[-1] + 2 * window)
    r = np.sqrt(r2.astype(float))
    g = np.cos(r) / r2
    csum = np.cumsum(g)
    avg, raw = [], []
    for M in cutoffs:
        wts = _window_weight((r - M) / window)
        avg.append(2.0 - float(np.sum(g * wts)))
        k = np.searchsorted(r, M, side="right")
        raw.append(2.0 - float(csum[k - 1]))
    avg = np.array(avg)
    raw = np.array(raw)
    converged = True
    flags = []
    if len(avg) >= 2:
        if abs(avg[-1] - avg[-2]) > tol:
            converged = False
        if len(avg) >= 4:
            half = len(avg) // 2
            if np.ptp(avg[half:]) > np.ptp(avg[:half]) + tol:
                converged = False
        if not converged:
            flags.append("shell-averaged boundary sum not settling")
    return BoundaryConstant(float(avg[-1]), cutoffs, avg, raw, converged, flags)


@dataclass
class PeriodicGroundState:
    energy: float
    boundary: float
    bogoliubov: float
    trace: dict
    convention: str = LATTICE_CONVENTION


def periodic_ground_state(a: float, N: int, cutoff: int = 60,
                          boundary_cutoffs=(30, 40, 50, 60)) -> PeriodicGroundState:
    """``4 pi (N - 1) a + b a^2 - (1/2) sum_p [...]``."""
    if cutoff < 4:
        raise ConfigError("cutoff must be >= 4", key="cutoff")
    bog = bogoliubov_sum(a, cutoff)
    bc = boundary_constant(boundary_cutoffs)
    e = 4 * math.pi * (N - 1) * a + bc.value * a * a - 0.5 * bog.value
    trace = {"cutoffs": bc.cutoffs.tolist(), "boundary_averaged": bc.averaged.tolist(),
             "boundary_raw": bc.raw.tolist(), "boundary_converged": bc.converged,
             "bogoliubov_partial": bog.partial, "bogoliubov_tail": bog.tail,
             "bogoliubov_outer_shell_max": bog.outer_shell_max}
    if a == 0:
        e = 0.0
    return PeriodicGroundState(e, bc.value, bog.value, trace)
