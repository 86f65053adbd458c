"""Cell-decomposition lower bound for the dilute gas.

The box is split into cells of side l with Neumann conditions; dropping
inter-cell interactions bounds the energy from below by the best way of
distributing particles over cells.  Per-cell energies are
``n^2 A - n C`` below the occupancy cutoff ``p`` and are bounded through
superadditivity above it.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .energy import lhy_energy
from .errors import ConfigError, RegimeError, SizeError

MAX_PARTICLES = 10
MAX_CELLS = 27


@dataclass(frozen=True)
class CellProblem:
    rho: float
    a: float
    kappa: float
    box: float
    p_cut: float
    A: float
    C: float

    def __post_init__(self):
        if self.p_cut < 1:
            raise ConfigError("occupancy cutoff must be >= 1", key="p_cut")
        if self.box <= 0:
            raise ConfigError("cell side must be positive", key="box")
        if self.A > 1:
            raise ConfigError("A must not exceed 1", key="A")

    @property
    def mean_occupation(self) -> float:
        return self.rho * self.box**3

    @classmethod
    def from_constants(cls, rho, a, kappa, box, c=0.1, C=1.0) -> "CellProblem":
        """``p = c l / kappa``, ``A = 1 - C a ln(l/a) / l``."""
        A = 1.0 - C * a * math.log(box / a) / box if a > 0 else 1.0
        return cls(rho, a, kappa, box, c * box / kappa, A, C)


def occupancy_objective(t, prob: CellProblem):
    t = np.asarray(t, dtype=float)
    N = prob.mean_occupation
    A, C, p = prob.A, prob.C, prob.p_cut
    return t * t * A - t * C + 0.5 * (N - t) * (p * A - C)


def minimize_occupancy(prob: CellProblem, t_min: float = 1.0):
    """Minimise the relaxed objective over ``t_min <= t <= rho l^3``.

    The objective is a convex parabola when ``A > 0``, so the clamped vertex
    ``(p A + C) / (4 A)`` is the minimiser.  ``t`` is the number of particles
    per cell sitting in cells below the cutoff, so every occupation pattern
    has ``0 <= t <= rho l^3``; the default ``t_min = 1`` drops the patterns
    with ``t < 1``, which only matters when the vertex lies below 1.
    """
    if prob.A <= 0:
        raise RegimeError("l too small for the bound (A <= 0)")
    N = prob.mean_occupation
    if N < t_min:
        raise ConfigError(f"need at least {t_min:g} particles per cell on average", key="rho")
    vertex = (prob.p_cut * prob.A + prob.C) / (4 * prob.A)
    t = min(max(vertex, t_min), N)
    return t, float(occupancy_objective(t, prob))


def cell_energy_table(prob: CellProblem, nmax: int) -> np.ndarray:
    """Per-cell bound ``e(n)``: ``n^2 A - n C`` for ``n < p``, and
    ``floor(n / p) e(p)`` beyond, with integer floor.  Requires integer p."""
    p = int(prob.p_cut)
    n = np.arange(nmax + 1)
    below = n * n * prob.A - n * prob.C
    e_p = p * p * prob.A - p * prob.C
    return np.where(n < p, below, (n // p) * e_p)


def _partitions(N: int, parts: int, largest: int | None = None):
    """Nonincreasing tuples of at most ``parts`` positive integers summing to N."""
    if largest is None:
        largest = N
    if N == 0:
        yield ()
        return
    if parts == 0:
        return
    for first in range(min(N, largest), 0, -1):
        for rest in _partitions(N - first, parts - 1, first):
            yield (first,) + rest


def brute_force_cell_minimum(N: int, cells: int, energies) -> float:
    """Exact minimum of ``sum_k E_k(n_k)`` over all distributions of N
    particles into ``cells`` cells.

    ``energies`` is either one table ``E(n)`` shared by every cell (then the
    minimum runs over partitions of N) or one table per cell (min-plus
    dynamic programming over the cells).
    """
    if N > MAX_PARTICLES or cells > MAX_CELLS:
        raise SizeError(f"enumeration limited to N <= {MAX_PARTICLES}, cells <= {MAX_CELLS}")
    if N < 0 or cells < 1:
        raise ConfigError("need N >= 0 and at least one cell")
    E = np.asarray(energies, dtype=float)
    if E.ndim == 1:
        if len(E) < N + 1:
            raise ConfigError("energy table shorter than N + 1", key="energies")
        best = math.inf
        for part in _partitions(N, cells):
            val = float(sum(E[k] for k in part)) + (cells - len(part)) * E[0]
            best = min(best, val)
        return best
    if E.shape[0] != cells or E.shape[1] < N + 1:
        raise ConfigError("per-cell table must have shape (cells, >= N + 1)", key="energies")
    cur = E[0, : N + 1].copy()
    for k in range(1, cells):
        nxt = np.full(N + 1, math.inf)
        for total in range(N + 1):
            for here in range(total + 1):
                nxt[total] = min(nxt[total], cur[total - here] + E[k, here])
        cur = nxt
    return float(cur[N])


def relaxed_bound(prob: CellProblem, cells: int) -> float:
    """Total relaxed lower bound for ``cells`` cells.

    Valid for every distribution: ``t`` ranges over ``[0, rho l^3]``, and the
    step ``floor(n/p) e(p) >= n e(p) / (2p)`` needs ``e(p) = p (pA - C) >= 0``.
    """
    if prob.p_cut * prob.A < prob.C:
        raise RegimeError("cutoff energy p(pA - C) is negative; the superadditivity "
                          "relaxation does not apply")
    return cells * minimize_occupancy(prob, t_min=0.0)[1]


@dataclass
class BoundRow:
    rho: float
    box: float
    bound: float
    lhy: float
    ratio: float
    regime_ok: bool
    c: float
    C: float


def lower_bound_curve(a: float, kappa: float, rhos, c: float = 0.1, C: float = 1.0) -> list[BoundRow]:
    """Energy-per-particle lower bound with cell side
    ``l = (c/4)^{1/2} (kappa rho)^{-1/2}``::

        4 pi a rho [1 - C (rho a^3)^{1/2} ln(1/rho) - C (rho a^3)^{1/2}]

    Rows where ``4 rho l^3`` exceeds the occupancy cutoff ``c l / kappa`` are
    flagged (the choice of l puts every row on the boundary of that regime).
    """
    rows = []
    for rho in rhos:
        if rho <= 0:
            raise ConfigError("densities must be positive", key="rho")
        box = math.sqrt(c / 4) / math.sqrt(kappa * rho)
        p_cut = c * box / kappa
        regime = 4 * rho * box**3 <= p_cut * (1 + 1e-12)
        gas = math.sqrt(rho * a**3)
        bound = 4 * math.pi * a * rho * (1 - C * gas * math.log(1 / rho) - C * gas)
        lhy = lhy_energy(rho, a)
        ratio = bound / lhy if lhy else float("nan")
        rows.append(BoundRow(rho, box, bound, lhy, ratio, regime, c, C))
    return rows
