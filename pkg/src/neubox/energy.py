"""Constant term of the transformed Hamiltonian, by two independent routes,
plus the Gross-Pitaevskii window and the Lee-Huang-Yang formula.

Both routes work on the unit box with the two-body grid state:
``f_l(x, y) = f(l x, l y)``, ``w = 1 - l^d f_l`` and the interaction
``V_l = kappa l^2 V(l (x - y))`` (the grid potential times ``l^2``).

* spectral: expand ``eta = Q k Q`` (``k = -n w``) in the discrete cosine
  modes, truncate at a per-axis cutoff, and assemble mean-field, kinetic,
  pairing and quartic terms.  With the grid matrix elements the pairing and
  quartic mode sums collapse to ``n <V_l, eta_P>`` and ``<eta_P, V_l eta_P>/2``.
* position: the functional of ``w`` plus a remainder written with
  ``mu = eta - k``.  The Laplacian of ``w`` is either taken by finite
  differences or replaced through the eigenvalue equation; the two agree up
  to the eigensolver residual, which gives the route's error estimate.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np
import scipy.fft

from . import numerics as nx
from .errors import ConfigError
from .twobody import TwoBodySolution, laplacian_symbol, neg_laplacian

LHY_COEFFICIENT = 128.0 / (15.0 * math.sqrt(math.pi))


@dataclass
class EnergyBreakdown:
    route: str
    n: int
    box: float
    mean_field: float
    kinetic: float = 0.0
    pairing: float = 0.0
    quartic: float = 0.0
    leading: float = 0.0
    remainder: float = 0.0
    remainder_printed: float = 0.0
    remainder_extra: float = 0.0
    total: float = 0.0
    truncation_estimate: float = 0.0
    cutoff: int = 0
    grid: int = 0
    flags: list = field(default_factory=list)

    def to_dict(self):
        return asdict(self)


@dataclass
class UnitBoxState:
    """Two-body grid data expressed on the unit box."""

    d: int
    m: int
    box: float
    w: np.ndarray          # 1 - l^d f_l
    potential: np.ndarray  # kappa l^2 V(l (x - y)) on the grid
    scaled_eigenvalue: float  # l^2 lambda

    @property
    def h(self) -> float:
        return 1.0 / self.m

    @property
    def weight(self) -> float:
        return self.h ** (2 * self.d)

    @classmethod
    def from_solution(cls, sol: TwoBodySolution, potential: np.ndarray) -> "UnitBoxState":
        """``potential`` is the grid interaction on the l-box (as used by the
        solver); it is rescaled here."""
        g = sol.geometry
        ell = g.box
        return cls(g.d, g.m, ell, 1.0 - ell**g.d * sol.f, ell**2 * potential,
                   ell**2 * sol.eigenvalue)


def _one_body_average(v: np.ndarray, d: int, axes_of: str) -> np.ndarray:
    """Average over the y axes (``axes_of='y'``) or x axes, keeping dims."""
    axes = tuple(range(d, 2 * d)) if axes_of == "y" else tuple(range(d))
    return v.mean(axis=axes, keepdims=True)


def eta_field(state: UnitBoxState, n: int) -> np.ndarray:
    """``eta = Q k Q`` on the grid (``k = -n w``)."""
    k = -n * state.w
    rows = _one_body_average(k, state.d, "y")
    cols = _one_body_average(k, state.d, "x")
    return k - rows - cols + k.mean()


def mu_field(state: UnitBoxState, n: int) -> np.ndarray:
    """``mu = eta - k = n (a(x) + a(y) - c)``, ``a`` the one-body average of w."""
    w = state.w
    return n * (_one_body_average(w, state.d, "y") + _one_body_average(w, state.d, "x") - w.mean())


def mode_coefficients(field_: np.ndarray, d: int) -> np.ndarray:
    """``<g, phi_p (x) phi_q>`` for all grid modes."""
    m = field_.shape[0]
    return scipy.fft.dctn(field_, type=2, norm="ortho", workers=nx.worker_count()) * m ** (-d)


def _from_coefficients(coef: np.ndarray, d: int) -> np.ndarray:
    m = coef.shape[0]
    return scipy.fft.idctn(coef * m**d, type=2, norm="ortho", workers=nx.worker_count())


def _spectral_terms(state: UnitBoxState, n: int, coef: np.ndarray, cutoff: int):
    d, m = state.d, state.m
    keep = np.arange(m) <= cutoff
    mask = np.ones(coef.shape, dtype=bool)
    for ax in range(2 * d):
        mask &= keep.reshape([m if j == ax else 1 for j in range(2 * d)])
    # eta is orthogonal to constants in each variable; the zero modes vanish
    c = np.where(mask, coef, 0.0)
    sym = laplacian_symbol_unit(m)
    lam = np.zeros(coef.shape)
    for ax in range(2 * d):
        lam = lam + sym.reshape([m if j == ax else 1 for j in range(2 * d)])
    kinetic = 0.5 * nx.dot(c * lam, c)
    eta_p = _from_coefficients(c, d)
    w = state.weight
    V = state.potential
    pairing = n * nx.dot(V, eta_p) * w
    quartic = 0.5 * nx.dot(eta_p * V, eta_p) * w
    return kinetic, pairing, quartic


def laplacian_symbol_unit(m: int) -> np.ndarray:
    k = np.arange(m)
    return 4.0 * m * m * np.sin(np.pi * k / (2 * m)) ** 2


def mean_field(state: UnitBoxState, n: int) -> float:
    return 0.5 * n * n * nx.total(state.potential) * state.weight


def constant_term_spectral(state: UnitBoxState, n: int, cutoff: int | None = None,
                           eta: np.ndarray | None = None) -> EnergyBreakdown:
    """Mode-sum evaluation truncated at ``cutoff`` (max mode index per axis).

    The truncation estimate is the change of the total when the outermost
    shell (index == cutoff on some axis) is added.
    """
    m = state.m
    if cutoff is None:
        cutoff = m - 1
    if not 1 <= cutoff <= m - 1:
        raise ConfigError(f"cutoff must lie in [1, {m - 1}]", key="cutoff")
    if n < 0:
        raise ConfigError("particle number must be nonnegative", key="n")
    mf = mean_field(state, n)
    e = eta_field(state, n) if eta is None else eta
    coef = mode_coefficients(e, state.d)
    kin, pair, quart = _spectral_terms(state, n, coef, cutoff)
    total = mf + kin + pair + quart
    if cutoff > 1:
        k0, p0, q0 = _spectral_terms(state, n, coef, cutoff - 1)
        trunc = abs(total - (mf + k0 + p0 + q0))
    else:
        trunc = abs(total - mf)
    flags = []
    if abs(pair) > 0 and trunc > 1e-3 * abs(pair):
        flags.append("pairing term not converged at this cutoff")
    return EnergyBreakdown("spectral", n, state.box, mf, kin, pair, quart, total=total,
                           truncation_estimate=trunc, cutoff=cutoff, grid=m, flags=flags)


def constant_term_position(state: UnitBoxState, n: int) -> EnergyBreakdown:
    """Functional of ``w`` plus remainder.

    The remainder contains ``(n/2) <mu, Lap w>`` together with the pieces
    ``n <mu, V_l (1 - w)> + <mu, V_l mu>/2`` that come from the pairing and
    quartic terms; ``remainder_printed`` is ``-(n/2) <mu, Lap w>`` alone and
    ``remainder_extra`` the difference.
    """
    d, h, wt = state.d, state.h, state.weight
    w = state.w
    V = state.potential
    one_minus = 1.0 - w
    grad = nx.dot(w, neg_laplacian(w, h)) * wt
    pot_part = nx.dot(one_minus * V, one_minus) * wt
    leading = 0.5 * n * n * (pot_part + grad)
    mu = mu_field(state, n)
    lap_fd = -neg_laplacian(w, h)
    lap_eq = one_minus * (state.scaled_eigenvalue - V)
    cross = n * nx.dot(mu, V * one_minus) * wt
    quad = 0.5 * nx.dot(mu * V, mu) * wt
    rem_fd = 0.5 * n * nx.dot(mu, lap_fd) * wt + cross + quad
    rem_eq = 0.5 * n * nx.dot(mu, lap_eq) * wt + cross + quad
    printed = -0.5 * n * nx.dot(mu, lap_eq) * wt
    lead_ref = 0.5 * n * n * state.scaled_eigenvalue
    flags = []
    if lead_ref and abs(leading - lead_ref) > 1e-6 * abs(lead_ref):
        flags.append("leading functional differs from n^2 l^2 lambda / 2 by more than 1e-6")
    mf = mean_field(state, n)
    return EnergyBreakdown("position", n, state.box, mf, leading=leading, remainder=rem_eq,
                           remainder_printed=printed, remainder_extra=rem_eq - printed,
                           total=leading + rem_eq, truncation_estimate=abs(rem_fd - rem_eq),
                           grid=state.m, flags=flags)


def leading_from_eigenvalue(state: UnitBoxState, n: int) -> float:
    return 0.5 * n * n * state.scaled_eigenvalue


# ------------------------------------------------------------ windows

@dataclass
class GPWindow:
    center: float
    scale: float       # n/l + n^2 ln(l)/l^2
    constant: float    # empirical C
    halfwidth: float


def gp_scale(n: int, box: float) -> float:
    if box <= 1:
        raise ConfigError("box side must exceed 1", key="box")
    return n / box + n * n * math.log(box) / box**2


def gp_energy_window(n: int, box: float, a: float, constant: float = 1.0) -> GPWindow:
    center = 4 * math.pi * a * n * n / box
    s = gp_scale(n, box) if n > 0 else 0.0
    return GPWindow(center, s, constant, constant * s)


def fit_window_constant(samples, a: float) -> float:
    """Smallest C with ``|E - 4 pi a n^2 / l| <= C (n/l + n^2 ln l / l^2)`` for
    every (n, l, E) sample."""
    best = 0.0
    for n, box, e in samples:
        win = gp_energy_window(n, box, a)
        if win.scale > 0:
            best = max(best, abs(e - win.center) / win.scale)
    return best


def lhy_energy(rho: float, a: float) -> float:
    """Energy per particle to second order in the gas parameter."""
    if a == 0:
        return 0.0
    if rho < 0 or rho * a**3 >= 1:
        raise ConfigError("need 0 <= rho a^3 < 1", key="rho")
    return 4 * math.pi * rho * a * (1 + LHY_COEFFICIENT * math.sqrt(rho * a**3))
