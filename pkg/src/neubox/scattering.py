"""Zero-energy s-wave scattering in three dimensions.

The radial function ``u = r f0`` solves ``-u'' + (kappa/2) V u = 0`` with
``u(0) = 0``.  Outside the support it is affine, ``u = alpha r - beta``, and the
scattering length is ``beta / alpha``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, ConsistencyError, ScatteringError
from .potential import Potential, evaluate

# 3-point Gauss-Legendre on [0, 1]
_GL_X = 0.5 + 0.5 * np.array([-np.sqrt(0.6), 0.0, np.sqrt(0.6)])
_GL_W = np.array([5.0, 8.0, 5.0]) / 18.0


@dataclass
class RadialSolution:
    r: np.ndarray
    u: np.ndarray
    du: np.ndarray
    scattering_length: float
    residual: float
    slope: float  # alpha before rescaling, i.e. 1 / f0(0)

    @property
    def f0(self) -> np.ndarray:
        f = np.empty_like(self.u)
        f[1:] = self.u[1:] / self.r[1:]
        f[0] = self.du[0]
        return f

    @property
    def c0(self) -> float:
        return float(self.f0.min())


def _grid(pot: Potential, r_max: float, n_steps: int) -> np.ndarray:
    r = np.linspace(0.0, r_max, n_steps + 1)
    extra = [b for b in pot.breakpoints() if 0 < b < r_max]
    return np.unique(np.concatenate([r, extra]))


def _coupling(pot: Potential, a, b, t):
    """kappa V / 2 at ``a + t (b - a)``, evaluated strictly inside (a, b) so
    a jump at an endpoint is seen as the one-sided limit."""
    x = a + t * (b - a)
    x = np.where(t <= 0, np.nextafter(a, b), np.where(t >= 1, np.nextafter(b, a), x))
    return 0.5 * pot.kappa * evaluate(pot, x)


def _transfer(pot: Potential, r: np.ndarray) -> np.ndarray:
    """RK4 propagators for y = (u, u') on every interval, shape (n, 2, 2)."""
    a, b = r[:-1], r[1:]
    h = b - a
    c1 = _coupling(pot, a, b, np.zeros_like(a))
    c2 = _coupling(pot, a, b, np.full_like(a, 0.5))
    c3 = _coupling(pot, a, b, np.ones_like(a))
    n = len(h)
    eye = np.broadcast_to(np.eye(2), (n, 2, 2))

    def gen(c):
        m = np.zeros((n, 2, 2))
        m[:, 0, 1] = 1.0
        m[:, 1, 0] = c
        return m

    A1, A2, A3 = gen(c1), gen(c2), gen(c3)
    hh = h[:, None, None]
    k1 = A1
    k2 = A2 @ (eye + 0.5 * hh * k1)
    k3 = A2 @ (eye + 0.5 * hh * k2)
    k4 = A3 @ (eye + hh * k3)
    return eye + hh / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)


def _integrate(pot: Potential, r: np.ndarray):
    T = _transfer(pot, r)
    u = np.empty(len(r))
    du = np.empty(len(r))
    u0, d0 = 0.0, 1.0
    u[0], du[0] = u0, d0
    for i in range(len(T)):
        t = T[i]
        u0, d0 = t[0, 0] * u0 + t[0, 1] * d0, t[1, 0] * u0 + t[1, 1] * d0
        u[i + 1], du[i + 1] = u0, d0
    return u, du


def _fit_affine(r, u, R0):
    mask = r > R0
    X = np.column_stack([r[mask], -np.ones(mask.sum())])
    (alpha, beta), *_ = np.linalg.lstsq(X, u[mask], rcond=None)
    return float(alpha), float(beta)


def _solve_raw(pot, r_max, n_steps):
    r = _grid(pot, r_max, n_steps)
    u, du = _integrate(pot, r)
    alpha, beta = _fit_affine(r, u, pot.R0)
    return r, u, du, alpha, beta


def solve_zero_energy(pot: Potential, r_max: float | None = None,
                      n_steps: int = 20000) -> RadialSolution:
    """Integrate outward from the origin and read off the scattering length.

    ``residual`` is a Richardson estimate of the global error in the
    scattering length, ``|a_h - a_{h/2}| * 16/15``; it shrinks by ~16 when
    the step is halved.
    """
    if r_max is None:
        r_max = 3.0 * pot.R0
    if r_max <= pot.R0:
        raise ConfigError("r_max must exceed the support radius", key="r_max")
    if n_steps < 100:
        raise ConfigError("n_steps must be at least 100", key="n_steps")
    if pot.kappa == 0 or pot.V0 == 0:
        # free equation: u = r exactly
        r = _grid(pot, r_max, n_steps)
        return RadialSolution(r=r, u=r.copy(), du=np.ones_like(r), scattering_length=0.0,
                              residual=0.0, slope=1.0)
    r, u, du, alpha, beta = _solve_raw(pot, r_max, n_steps)
    if np.any(u[1:] <= 0):
        raise ScatteringError("radial solution has a node for r > 0; "
                              "potential is invalid or corrupted")
    a = beta / alpha
    _, _, _, alpha2, beta2 = _solve_raw(pot, r_max, 2 * n_steps)
    residual = abs(a - beta2 / alpha2) * 16.0 / 15.0
    return RadialSolution(r=r, u=u / alpha, du=du / alpha, scattering_length=a,
                          residual=residual, slope=alpha)


def scattering_length_via_integral(sol: RadialSolution, pot: Potential,
                                   rtol: float = 1e-6) -> float:
    """``(1/8pi) int kappa V f0 dx = (kappa/2) int_0^R0 V u r dr``.

    The integrand uses the cubic Hermite interpolant of (u, u') between grid
    nodes and exact potential values at Gauss points, so it is independent of
    the affine fit used by :func:`solve_zero_energy`.
    """
    if pot.kappa == 0 or pot.V0 == 0:
        return 0.0
    r, u, du = sol.r, sol.u, sol.du
    inside = np.searchsorted(r, pot.R0, side="right")
    a, b = r[:inside - 1], r[1:inside]
    h = b - a
    total = 0.0
    for t, w in zip(_GL_X, _GL_W):
        h00 = 2 * t**3 - 3 * t**2 + 1
        h10 = t**3 - 2 * t**2 + t
        h01 = -2 * t**3 + 3 * t**2
        h11 = t**3 - t**2
        ut = (h00 * u[:inside - 1] + h10 * h * du[:inside - 1]
              + h01 * u[1:inside] + h11 * h * du[1:inside])
        rt = a + t * h
        vt = evaluate(pot, rt)
        total += float(np.sum(w * h * vt * ut * rt))
    value = 0.5 * pot.kappa * total
    ref = sol.scattering_length
    if ref > 0 and abs(value - ref) / ref > rtol:
        raise ConsistencyError(f"scattering length routes disagree: asymptotic {ref!r}, "
                               f"integral {value!r}")
    return value


def soft_sphere_length(V0: float, R0: float, kappa: float) -> float:
    """Closed-form scattering length of ``kappa V0`` on a ball of radius R0."""
    k = np.sqrt(kappa * V0 / 2.0)
    if k == 0:
        return 0.0
    return R0 * (1.0 - np.tanh(k * R0) / (k * R0))
