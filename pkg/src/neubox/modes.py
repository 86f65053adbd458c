"""Neumann cosine modes of the unit box and two-body matrix elements.

Mode ``k`` (a d-tuple of nonnegative integers) has momentum ``pi k`` and
wave function ``prod_i c_{k_i} cos(pi k_i (x_i + 1/2))`` with ``c_0 = 1`` and
``c_k = sqrt(2)`` otherwise, which is unit-normalised on ``[-1/2, 1/2]^d``.
"""
from __future__ import annotations

import itertools
import math

import numpy as np
from numpy.polynomial.legendre import leggauss

from .errors import ConfigError, PrecisionError
from .potential import Potential, evaluate

SQRT2 = math.sqrt(2.0)


def _coef(k):
    return np.where(np.asarray(k) == 0, 1.0, SQRT2)


def mode_function(k, x):
    """phi_k at points ``x`` (shape (..., d))."""
    k = np.asarray(k, dtype=int)
    x = np.asarray(x, dtype=float)
    if x.shape[-1] != k.shape[-1]:
        raise ConfigError("mode and point dimensions differ")
    vals = _coef(k) * np.cos(np.pi * k * (x + 0.5))
    return np.prod(vals, axis=-1)


def momentum_squared(k) -> float:
    return float(np.pi**2 * np.sum(np.asarray(k) ** 2))


def lowest_modes(count: int, d: int = 3) -> list[tuple]:
    """The ``count`` modes of smallest |p|, ties broken lexicographically."""
    if count < 1:
        raise ConfigError("need at least one mode", key="modes")
    kmax = 0
    while (kmax + 1) ** d < count or kmax * kmax < _kth_norm(count, d, kmax):
        kmax += 1
    cand = list(itertools.product(range(kmax + 2), repeat=d))
    cand.sort(key=lambda t: (sum(c * c for c in t), t))
    return cand[:count]


def _kth_norm(count, d, kmax):
    cand = sorted(sum(c * c for c in t) for t in itertools.product(range(kmax + 1), repeat=d))
    return cand[min(count, len(cand)) - 1]


# ------------------------------------------------------------ overlaps

def axis_overlap(a: int, b: int, c: int, e: int, u) -> np.ndarray:
    """``int dx phi_a(x) phi_c(x) phi_b(x - u) phi_e(x - u)`` over the part of
    [-1/2, 1/2] where both x and x - u lie in the interval.  Closed form as a
    sum of eight cosine integrals."""
    u = np.asarray(u, dtype=float)
    lo = np.maximum(0.0, u)
    hi = np.minimum(1.0, 1.0 + u)
    length = np.clip(hi - lo, 0.0, None)
    out = np.zeros_like(u)
    for s1, s2, s3 in itertools.product((1, -1), repeat=3):
        omega = np.pi * (a + s1 * c + s2 * b + s3 * e)
        phase = -np.pi * (s2 * b + s3 * e) * u
        if omega == 0:
            out += length * np.cos(phase)
        else:
            out += (np.sin(omega * hi + phase) - np.sin(omega * lo + phase)) / omega
    coef = float(_coef(a) * _coef(b) * _coef(c) * _coef(e))
    return np.where(length > 0, out * coef / 8.0, 0.0)


# ------------------------------------------------------------ quadrature

def _segments(pot: Potential, box: float):
    edges = sorted({0.0, *[b / box for b in pot.breakpoints()]})
    return list(zip(edges[:-1], edges[1:]))


def relative_nodes(pot: Potential, box: float, d: int, order: int):
    """Quadrature nodes ``u`` and weights for ``int du kappa l^2 V(l |u|) g(u)``
    over the support, split into orthants so the kinks of the overlaps
    (at u_i = 0) fall on cell boundaries.  Returns (nodes (N, d), weights)."""
    x, w = leggauss(order)
    t = 0.5 * (x + 1)
    wt = 0.5 * w
    rs, rw = [], []
    for a, b in _segments(pot, box):
        rs.append(a + (b - a) * t)
        rw.append((b - a) * wt)
    r = np.concatenate(rs)
    r_w = np.concatenate(rw)
    vr = pot.kappa * box**2 * np.asarray(evaluate(pot, r * box), dtype=float)
    if d == 1:
        nodes = np.concatenate([r, -r])[:, None]
        weights = np.concatenate([r_w * vr, r_w * vr])
    elif d == 2:
        ang = np.concatenate([q * np.pi / 2 + np.pi / 2 * t for q in range(4)])
        aw = np.tile(np.pi / 2 * wt, 4)
        R, A = np.meshgrid(r, ang, indexing="ij")
        nodes = np.stack([R * np.cos(A), R * np.sin(A)], axis=-1).reshape(-1, 2)
        weights = (np.outer(r_w * vr * r, aw)).ravel()
    elif d == 3:
        # polar angle itself (not its cosine) keeps the octant integrand analytic
        th = np.concatenate([np.pi / 2 * t, np.pi / 2 + np.pi / 2 * t])
        tw = np.tile(np.pi / 2 * wt, 2) * np.sin(th)
        ang = np.concatenate([q * np.pi / 2 + np.pi / 2 * t for q in range(4)])
        aw = np.tile(np.pi / 2 * wt, 4)
        R, T, A = np.meshgrid(r, th, ang, indexing="ij")
        s = np.sin(T)
        nodes = np.stack([R * s * np.cos(A), R * s * np.sin(A), R * np.cos(T)], axis=-1).reshape(-1, 3)
        weights = np.einsum("i,j,k->ijk", r_w * vr * r * r, tw, aw).ravel()
    else:
        raise ConfigError("dimension must be 1, 2 or 3", key="dim")
    return nodes, weights


def _cosine_overlap(j1: int, j2: int, u) -> np.ndarray:
    """``int cos(pi j1 X) cos(pi j2 (X - u)) dX`` over X in [0, 1] with
    X - u also in [0, 1]."""
    lo = np.maximum(0.0, u)
    hi = np.minimum(1.0, 1.0 + u)
    out = np.zeros_like(u)
    for omega, phase in ((j1 + j2, -j2), (j1 - j2, j2)):
        if omega == 0:
            out += (hi - lo) * np.cos(np.pi * phase * u)
        else:
            w = np.pi * omega
            out += (np.sin(w * hi + np.pi * phase * u) - np.sin(w * lo + np.pi * phase * u)) / w
    return 0.5 * out


def _tensor(modes, nodes, weights, d):
    """V[p, q, r, s] = <phi_p (x) phi_q, V phi_r (x) phi_s>.

    The products phi_p phi_r (particle 1) and phi_q phi_s (particle 2) are
    expanded into single cosines with frequencies k_p +- k_r per axis, so the
    tensor is a gather from the frequency-frequency matrix
    ``K[j1, j2] = int du V(u) prod_i H(j1_i, j2_i; u_i)``.
    """
    modes = np.asarray(modes, dtype=int)
    M = len(modes)
    J = 2 * int(modes.max()) + 1                      # frequencies 0..2 kmax
    tables = []
    for ax in range(d):
        H = np.empty((J, J, len(weights)))
        for j1 in range(J):
            for j2 in range(J):
                H[j1, j2] = _cosine_overlap(j1, j2, nodes[:, ax])
        tables.append(H)
    # rows: particle-1 frequency vector, columns: particle-2 frequency vector.
    # Accumulated over node chunks as a product of (axis 0..d-2) x (axis d-1).
    K = np.zeros((J**d, J**d))
    chunk = max(1, (1 << 22) // J ** (2 * d - 2))
    for s0 in range(0, len(weights), chunk):
        sl = slice(s0, s0 + chunk)
        left = np.ones((1, 1, len(weights[sl])))
        for H in tables[:-1]:
            left = (left[:, None, :, None, :] * H[None, :, None, :, sl]).reshape(
                left.shape[0] * J, left.shape[1] * J, -1)
        last = tables[-1][:, :, sl] * weights[sl]
        part = left.reshape(-1, left.shape[-1]) @ last.reshape(J * J, -1).T
        # (a, b, e, f) -> (a e, b f)
        K += part.reshape(J ** (d - 1), J ** (d - 1), J, J).transpose(0, 2, 1, 3).reshape(J**d, J**d)
        del left, last, part

    def options(ka, kb):
        """Linear frequency indices (2^d of them) of phi_ka phi_kb."""
        choices = [(ka[:, None, ax] + kb[None, :, ax], np.abs(ka[:, None, ax] - kb[None, :, ax]))
                   for ax in range(d)]
        idx = []
        for pick in itertools.product((0, 1), repeat=d):
            lin = np.zeros((M, M), dtype=int)
            for ax in range(d):
                lin = lin * J + choices[ax][pick[ax]]
            idx.append(lin)
        return np.stack(idx, axis=-1)                 # (M, M, 2^d)

    o = options(modes, modes)
    flat = o.reshape(M * M, -1)
    rows = K[flat].sum(axis=1)                        # (M*M, J^d) summed over particle-1 options
    S = rows[:, flat].sum(axis=-1)                    # (M*M [p,r], M*M [q,s])
    coef = np.prod(_coef(modes), axis=1)
    pref = np.einsum("p,q,r,s->pqrs", coef, coef, coef, coef) / 4.0**d
    V = S.reshape(M, M, M, M).transpose(0, 2, 1, 3) * pref
    parity = (modes[:, None, None, None, :] + modes[None, :, None, None, :]
              + modes[None, None, :, None, :] + modes[None, None, None, :, :]) % 2
    V[np.any(parity, axis=-1)] = 0.0
    # make the exchange and adjoint symmetries exact: every member of an orbit
    # sums the same sorted values
    orbit = np.sort(np.stack([V, V.transpose(1, 0, 3, 2), V.transpose(2, 3, 0, 1),
                              V.transpose(3, 2, 1, 0)]), axis=0)
    return ((orbit[0] + orbit[1]) + (orbit[2] + orbit[3])) / 4.0


def interaction_tensor(pot: Potential, box: float, modes, order: int = 10,
                       tol: float = 1e-9) -> np.ndarray:
    """All ``V_{pqrs}`` of ``kappa l^2 V(l (x - y))`` for the given modes.

    Evaluated at quadrature orders ``order`` and ``order + 6``; a difference
    above ``tol`` (relative to the largest element) raises PrecisionError.
    """
    modes = [tuple(int(v) for v in k) for k in modes]
    d = len(modes[0])
    if pot.kappa == 0 or pot.V0 == 0:
        return np.zeros((len(modes),) * 4)
    lo = _tensor(modes, *relative_nodes(pot, box, d, order), d)
    hi = _tensor(modes, *relative_nodes(pot, box, d, order + 6), d)
    scale = max(float(np.max(np.abs(hi))), 1e-300)
    err = float(np.max(np.abs(hi - lo)))
    if err > tol * scale:
        raise PrecisionError(f"matrix elements under-resolved: change {err:.2e} between orders "
                             f"{order} and {order + 6}")
    return hi


def matrix_element(pot: Potential, box: float, p, q, r, s, order: int = 10,
                   tol: float = 1e-9) -> float:
    """Single ``V_{l,pqrs}``."""
    t = interaction_tensor(pot, box, [p, q, r, s], order, tol)
    return float(t[0, 1, 2, 3])


def dct_coefficients_factor(m: int, d: int) -> float:
    """``<g, phi_p (x) phi_q>`` on the cell-centred unit grid equals this
    factor times the orthonormal type-II DCT of g (over all 2d axes)."""
    return m ** (-d)
