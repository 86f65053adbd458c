"""Correlation kernels on the unit box and their hyperbolic functions.

A :class:`KernelMatrix` stores ``K(x_i, y_j)`` on the cell-centred grid of
``[-1/2, 1/2]^d`` with ``m`` points per axis.  Composition carries the
quadrature weight ``w = h^d``: ``(AB)(x, y) = sum_z A(x, z) B(z, y) w``, so the
operator acting on grid functions is ``K w`` and the identity kernel is
``I / w``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import numerics as nx
from .errors import ConfigError

SERIES_GUARD = 60


@dataclass
class KernelMatrix:
    matrix: np.ndarray
    d: int
    m: int

    @property
    def h(self) -> float:
        return 1.0 / self.m

    @property
    def weight(self) -> float:
        return self.h**self.d

    @property
    def size(self) -> int:
        return self.m**self.d

    def operator(self) -> np.ndarray:
        return self.matrix * self.weight

    def hs_norm(self) -> float:
        return math.sqrt(nx.dot(self.matrix, self.matrix)) * self.weight

    def field(self) -> np.ndarray:
        """Kernel as an array of shape (m,)*2d."""
        return self.matrix.reshape((self.m,) * (2 * self.d))

    def row_integrals(self) -> np.ndarray:
        """``int K(x, y) dy`` for every grid point x."""
        return self.matrix.sum(axis=1) * self.weight

    def asymmetry(self) -> float:
        return float(np.max(np.abs(self.matrix - self.matrix.T)))

    def like(self, matrix) -> "KernelMatrix":
        return KernelMatrix(matrix, self.d, self.m)

    @classmethod
    def from_field(cls, values: np.ndarray, d: int) -> "KernelMatrix":
        m = values.shape[0]
        if values.shape != (m,) * (2 * d):
            raise ConfigError("field shape does not match (m,)*2d", key="grid")
        return cls(values.reshape(m**d, m**d).copy(), d, m)


def compose(a: KernelMatrix, b: KernelMatrix) -> KernelMatrix:
    return a.like(a.matrix @ b.matrix * a.weight)


def identity(like: KernelMatrix) -> KernelMatrix:
    return like.like(np.eye(like.size) / like.weight)


def _symmetrize(a: np.ndarray) -> np.ndarray:
    return 0.5 * (a + a.T)


def restrict(values: np.ndarray, d: int, factor: int) -> np.ndarray:
    """Average a (m,)*2d field over blocks of ``factor`` cells per axis."""
    m = values.shape[0]
    if m % factor:
        raise ConfigError(f"coarse factor {factor} does not divide grid size {m}", key="coarse-grid")
    mc = m // factor
    shaped = values.reshape(sum(([mc, factor] for _ in range(2 * d)), []))
    return shaped.mean(axis=tuple(range(1, 4 * d, 2)))


def build_w_and_k(f_unit: np.ndarray, box: float, n: int, d: int):
    """``w = 1 - l^d f_l`` and ``k = -n w`` from the unit-box two-body state.

    ``f_unit`` holds ``f_l(x, y) = f(l x, l y)`` on the (m,)*2d unit grid.
    """
    if n < 1:
        raise ConfigError("particle number must be >= 1", key="n")
    w = 1.0 - box**d * f_unit
    wk = KernelMatrix.from_field(w, d)
    wk.matrix = _symmetrize(wk.matrix)
    return wk, wk.like(-n * wk.matrix)


def project_eta(k: KernelMatrix):
    """``eta = Q k Q`` with Q removing the constant; returns (eta, mu)."""
    rows = k.matrix.sum(axis=1, keepdims=True) * k.weight   # int k(x, z) dz
    cols = k.matrix.sum(axis=0, keepdims=True) * k.weight   # int k(z, y) dz
    tot = rows.sum() * k.weight
    mu = -rows - cols + tot
    eta = _symmetrize(k.matrix + mu)
    return k.like(eta), k.like(_symmetrize(np.broadcast_to(mu, k.matrix.shape).copy()))


@dataclass
class HyperbolicKernels:
    sigma: KernelMatrix   # sinh(eta)
    gamma: KernelMatrix   # cosh(eta)
    p: KernelMatrix       # gamma - 1
    r: KernelMatrix       # sigma - eta
    terms: int
    last_term_norm: float


def hyperbolic_split(eta: KernelMatrix, tol: float = 1e-17) -> HyperbolicKernels:
    """sinh and cosh of the operator with kernel ``eta`` by power series.

    Terms ``A^j / j!`` with ``A = eta w`` are accumulated until one falls
    below ``tol`` relative to the running sum (at most 60 terms).
    """
    A = eta.operator()
    size = eta.size
    sinh = np.zeros((size, size))
    cosh_minus = np.zeros((size, size))
    term = A.copy()
    j = 1
    last = 0.0
    scale = max(np.max(np.abs(A)), 1e-300)
    while j <= SERIES_GUARD:
        if j % 2:
            sinh += term
        else:
            cosh_minus += term
        last = float(np.max(np.abs(term)))
        if last <= tol * scale or last == 0.0:
            break
        term = term @ A / (j + 1)
        j += 1
    w = eta.weight
    sinh = _symmetrize(sinh)
    cosh_minus = _symmetrize(cosh_minus)
    sigma = eta.like(sinh / w)
    p = eta.like(cosh_minus / w)
    gamma = eta.like(p.matrix + np.eye(size) / w)
    r = eta.like(sigma.matrix - eta.matrix)
    return HyperbolicKernels(sigma, gamma, p, r, j, last)


def hyperbolic_identity_error(hk: HyperbolicKernels) -> float:
    """max |gamma^2 - sigma^2 - 1| as operators."""
    g = hk.gamma.operator()
    s = hk.sigma.operator()
    return float(np.max(np.abs(g @ g - s @ s - np.eye(len(g)))))


def _grad_hs(eta: KernelMatrix) -> float:
    """HS norm of the finite-difference gradient (x and y) of the kernel."""
    v = eta.field()
    h = eta.h
    acc = 0.0
    for ax in range(v.ndim):
        vs = np.moveaxis(v, ax, 0)
        g = np.empty_like(vs)
        g[1:-1] = (vs[2:] - vs[:-2]) / (2 * h)
        g[0] = (vs[1] - vs[0]) / (2 * h)
        g[-1] = (vs[-1] - vs[-2]) / (2 * h)
        acc += nx.dot(g, g)
    return math.sqrt(acc) * eta.weight


def verify_prop_eta(eta: KernelMatrix, hk: HyperbolicKernels, n: int, box: float,
                    kappa: float) -> dict:
    """Empirical constants for the kernel estimates.  All ratios are NaN at
    zero coupling where the reference scales vanish."""
    w = eta.weight
    E = eta.matrix
    hs = eta.hs_norm()
    rows = np.sqrt(np.sum(E * E, axis=1) * w)
    x = -0.5 + (np.arange(eta.m) + 0.5) * eta.h
    pts = np.stack(np.meshgrid(*([x] * eta.d), indexing="ij"), axis=-1).reshape(-1, eta.d)
    dist = np.sqrt(((pts[:, None, :] - pts[None, :, :]) ** 2).sum(-1))
    ko = kappa * n if kappa > 0 else float("nan")
    outer = np.outer(rows, rows)
    with np.errstate(divide="ignore", invalid="ignore"):
        r_ratio = np.where(outer > 0, np.abs(hk.r.matrix) / (hs * outer), 0.0)
        p_ratio = np.where(outer > 0, np.abs(hk.p.matrix) / outer, 0.0)
    grad = _grad_hs(eta)
    return {
        "n": n, "box": box, "kappa": kappa, "n_over_box": n / box,
        "regime_ok": bool(n / box <= 1.0),
        "eta_hs": hs,
        "eta_hs_ratio": hs / (ko / box),
        "grad_hs": grad,
        "grad_hs_ratio": grad / (math.sqrt(kappa) * n / math.sqrt(box)) if kappa > 0 else float("nan"),
        "sup_eta_ratio": float(np.max(np.abs(E))) / n,
        "sup_eta_better_ratio": float(np.max(np.abs(E) * (dist + 1.0 / box))) * box / ko,
        "row_norm_max": float(rows.max()),
        "row_norm_ratio": float(rows.max()) / (ko / box),
        "sigma_ratio": hk.sigma.hs_norm() / hs if hs > 0 else 0.0,
        "p_ratio": hk.p.hs_norm() / hs if hs > 0 else 0.0,
        "r_pointwise_ratio": float(np.max(r_ratio)),
        "p_pointwise_ratio": float(np.max(p_ratio)),
        "hyperbolic_identity_error": hyperbolic_identity_error(hk),
        "row_sum_max": max(float(np.max(np.abs(k.row_integrals())))
                           for k in (eta, hk.sigma, hk.p)),
        "asymmetry_max": max(k.asymmetry() for k in (eta, hk.sigma, hk.gamma, hk.p, hk.r)),
        "series_terms": hk.terms,
    }
