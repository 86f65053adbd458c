"""Two particles in a Neumann box: ground state of
``-Laplace_x - Laplace_y + kappa V(x - y)`` on ``[-l/2, l/2]^d x [-l/2, l/2]^d``.

The grid is cell-centred with mirror ghosts, so the discrete Laplacian
annihilates constants exactly and is diagonalised by the type-II DCT.
Arrays have shape ``(m,) * 2d`` with the axes of ``x`` first.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
import scipy.fft
import scipy.sparse as sp
from numpy.polynomial.legendre import leggauss

from . import numerics as nx
from .eigensolver import lobpcg_lowest
from .errors import ConfigError
from .potential import Potential, evaluate

SAMPLINGS = ("tent", "center")


@dataclass(frozen=True)
class BoxGeometry:
    d: int
    box: float
    m: int

    def __post_init__(self):
        if self.d not in (1, 2, 3):
            raise ConfigError("dimension must be 1, 2 or 3", key="dim")
        if self.m < 4:
            raise ConfigError("need at least 4 points per axis", key="grid")
        if not self.box > 0:
            raise ConfigError("box side must be positive", key="box")

    @property
    def h(self) -> float:
        return self.box / self.m

    @property
    def shape(self) -> tuple:
        return (self.m,) * (2 * self.d)

    @property
    def size(self) -> int:
        return self.m ** (2 * self.d)

    @property
    def weight(self) -> float:
        """Quadrature weight of one point of the double box."""
        return self.h ** (2 * self.d)

    def coords(self) -> np.ndarray:
        return -self.box / 2 + (np.arange(self.m) + 0.5) * self.h


# ------------------------------------------------------------ potential

def _tent_mass(lo, hi):
    """Integral of the unit tent 1 - |t| over [lo, hi] (clipped to [-1, 1])."""
    def cdf(u):
        u = np.clip(u, -1.0, 1.0)
        return np.where(u <= 0, 0.5 * (1 + u) ** 2, 1 - 0.5 * (1 - u) ** 2)
    return np.where(hi > lo, cdf(hi) - cdf(lo), 0.0)


def _tent_nodes(n):
    """Gauss nodes/weights for the unit tent on [-1, 1], split at the kink."""
    x, w = leggauss(n)
    t = 0.5 * (x + 1)
    wt = 0.5 * w * (1 - t)
    return np.concatenate([-t[::-1], t]), np.concatenate([wt[::-1], wt])


def _lattice_potential(pot: Potential, d: int, h: float, scale: float,
                       sampling: str, nodes: int = 24):
    """Potential on the difference lattice ``k h``, ``|k_i| <= K``.

    ``tent`` averages V over the triangular distribution of the difference of
    two uniform points in neighbouring cells (the Galerkin diagonal for
    piecewise-constant functions); ``center`` samples V at ``k h``.
    Returns (K, table) with table shape (2K+1,)*d, already multiplied by
    ``kappa scale^2``.
    """
    reach = pot.R0 / scale
    K = int(math.floor(reach / h)) + 1
    ks = np.arange(-K, K + 1) * h
    grids = np.meshgrid(*([ks] * d), indexing="ij")
    if sampling == "center":
        r = np.sqrt(sum(g * g for g in grids))
        table = evaluate(pot, r * scale)
    elif sampling == "tent":
        t, w = _tent_nodes(nodes)
        table = np.zeros((2 * K + 1,) * d)
        if pot.kind == "soft-sphere":
            # exact along the last axis: the indicator cuts out an interval
            outer = np.meshgrid(*([t] * (d - 1)), indexing="ij")
            ow = np.ones(())
            for _ in range(d - 1):
                ow = np.multiply.outer(ow, w)
            R = reach
            for idx in np.ndindex(*table.shape):
                centre = np.array(ks[list(idx)])
                rho2 = sum((centre[i] + outer[i] * h) ** 2 for i in range(d - 1)) if d > 1 else np.zeros(())
                rem = R * R - rho2
                half = np.sqrt(np.clip(rem, 0, None))
                lo = (-half - centre[-1]) / h
                hi = (half - centre[-1]) / h
                mass = np.where(rem > 0, _tent_mass(lo, hi), 0.0)
                table[idx] = pot.V0 * float(np.sum(ow * mass))
        else:
            pts = np.meshgrid(*([t] * d), indexing="ij")
            ww = np.ones(())
            for _ in range(d):
                ww = np.multiply.outer(ww, w)
            for idx in np.ndindex(*table.shape):
                centre = ks[list(idx)]
                r2 = sum((centre[i] + pts[i] * h) ** 2 for i in range(d))
                table[idx] = float(np.sum(ww * evaluate(pot, np.sqrt(r2) * scale)))
    else:
        raise ConfigError(f"unknown potential sampling {sampling!r}", key="sampling")
    return K, pot.kappa * scale**2 * np.asarray(table, dtype=float)


def potential_field(geom: BoxGeometry, pot: Potential, scale: float = 1.0,
                    sampling: str = "tent") -> np.ndarray:
    """Diagonal ``kappa scale^2 V(scale (x - y))`` on the grid."""
    if geom.h > pot.R0 / scale:
        warnings.warn("potential under-resolved: support narrower than one cell", stacklevel=2)
    K, table = _lattice_potential(pot, geom.d, geom.h, scale, sampling)
    m, d = geom.m, geom.d
    i = np.arange(m)
    diff = i[:, None] - i[None, :]  # x index minus y index
    inside = np.abs(diff) <= K
    field_ = np.zeros(geom.shape)
    for kidx in np.ndindex(*table.shape):
        val = table[kidx]
        if val == 0.0:
            continue
        mask = None
        for a in range(d):
            ma = (diff == kidx[a] - K) & inside
            ma = ma.reshape([m if j in (a, a + d) else 1 for j in range(2 * d)])
            mask = ma if mask is None else mask & ma
        field_[np.broadcast_to(mask, geom.shape)] = val
    return field_


# ------------------------------------------------------------ operators

def laplacian_symbol(geom: BoxGeometry) -> np.ndarray:
    """Eigenvalues of the 1D discrete Neumann Laplacian, (4/h^2) sin^2(pi k / 2m)."""
    k = np.arange(geom.m)
    return (4.0 / geom.h**2) * np.sin(np.pi * k / (2 * geom.m)) ** 2


def neg_laplacian(v: np.ndarray, h: float) -> np.ndarray:
    """``-Laplace_h v`` on all axes with mirrored ghosts."""
    out = np.zeros_like(v)
    for ax in range(v.ndim):
        vs = np.moveaxis(v, ax, 0)
        os_ = np.moveaxis(out, ax, 0)
        step = vs[1:] - vs[:-1]
        os_[:-1] -= step
        os_[1:] += step
        del step
    out /= h * h
    return out


def assemble_apply(geom: BoxGeometry, pot: Potential, scale: float = 1.0,
                   sampling: str = "tent", potential: np.ndarray | None = None):
    """Matrix-free ``v -> (-Laplace_x - Laplace_y + kappa V(x - y)) v``."""
    W = potential_field(geom, pot, scale, sampling) if potential is None else potential
    h = geom.h

    def apply(v):
        out = neg_laplacian(v, h)
        out += W * v
        return out

    apply.potential = W
    return apply


def assemble_matrix(geom: BoxGeometry, pot: Potential, scale: float = 1.0,
                    sampling: str = "tent") -> sp.csr_matrix:
    """Sparse matrix of the same operator, built from Kronecker products."""
    m, h = geom.m, geom.h
    main = np.full(m, 2.0)
    main[0] = main[-1] = 1.0
    T = sp.diags([-np.ones(m - 1), main, -np.ones(m - 1)], [-1, 0, 1]) / h**2
    n = 2 * geom.d
    L = sp.csr_matrix((geom.size, geom.size))
    for ax in range(n):
        factors = [sp.identity(m)] * n
        factors[ax] = T
        term = factors[0]
        for f in factors[1:]:
            term = sp.kron(term, f)
        L = L + term
    W = potential_field(geom, pot, scale, sampling).ravel()
    return (L + sp.diags(W)).tocsr()


def exchange(v: np.ndarray, d: int) -> np.ndarray:
    perm = list(range(d, 2 * d)) + list(range(d))
    return v.transpose(perm)


def symmetrize(v: np.ndarray, d: int) -> np.ndarray:
    return 0.5 * (v + exchange(v, d))


def dct_preconditioner(geom: BoxGeometry, shift: float | None = None):
    """Exact inverse of ``-Laplace_h + shift`` through the type-II DCT."""
    if shift is None:
        shift = (math.pi / geom.box) ** 2
    lam = laplacian_symbol(geom)
    inv = np.zeros(geom.shape)
    for ax in range(inv.ndim):
        inv = inv + lam.reshape([geom.m if j == ax else 1 for j in range(inv.ndim)])
    inv = 1.0 / (inv + shift)
    workers = nx.worker_count()

    def apply(r):
        z = scipy.fft.dctn(r, type=2, norm="ortho", workers=workers)
        z *= inv
        return scipy.fft.idctn(z, type=2, norm="ortho", overwrite_x=True, workers=workers)

    return apply


# ------------------------------------------------------------ solve

@dataclass
class TwoBodySolution:
    geometry: BoxGeometry
    f: np.ndarray
    eigenvalue: float
    iterations: int
    residual: float
    history: list = field(default_factory=list)
    kappa: float = 1.0
    scale: float = 1.0  # potential length scale the problem was posed with

    def norm(self) -> float:
        return math.sqrt(nx.dot(self.f, self.f) * self.geometry.weight)


def solve_ground_state(geom: BoxGeometry, pot: Potential, tol: float = 1e-8,
                       maxiter: int = 300, scale: float = 1.0,
                       sampling: str = "tent") -> TwoBodySolution:
    """Lowest exchange-symmetric eigenpair by preconditioned LOBPCG.

    The result is normalised in L^2 of the double box and signed so that its
    mean is positive.
    """
    if pot.kappa < 0:
        raise ConfigError("coupling must be nonnegative", key="kappa")
    apply = assemble_apply(geom, pot, scale, sampling)
    d = geom.d
    precond = dct_preconditioner(geom)
    x0 = np.ones(geom.shape)
    if np.any(apply.potential):
        # start from the constant damped where the potential acts
        x0 = x0 - 0.5 * apply.potential / apply.potential.max()
    res = lobpcg_lowest(apply, x0, precond=precond, project=lambda v: symmetrize(v, d),
                        tol=tol, maxiter=maxiter)
    f = res.vector
    if nx.total(f) < 0:
        f = -f
    f = symmetrize(f, d)
    f /= math.sqrt(nx.dot(f, f) * geom.weight)
    return TwoBodySolution(geom, f, res.value, res.iterations, res.residual,
                           res.history, pot.kappa, scale)


def rescale(sol: TwoBodySolution, factor: float) -> TwoBodySolution:
    """Shrink lengths by ``factor``: g(x, y) = f(factor x, factor y).

    Values are untouched (same array); the eigenvalue scales with factor^2.
    """
    g = sol.geometry
    geom = BoxGeometry(g.d, g.box / factor, g.m)
    return TwoBodySolution(geom, sol.f, sol.eigenvalue * factor**2, sol.iterations,
                           sol.residual, sol.history, sol.kappa, sol.scale * factor)


def rescale_to_unit_box(sol: TwoBodySolution) -> TwoBodySolution:
    return rescale(sol, sol.geometry.box)


# ------------------------------------------------------------ properties

@dataclass
class PropertyReport:
    box: float
    d: int
    kappa: float
    eigenvalue: float
    lambda_ratio: float            # lambda l^d / (8 pi a) for d = 3
    gradient_energy: float
    gradient_ratio: float          # (i)   / (kappa l^-d)
    sup_ratio: float               # (ii)  sup|f| l^d
    l2_deviation: float            # (iii) ||l^-d - f||_2
    l2_ratio: float                #       / (kappa / l)
    l1_deviation: float
    l1_ratio: float                #       / (kappa l^2)
    pointwise_ratio: float         # (iv)  sup (|x-y|+1)|1 - l^d f| / kappa
    cm_gradient_ratio: float       # (v)   sup (dist^{5/3}+1)|grad_{x+y} f| l^d / kappa
    min_f: float
    exchange_asymmetry: float

    def to_dict(self):
        return dict(self.__dict__)


def _central_gradient(v, ax, h):
    """Centred difference with mirror ghosts (zero at the faces' ghosts)."""
    vs = np.moveaxis(v, ax, 0)
    out = np.empty_like(vs)
    out[1:-1] = vs[2:] - vs[:-2]
    out[0] = vs[1] - vs[0]
    out[-1] = vs[-1] - vs[-2]
    out /= 2 * h
    return np.moveaxis(out, 0, ax)


def verify_minimizer_properties(sol: TwoBodySolution, scattering_length: float) -> PropertyReport:
    geom = sol.geometry
    d, m, h, ell = geom.d, geom.m, geom.h, geom.box
    f = sol.f
    w = geom.weight
    kappa = sol.kappa
    const = ell ** (-d)
    safe = kappa if kappa > 0 else float("nan")

    grad_energy = nx.dot(f, neg_laplacian(f, h)) * w
    dev = f - const
    l2 = math.sqrt(nx.dot(dev, dev) * w)
    l1 = nx.total(np.abs(dev)) * w

    x = geom.coords()
    dist2 = np.zeros(geom.shape)
    for a in range(d):
        diff = (x[:, None] - x[None, :]) ** 2
        dist2 = dist2 + diff.reshape([m if j in (a, a + d) else 1 for j in range(2 * d)])
    pw = np.max((np.sqrt(dist2) + 1) * np.abs(1 - ell**d * f))
    del dist2

    cm = np.zeros(geom.shape)
    for a in range(d):
        comp = _central_gradient(f, a, h) + _central_gradient(f, a + d, h)
        cm += comp * comp
    cm = np.sqrt(cm)
    # distance of the midpoint (x+y)/2 to the boundary
    mid = np.full(geom.shape, np.inf)
    for a in range(d):
        c = 0.5 * (x[:, None] + x[None, :])
        da = (ell / 2 - np.abs(c)).reshape([m if j in (a, a + d) else 1 for j in range(2 * d)])
        mid = np.minimum(mid, da)
    cmr = float(np.max((mid ** (5.0 / 3.0) + 1) * cm)) * ell**d
    del cm, mid

    lam_ratio = (sol.eigenvalue * ell**3 / (8 * math.pi * scattering_length)
                 if scattering_length > 0 else float("nan"))
    return PropertyReport(
        box=ell, d=d, kappa=kappa, eigenvalue=sol.eigenvalue, lambda_ratio=lam_ratio,
        gradient_energy=grad_energy,
        gradient_ratio=grad_energy / (safe * ell ** (-d)),
        sup_ratio=float(np.max(np.abs(f))) * ell**d,
        l2_deviation=l2, l2_ratio=l2 / (safe / ell),
        l1_deviation=l1, l1_ratio=l1 / (safe * ell**2),
        pointwise_ratio=float(pw) / safe,
        cm_gradient_ratio=cmr / safe,
        min_f=float(f.min()),
        exchange_asymmetry=float(np.max(np.abs(f - exchange(f, d)))),
    )


def richardson(values, spacings, order: int = 2) -> float:
    """Extrapolate two results at spacings h1, h2 assuming error ~ h^order."""
    (v1, v2), (h1, h2) = values, spacings
    a, b = h1**order, h2**order
    return (v2 * a - v1 * b) / (a - b)
