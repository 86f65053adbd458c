"""Free resolvent kernels in R^D and Neumann Green functions on the cube
``[-l/2, l/2]^D`` built from image charges."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .bessel import bessel_k
from .errors import ConfigError, DomainError


@dataclass(frozen=True)
class FreeKernelSpec:
    """Kernel of ``(-Laplace + eps)^{-1}`` in R^D."""

    D: int
    eps: float

    def __post_init__(self):
        if self.D < 1 or int(self.D) != self.D:
            raise ConfigError("dimension must be a positive integer", key="dim")
        if self.D > 1 and self.D % 2:
            raise ConfigError("only D = 1 and even D are supported", key="dim")
        if not self.eps > 0:
            raise ConfigError("eps must be positive", key="eps")

    @property
    def order(self) -> int:
        return self.D // 2 - 1


def sphere_area(D: int) -> float:
    """Surface area of the unit sphere in R^D."""
    return 2.0 * math.pi ** (D / 2) / math.gamma(D / 2)


def radial_kernel(spec: FreeKernelSpec, r):
    """Free kernel as a function of distance ``r > 0`` (vectorised)."""
    r = np.asarray(r, dtype=float)
    if np.any(~(r > 0)):
        raise DomainError("free kernel is singular at the origin")
    k = math.sqrt(spec.eps)
    if spec.D == 1:
        return np.exp(-k * r) / (2.0 * k)
    nu = spec.order
    z = k * r
    return (2 * math.pi) ** (-spec.D / 2) * spec.eps**nu * z ** (-nu) * bessel_k(nu, z)


def radial_kernel_derivative(spec: FreeKernelSpec, r):
    """d/dr of :func:`radial_kernel`."""
    r = np.asarray(r, dtype=float)
    if np.any(~(r > 0)):
        raise DomainError("free kernel is singular at the origin")
    k = math.sqrt(spec.eps)
    if spec.D == 1:
        return -0.5 * np.exp(-k * r)
    nu = spec.order
    z = k * r
    return -(2 * math.pi) ** (-spec.D / 2) * spec.eps**nu * k * z ** (-nu) * bessel_k(nu + 1, z)


def free_kernel(spec: FreeKernelSpec, x) -> float:
    x = np.asarray(x, dtype=float)
    if x.shape != (spec.D,):
        raise DomainError(f"point must have {spec.D} coordinates")
    return float(radial_kernel(spec, np.linalg.norm(x)))


def free_kernel_gradient(spec: FreeKernelSpec, x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    r = np.linalg.norm(x)
    return radial_kernel_derivative(spec, r) * x / r


def tail_integral(spec: FreeKernelSpec, rho: float) -> float:
    """``int_{|u| > rho} G(u) du``, exact from the defining equation."""
    return -sphere_area(spec.D) * rho ** (spec.D - 1) * float(
        radial_kernel_derivative(spec, rho)) / spec.eps


# ---------------------------------------------------------------- images

@dataclass
class ImageChargeSet:
    """Reflections of ``y`` with multi-indices ``|n_j| <= radius``.

    ``points`` excludes ``y`` itself; ``indices`` holds the matching
    multi-indices in lexicographic order.
    """

    box: float
    source: np.ndarray
    radius: int
    indices: np.ndarray
    points: np.ndarray

    def __len__(self):
        return len(self.points)


def _check_inside(box, *pts):
    for p in pts:
        if np.any(np.abs(p) > box / 2 * (1 + 1e-14)):
            raise DomainError("point lies outside the cube [-l/2, l/2]^D")


def axis_images(box: float, y: np.ndarray, radius: int) -> np.ndarray:
    """Per-axis image coordinates, shape (D, 2 radius + 1), index n = -R..R."""
    n = np.arange(-radius, radius + 1)
    sign = np.where(n % 2 == 0, 1.0, -1.0)
    return n[None, :] * box + sign[None, :] * np.asarray(y, dtype=float)[:, None]


def enumerate_images(box: float, y, radius: int) -> ImageChargeSet:
    y = np.atleast_1d(np.asarray(y, dtype=float))
    if radius < 1:
        raise ConfigError("radius must be >= 1", key="radius")
    _check_inside(box, y)
    D = len(y)
    coords = axis_images(box, y, radius)
    grids = np.meshgrid(*[np.arange(-radius, radius + 1)] * D, indexing="ij")
    idx = np.stack([g.ravel() for g in grids], axis=1)
    keep = np.any(idx != 0, axis=1)
    idx = idx[keep]
    pts = np.stack([coords[j, idx[:, j] + radius] for j in range(D)], axis=1)
    return ImageChargeSet(box=box, source=y, radius=radius, indices=idx, points=pts)


def _squared_distances(box, x, y, radius):
    """All squared distances |x - y_n|^2 including n = 0, shape (2R+1,)*D.

    Each per-axis table is sorted, so the result (and any reduction over it)
    is bitwise identical when x and y are swapped.
    """
    coords = axis_images(box, y, radius)
    per_axis = np.sort((x[:, None] - coords) ** 2, axis=1)
    total = per_axis[0]
    for j in range(1, len(x)):
        total = np.add.outer(total, per_axis[j])
    return total


@dataclass
class GreenValue:
    value: float
    tail_estimate: float


def image_tail_bound(spec: FreeKernelSpec, box: float, radius: int) -> float:
    """Bound on the omitted images.  Any image with some ``|n_j| > radius``
    sits at distance >= radius*l; shifting each unit cell inward by its
    diameter turns the cell sum into the exterior integral of G."""
    rho = max(radius - math.sqrt(spec.D), 0.5) * box
    return tail_integral(spec, rho) / box**spec.D


def neumann_green(spec: FreeKernelSpec, box: float, x, y, radius: int = 6) -> GreenValue:
    x = np.atleast_1d(np.asarray(x, dtype=float))
    y = np.atleast_1d(np.asarray(y, dtype=float))
    if x.shape != (spec.D,) or y.shape != (spec.D,):
        raise DomainError(f"points must have {spec.D} coordinates")
    _check_inside(box, x, y)
    if np.array_equal(x, y):
        raise DomainError("Green function is singular at x = y")
    if radius < 1:
        raise ConfigError("radius must be >= 1", key="radius")
    r2 = _squared_distances(box, x, y, radius).ravel()
    value = float(np.sum(radial_kernel(spec, np.sqrt(r2))))
    return GreenValue(value, image_tail_bound(spec, box, radius))


def neumann_green_gradient(spec: FreeKernelSpec, box: float, x, y, radius: int = 6) -> np.ndarray:
    """Gradient in ``x`` of the truncated image sum."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    y = np.atleast_1d(np.asarray(y, dtype=float))
    coords = axis_images(box, y, radius)
    D = len(x)
    diffs = x[:, None] - coords  # (D, 2R+1)
    r2 = (diffs[0] ** 2)
    for j in range(1, D):
        r2 = np.add.outer(r2, diffs[j] ** 2)
    r = np.sqrt(r2)
    g = radial_kernel_derivative(spec, r) / r
    grad = np.empty(D)
    for j in range(D):
        shape = [1] * D
        shape[j] = -1
        grad[j] = float(np.sum(g * diffs[j].reshape(shape)))
    return grad


def neumann_green_1d(eps: float, box: float, x: float, y: float) -> float:
    """Closed form of the Neumann Green function on [-l/2, l/2]."""
    k = math.sqrt(eps)
    lo, hi = min(x, y), max(x, y)
    return math.cosh(k * (lo + box / 2)) * math.cosh(k * (box / 2 - hi)) / (k * math.sinh(k * box))


# ---------------------------------------------------------------- bounds

@dataclass
class GreenBoundsReport:
    max_value_ratio: float
    max_gradient_ratio: float
    value_ratios: np.ndarray
    gradient_ratios: np.ndarray
    near_fraction: np.ndarray  # share of the singular term in each denominator


def verify_green_bounds(spec: FreeKernelSpec, box: float, pairs, radius: int = 6) -> GreenBoundsReport:
    """Empirical constants for the pointwise and gradient bounds.

    For each pair the value ratio is ``G / (|x-y|^-4 + 1/(l^6 eps))`` and the
    gradient ratio is the largest component of ``grad G - grad G_free``
    divided by ``sum_near |x - y_n|^-5 + 1/(sqrt(eps) l^6)``, where the near
    images are the reflections within distance ``l`` of ``y``.
    """
    if spec.D != 6:
        raise ConfigError("bounds are stated for D = 6", key="dim")
    pairs = list(pairs)
    vr, gr, frac = [], [], []
    far = 1.0 / (box**6 * spec.eps)
    far_grad = 1.0 / (math.sqrt(spec.eps) * box**6)
    for x, y in pairs:
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        d = np.linalg.norm(x - y)
        g = neumann_green(spec, box, x, y, radius).value
        near = d**-4
        vr.append(g / (near + far))
        frac.append(near / (near + far))
        imgs = enumerate_images(box, y, 1)
        close = imgs.points[np.linalg.norm(imgs.points - y, axis=1) < box]
        close = np.unique(np.round(close, 14), axis=0)
        dist = np.linalg.norm(close - x, axis=1)
        denom = float(np.sum(dist[dist > 0] ** -5.0)) + far_grad
        diff = neumann_green_gradient(spec, box, x, y, radius) - free_kernel_gradient(spec, x - y)
        gr.append(float(np.max(np.abs(diff))) / denom)
    vr, gr = np.array(vr), np.array(gr)
    return GreenBoundsReport(float(vr.max()), float(gr.max()), vr, gr, np.array(frac))
