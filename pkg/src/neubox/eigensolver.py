"""Single-vector LOBPCG for the lowest eigenpair of a symmetric operator."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np
import scipy.linalg

from . import numerics as nx
from .errors import EigensolverError


@dataclass
class EigenResult:
    value: float
    vector: np.ndarray
    iterations: int
    residual: float
    history: list = field(default_factory=list)


def _orth(v, basis, basis_images, image):
    """Twice-applied Gram-Schmidt of v (and its image under A) against an
    orthonormal basis; returns normalised pair or None if v collapses."""
    scale = nx.norm(v)
    for _ in range(2):
        for i, b in enumerate(basis):
            c = nx.dot(b, v)
            v = v - c * b
            if image is not None:
                image = image - c * basis_images[i]
    nv = nx.norm(v)
    if nv <= 1e-10 * scale or nv == 0.0:
        return None, None
    return v / nv, (image / nv if image is not None else None)


def lobpcg_lowest(apply: Callable, x0: np.ndarray, precond: Callable | None = None,
                  project: Callable | None = None, tol: float = 1e-8,
                  maxiter: int = 200) -> EigenResult:
    """Lowest eigenpair of ``apply`` starting from ``x0``.

    ``project`` maps iterates back to an invariant subspace (e.g. exchange
    symmetric functions).  Convergence: ``||A x - lam x|| <= tol ||x||``.
    """
    project = project or (lambda v: v)
    precond = precond or (lambda v: v)
    x = project(np.array(x0, dtype=float))
    x = x / nx.norm(x)
    ax = apply(x)
    p = ap = None
    history = []
    lam = nx.dot(x, ax)
    for it in range(maxiter + 1):
        lam = nx.dot(x, ax)
        r = ax - lam * x
        rn = nx.norm(r)
        history.append(rn)
        if rn <= tol:
            return EigenResult(lam, x, it, rn, history)
        if it == maxiter:
            break
        w = project(precond(r))
        del r
        w, _ = _orth(w, [x] + ([p] if p is not None else []), [], None)
        if w is None:
            # preconditioned residual lies in span(x, p): stagnation
            break
        aw = apply(w)
        basis, images = [x, w], [ax, aw]
        if p is not None:
            # re-orthogonalise the search direction against the new pair
            p, ap = _orth(p, [x, w], [ax, aw], ap)
            if p is not None:
                basis.append(p)
                images.append(ap)
        k = len(basis)
        H = np.empty((k, k))
        for i in range(k):
            for j in range(i, k):
                H[i, j] = H[j, i] = 0.5 * (nx.dot(basis[i], images[j]) + nx.dot(basis[j], images[i]))
        _, vecs = scipy.linalg.eigh(H)
        c = vecs[:, 0]
        pn = c[1] * basis[1]
        apn = c[1] * images[1]
        if k == 3:
            pn += c[2] * basis[2]
            apn += c[2] * images[2]
        x = c[0] * x + pn
        ax = c[0] * ax + apn
        scale = nx.norm(x)
        x /= scale
        ax /= scale
        pnorm = nx.norm(pn)
        if pnorm > 0:
            p, ap = pn / pnorm, apn / pnorm
        else:
            p = ap = None
        del basis, images
    raise EigensolverError(f"LOBPCG did not reach residual {tol:g} in {maxiter} iterations "
                           f"(last {history[-1]:.3e})", history)
