"""Exact diagonalisation of n bosons in a truncated Neumann mode basis.

``H = sum_p p^2 a_p^* a_p + 1/2 sum V_pqrs a_p^* a_q^* a_r a_s`` on the
fixed-n (canonical) space.  The interaction is assembled through
(n-2)-particle intermediate states: ``a_r a_s`` maps a basis state to an
intermediate one and ``a_p^* a_q^*`` maps it back.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np
import scipy.linalg
import scipy.sparse as sp
import scipy.sparse.linalg as spla
from threadpoolctl import threadpool_limits

from .errors import ConfigError, EigensolverError, SizeError
from .modes import interaction_tensor, lowest_modes, momentum_squared
from .potential import Potential

MAX_DIM = 200_000
DENSE_DIM = 5000


def _compositions(n: int, k: int):
    """Occupation vectors of n bosons in k modes, lexicographically descending
    from (n, 0, ..., 0)."""
    if k == 1:
        yield (n,)
        return
    for first in range(n, -1, -1):
        for rest in _compositions(n - first, k - 1):
            yield (first,) + rest


@dataclass
class FockBasis:
    modes: list
    n: int
    states: np.ndarray  # (dim, m_modes) occupations
    index: dict

    @property
    def dim(self) -> int:
        return len(self.states)

    @classmethod
    def build(cls, modes, n: int) -> "FockBasis":
        modes = [tuple(int(v) for v in k) for k in modes]
        if n < 0:
            raise ConfigError("particle number must be >= 0", key="n")
        dim = math.comb(n + len(modes) - 1, n) if modes else 0
        if dim > MAX_DIM:
            raise SizeError(f"Fock dimension {dim} exceeds {MAX_DIM}")
        states = np.array(list(_compositions(n, len(modes))), dtype=np.int64).reshape(-1, len(modes))
        index = {tuple(s): i for i, s in enumerate(states)}
        return cls(modes, n, states, index)


@dataclass
class ManyBodyOperator:
    matrix: sp.csr_matrix
    label: str
    basis: FockBasis

    def asymmetry(self) -> float:
        diff = self.matrix - self.matrix.T
        return float(abs(diff).max()) if diff.nnz else 0.0


def _annihilate_pairs(basis: FockBasis):
    """For every state and ordered mode pair (r, s) with a_r a_s |state> != 0:
    (intermediate occupation tuple, pair, amplitude, state index)."""
    M = len(basis.modes)
    for idx, occ in enumerate(basis.states):
        occ = occ.copy()
        for s in range(M):
            ns = occ[s]
            if ns == 0:
                continue
            occ[s] -= 1
            for r in range(M):
                nr = occ[r]
                if nr == 0:
                    continue
                amp = math.sqrt(ns * nr)
                occ[r] -= 1
                yield tuple(occ), (r, s), amp, idx
                occ[r] += 1
            occ[s] += 1


def build_hamiltonian(pot: Potential, box: float, basis: FockBasis,
                      tensor: np.ndarray | None = None, box_units: bool = False,
                      order: int = 10) -> ManyBodyOperator:
    """Hamiltonian on the unit box (default) or, with ``box_units``, on the
    box of side ``box``: momenta ``pi k / l`` and matrix elements divided by
    ``l^2``."""
    M = len(basis.modes)
    if tensor is None:
        tensor = interaction_tensor(pot, box, basis.modes, order=order)
    kin = np.array([momentum_squared(k) for k in basis.modes])
    if box_units:
        kin = kin / box**2
        tensor = tensor / box**2
    diag = basis.states @ kin
    rows, cols, vals = [list(range(basis.dim))], [list(range(basis.dim))], [diag]
    if basis.n >= 2 and np.any(tensor):
        groups: dict = {}
        for inter, pair, amp, idx in _annihilate_pairs(basis):
            groups.setdefault(inter, []).append((pair, amp, idx))
        for inter in sorted(groups):
            entries = groups[inter]
            pr = np.array([e[0][0] for e in entries])
            ps = np.array([e[0][1] for e in entries])
            amp = np.array([e[1] for e in entries])
            idx = np.array([e[2] for e in entries])
            # <out| a_p^* a_q^* |I> <I| a_r a_s |in> V_pqrs / 2; creation is
            # the adjoint of annihilation with the same amplitude
            block = 0.5 * tensor[pr[:, None], ps[:, None], pr[None, :], ps[None, :]]
            block *= amp[:, None] * amp[None, :]
            rr, cc = np.meshgrid(idx, idx, indexing="ij")
            rows.append(rr.ravel())
            cols.append(cc.ravel())
            vals.append(block.ravel())
    r = np.concatenate([np.asarray(x, dtype=np.int64) for x in rows])
    c = np.concatenate([np.asarray(x, dtype=np.int64) for x in cols])
    v = np.concatenate([np.asarray(x, dtype=float) for x in vals])
    H = sp.coo_matrix((v, (r, c)), shape=(basis.dim, basis.dim)).tocsr()
    H.sum_duplicates()
    H = ((H + H.T) * 0.5).tocsr()
    return ManyBodyOperator(H, f"H(n={basis.n}, modes={M}, box={box})", basis)


def ground_state(H: ManyBodyOperator):
    """Lowest eigenpair; dense LAPACK up to 5000 states, ARPACK beyond.

    LAPACK/ARPACK run on one BLAS thread so the result does not depend on the
    thread pool size.
    """
    dim = H.matrix.shape[0]
    with threadpool_limits(limits=1):
        if dim <= DENSE_DIM:
            vals, vecs = scipy.linalg.eigh(H.matrix.toarray(), subset_by_index=[0, 0])
            e, v = float(vals[0]), vecs[:, 0]
        else:
            try:
                vals, vecs = spla.eigsh(H.matrix, k=1, which="SA", v0=np.ones(dim), tol=1e-12,
                                        maxiter=20 * dim)
            except spla.ArpackNoConvergence as exc:
                raise EigensolverError("ARPACK did not converge") from exc
            e, v = float(vals[0]), vecs[:, 0]
    if v[np.argmax(np.abs(v))] < 0:
        v = -v
    return e, v


def depletion(vector: np.ndarray, basis: FockBasis) -> float:
    """``1 - <a_0^* a_0> / n`` with mode 0 the constant."""
    if basis.n == 0:
        return 0.0
    zero = basis.modes.index((0,) * len(basis.modes[0]))
    prob = vector * vector
    occ0 = float(np.dot(prob, basis.states[:, zero]))
    return 1.0 - occ0 / basis.n


@dataclass
class FockResult:
    n: int
    modes: int
    box: float
    energy: float
    depletion: float
    basis_dim: int

    def to_dict(self):
        return dict(self.__dict__)


def solve(pot: Potential, box: float, n: int, m_modes: int, d: int = 3,
          tensor: np.ndarray | None = None) -> FockResult:
    modes = lowest_modes(m_modes, d)
    basis = FockBasis.build(modes, n)
    if tensor is not None:
        tensor = tensor[:m_modes, :m_modes, :m_modes, :m_modes]
    H = build_hamiltonian(pot, box, basis, tensor)
    e, v = ground_state(H)
    return FockResult(n, m_modes, box, e, depletion(v, basis), basis.dim)
