"""Radial interaction potentials.

A :class:`Potential` is immutable; the coupling ``kappa`` travels with it so
every downstream formula sees ``kappa * V`` as one object.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy import integrate

from .errors import ConfigError

KINDS = ("soft-sphere", "truncated-polynomial", "tabulated")

# exponent of the truncated polynomial bump V0 * (1 - (r/R0)^2)^4
POLY_EXPONENT = 4


@dataclass(frozen=True)
class Potential:
    """Nonnegative, bounded, compactly supported radial potential.

    ``R0`` is the support radius: ``V(r) = 0`` for ``r > R0``.  For the
    tabulated kind ``V0`` and ``R0`` are derived from the table.
    """

    kind: str = "soft-sphere"
    V0: float = 1.0
    R0: float = 1.0
    kappa: float = 1.0
    table: tuple[tuple[float, float], ...] | None = field(default=None, repr=False)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ConfigError(f"unknown potential kind {self.kind!r}", key="kind")
        if self.kappa < 0:
            raise ConfigError("coupling must be nonnegative", key="kappa")
        if self.kind == "tabulated":
            if not self.table or len(self.table) < 2:
                raise ConfigError("tabulated potential needs >= 2 samples", key="table")
            radii = np.array([r for r, _ in self.table], dtype=float)
            values = np.array([v for _, v in self.table], dtype=float)
            if radii[0] < 0 or np.any(np.diff(radii) <= 0):
                raise ConfigError("tabulated radii must be nonnegative and strictly increasing",
                                  key="table")
            if np.any(values < 0) or not np.all(np.isfinite(values)):
                raise ConfigError("tabulated values must be finite and nonnegative", key="table")
            object.__setattr__(self, "table", tuple((float(r), float(v)) for r, v in self.table))
            object.__setattr__(self, "V0", float(values.max()))
            object.__setattr__(self, "R0", float(radii[-1]))
        else:
            if self.V0 < 0:
                raise ConfigError("V0 must be nonnegative", key="V0")
            if self.R0 <= 0:
                raise ConfigError("R0 must be positive", key="R0")

    def with_kappa(self, kappa: float) -> "Potential":
        return Potential(self.kind, self.V0, self.R0, kappa, self.table)

    def breakpoints(self) -> list[float]:
        """Radii where V is not smooth (support edge, table nodes)."""
        if self.kind == "tabulated":
            return [r for r, _ in self.table if r > 0]
        return [self.R0]

    def to_dict(self) -> dict:
        d = {"kind": self.kind, "V0": self.V0, "R0": self.R0, "kappa": self.kappa}
        if self.table is not None:
            d["table"] = [list(t) for t in self.table]
        return d


def load_table(path) -> tuple[tuple[float, float], ...]:
    """Read a ``radius,value`` CSV (header optional)."""
    rows = []
    with open(Path(path), newline="") as fh:
        for i, row in enumerate(csv.reader(fh), start=1):
            if not row or row[0].strip().startswith("#"):
                continue
            try:
                rows.append((float(row[0]), float(row[1])))
            except (ValueError, IndexError):
                if i == 1:
                    continue  # header
                raise ConfigError(f"bad table row {row!r}", key="table", line=i)
    return tuple(rows)


def evaluate(pot: Potential, r):
    """V(r); exactly zero beyond the support.  Vectorised over ``r``."""
    r = np.asarray(r, dtype=float)
    if np.any(r < 0):
        raise ConfigError("radius must be nonnegative")
    if pot.kind == "soft-sphere":
        out = np.where(r <= pot.R0, pot.V0, 0.0)
    elif pot.kind == "truncated-polynomial":
        s = np.clip(1.0 - (r / pot.R0) ** 2, 0.0, None)
        out = pot.V0 * s**POLY_EXPONENT
    else:
        radii = np.array([t[0] for t in pot.table])
        values = np.array([t[1] for t in pot.table])
        out = np.where(r <= radii[-1], np.interp(r, radii, values), 0.0)
    return out if out.ndim else float(out)


def coupled(pot: Potential, r, scale: float = 1.0):
    """``kappa * scale**2 * V(scale * r)``, the interaction seen in a box
    whose lengths are measured in units of ``1/scale``."""
    return pot.kappa * scale**2 * evaluate(pot, np.asarray(r, dtype=float) * scale)


def _radial_segments(pot: Potential):
    edges = sorted({0.0, *pot.breakpoints()})
    return list(zip(edges[:-1], edges[1:]))


def radial_integral(pot: Potential, weight) -> float:
    """Integral of ``V(r) * weight(r)`` over [0, R0] with adaptive
    Gauss-Kronrod on each smooth segment."""
    total = 0.0
    for a, b in _radial_segments(pot):
        # evaluate strictly inside the segment so a jump at b is seen from the left
        val, _ = integrate.quad(lambda r: float(evaluate(pot, r)) * weight(r), a, b,
                                epsabs=1e-12, epsrel=1e-12, limit=200)
        total += val
    return total


def integral_norms(pot: Potential) -> dict:
    """3D integrals of V: L1 = int V, L1_over_r = int V/|x|, Linf = sup V."""
    if pot.V0 == 0:
        return {"L1": 0.0, "L1_over_r": 0.0, "Linf": 0.0}
    l1 = radial_integral(pot, lambda r: 4 * np.pi * r * r)
    l1r = radial_integral(pot, lambda r: 4 * np.pi * r)
    if pot.kind == "tabulated":
        linf = pot.V0
    else:
        linf = float(evaluate(pot, 0.0))
    return {"L1": l1, "L1_over_r": l1r, "Linf": linf}
