"""Log-log trend fits over a sweep axis."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import stats

from .errors import ConfigError, InsufficientDataError

MIN_POINTS = 3


@dataclass
class SlopeFit:
    name: str
    slope: float
    stderr: float
    intercept: float
    points: int
    expected: float | None = None
    tolerance: float | None = None

    @property
    def passed(self) -> bool | None:
        if self.expected is None:
            return None
        return abs(self.slope - self.expected) <= self.tolerance

    def to_dict(self):
        out = dict(self.__dict__)
        out["passed"] = self.passed
        return out


def fit_slope(x, y, name: str = "y", expected: float | None = None,
              tolerance: float = 0.3) -> SlopeFit:
    """Least-squares slope of log|y| against log x, with its standard error."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != y.shape:
        raise ConfigError(f"{name}: x and y lengths differ")
    if len(x) < MIN_POINTS:
        raise InsufficientDataError(f"{name}: need at least {MIN_POINTS} sweep points, got {len(x)}")
    if np.any(x <= 0) or np.any(y == 0) or not np.all(np.isfinite(y)):
        raise ConfigError(f"{name}: log-log fit needs positive x and finite nonzero y")
    lx, ly = np.log(x), np.log(np.abs(y))
    if np.ptp(ly) == 0:
        # exactly constant data; linregress would still return 0 but keep it explicit
        return SlopeFit(name, 0.0, 0.0, float(ly[0]), len(x), expected, tolerance)
    fit = stats.linregress(lx, ly)
    stderr = float(fit.stderr) if len(x) > 2 else math.nan
    return SlopeFit(name, float(fit.slope), stderr, float(fit.intercept), len(x),
                    expected, tolerance)


def parse_expectations(text: str) -> dict:
    """``name:slope:tol`` entries separated by commas, e.g.
    ``l2_deviation:-1:0.3, gradient_ratio:0:0.3``."""
    out = {}
    for item in filter(None, (s.strip() for s in text.split(","))):
        parts = item.split(":")
        if len(parts) not in (2, 3):
            raise ConfigError(f"bad expectation {item!r}", key="study.expect")
        try:
            slope = float(parts[1])
            tol = float(parts[2]) if len(parts) == 3 else 0.3
        except ValueError:
            raise ConfigError(f"bad expectation {item!r}", key="study.expect") from None
        out[parts[0].strip()] = (slope, tol)
    return out


def trend_report(sweep, rows: list[dict], quantities, expectations: dict | None = None):
    """Fit every quantity in ``quantities`` across ``rows`` (one per sweep value)."""
    expectations = expectations or {}
    fits = []
    for q in quantities:
        exp, tol = expectations.get(q, (None, 0.3))
        fits.append(fit_slope(sweep, [r[q] for r in rows], q, exp, tol))
    return fits
