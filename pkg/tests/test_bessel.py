import numpy as np
import pytest

from neubox.bessel import ASYMPTOTIC_MIN, SERIES_MAX, bessel_k
from neubox.errors import DomainError

# 30-digit values from mpmath.besselk
K2_AT_1 = 1.6248388986351774828
K0_AT_1 = 0.42102443824070833334
K1_AT_10 = 1.8648773453825584597e-05


def test_reference_values():
    assert bessel_k(2, 1.0) == pytest.approx(K2_AT_1, rel=1e-14)
    assert bessel_k(0, 1.0) == pytest.approx(K0_AT_1, rel=1e-14)
    assert bessel_k(1, 10.0) == pytest.approx(K1_AT_10, rel=1e-14)


def test_against_mpmath_across_branches():
    mpmath = pytest.importorskip("mpmath")
    mpmath.mp.dps = 40
    z = np.concatenate([np.geomspace(1e-6, 80, 400), [SERIES_MAX, np.nextafter(SERIES_MAX, 3),
                                                      ASYMPTOTIC_MIN,
                                                      np.nextafter(ASYMPTOTIC_MIN, 30)]])
    worst = 0.0
    for n in range(5):
        got = bessel_k(n, z)
        ref = np.array([float(mpmath.besselk(n, mpmath.mpf(float(v)))) for v in z])
        worst = max(worst, float(np.max(np.abs(got / ref - 1))))
    assert worst < 1e-13


def test_recurrence():
    z = np.linspace(0.1, 40, 97)
    lhs = bessel_k(3, z)
    rhs = bessel_k(1, z) + 4.0 / z * bessel_k(2, z)
    assert np.max(np.abs(lhs / rhs - 1)) < 1e-13


def test_scalar_and_shape():
    assert isinstance(bessel_k(1, 2.5), float)
    assert bessel_k(1, np.ones((2, 3))).shape == (2, 3)


@pytest.mark.parametrize("order,z", [(1, 0.0), (1, -1.0), (0.5, 1.0), (-1, 1.0), (0, np.nan)])
def test_domain_errors(order, z):
    with pytest.raises(DomainError):
        bessel_k(order, z)
