import math

import numpy as np
import pytest

from neubox.errors import ConfigError
from neubox.potential import Potential, coupled, evaluate, integral_norms, load_table


def test_soft_sphere_values():
    pot = Potential("soft-sphere", V0=2.0, R0=1.5)
    assert evaluate(pot, 0.0) == 2.0
    assert evaluate(pot, 1.5) == 2.0
    assert evaluate(pot, np.nextafter(1.5, 2)) == 0.0
    assert np.all(evaluate(pot, np.linspace(1.6, 10, 20)) == 0.0)


def test_polynomial_is_smooth_and_compact():
    pot = Potential("truncated-polynomial", V0=3.0, R0=2.0)
    assert evaluate(pot, 0.0) == 3.0
    assert evaluate(pot, 2.0) == 0.0
    r = np.linspace(0, 3, 301)
    v = evaluate(pot, r)
    assert np.all(v >= 0) and np.all(np.diff(v) <= 0)


def test_table_roundtrip(tmp_path):
    path = tmp_path / "v.csv"
    path.write_text("radius,value\n0,2\n0.5,1\n1.0,0\n")
    table = load_table(path)
    pot = Potential("tabulated", table=table)
    assert pot.V0 == 2.0 and pot.R0 == 1.0
    assert evaluate(pot, 0.25) == pytest.approx(1.5)
    assert evaluate(pot, 1.5) == 0.0


def test_bad_table_row_reports_line(tmp_path):
    path = tmp_path / "v.csv"
    path.write_text("0,1\n0.5,oops\n")
    with pytest.raises(ConfigError) as exc:
        load_table(path)
    assert exc.value.line == 2


@pytest.mark.parametrize("kwargs", [
    dict(kind="hard-core"),
    dict(V0=-1.0),
    dict(R0=0.0),
    dict(kappa=-0.5),
])
def test_rejects_invalid(kwargs):
    with pytest.raises(ConfigError):
        Potential(**kwargs)


def test_tabulated_rejects_negative_values():
    with pytest.raises(ConfigError):
        Potential("tabulated", table=((0.0, 1.0), (1.0, -1.0)))


def test_integral_norms_soft_sphere():
    n = integral_norms(Potential("soft-sphere", V0=2.0, R0=1.0))
    assert n["L1"] == pytest.approx(2 * 4 * math.pi / 3, rel=1e-12)
    assert n["L1_over_r"] == pytest.approx(2 * 2 * math.pi, rel=1e-12)
    assert n["Linf"] == 2.0


def test_coupled_scaling():
    pot = Potential("soft-sphere", V0=1.0, R0=1.0, kappa=3.0)
    assert coupled(pot, 0.4, scale=2.0) == pytest.approx(12.0)
    assert coupled(pot, 0.6, scale=2.0) == 0.0
