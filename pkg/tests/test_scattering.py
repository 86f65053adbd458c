import math

import numpy as np
import pytest

from neubox.errors import ConfigError
from neubox.potential import Potential
from neubox.scattering import (scattering_length_via_integral, soft_sphere_length,
                               solve_zero_energy)

# closed form for kappa = 2, V0 = R0 = 1
A_KAPPA2 = 1.0 - math.tanh(1.0)


def test_closed_form_constant():
    assert A_KAPPA2 == pytest.approx(0.2384058440442351, abs=1e-15)
    assert soft_sphere_length(1.0, 1.0, 2.0) == pytest.approx(A_KAPPA2, rel=1e-15)


def test_both_routes_match_closed_form():
    pot = Potential("soft-sphere", 1.0, 1.0, 2.0)
    sol = solve_zero_energy(pot)
    assert sol.scattering_length == pytest.approx(A_KAPPA2, rel=1e-9)
    assert scattering_length_via_integral(sol, pot) == pytest.approx(A_KAPPA2, rel=1e-9)


def test_zero_coupling():
    pot = Potential("soft-sphere", 1.0, 1.0, 0.0)
    sol = solve_zero_energy(pot)
    assert sol.scattering_length == 0.0
    assert np.all(sol.f0 == 1.0)
    assert scattering_length_via_integral(sol, pot) == 0.0


def test_solution_shape_invariants():
    pot = Potential("truncated-polynomial", 5.0, 1.0, 1.0)
    sol = solve_zero_energy(pot)
    f0 = sol.f0
    assert sol.u[0] == 0.0
    assert np.all(f0 > 0) and np.all(f0 <= 1 + 1e-15)
    assert np.all(np.diff(f0) >= -1e-14)
    outside = sol.r > pot.R0
    assert np.max(np.abs(sol.u[outside] - (sol.r[outside] - sol.scattering_length))) < 1e-12


def test_monotone_in_kappa_and_bounded():
    pot = Potential("soft-sphere", 1.0, 1.0, 1.0)
    kappas = [0.5, 1, 2, 8, 32, 128, 512]
    a = [solve_zero_energy(pot.with_kappa(k), n_steps=4000).scattering_length for k in kappas]
    assert np.all(np.diff(a) > 0)
    assert 0 < a[0] and a[-1] < pot.R0
    # approaches the hard-sphere value from below
    assert pot.R0 - a[-1] < 0.07


def test_integral_route_bounded_by_born():
    pot = Potential("truncated-polynomial", 4.0, 1.5, 1.0)
    sol = solve_zero_energy(pot)
    a_int = scattering_length_via_integral(sol, pot)
    born = pot.kappa / (8 * math.pi) * pot.V0 * 4 * math.pi * 1.5**3 * 128 / 315
    assert a_int <= born
    assert a_int == pytest.approx(sol.scattering_length, rel=1e-6)


def test_tabulated_matches_polynomial_table():
    poly = Potential("truncated-polynomial", 2.0, 1.0, 1.0)
    r = np.linspace(0, 1, 2001)
    tab = Potential("tabulated", table=tuple(zip(r, 2.0 * (1 - r * r) ** 4)), kappa=1.0)
    a_poly = solve_zero_energy(poly).scattering_length
    a_tab = solve_zero_energy(tab).scattering_length
    assert a_tab == pytest.approx(a_poly, rel=1e-6)


def test_fourth_order_convergence():
    # step counts divisible by 3 keep R0 = 1 on the uniform grid
    pot = Potential("soft-sphere", 1.0, 1.0, 2.0)
    e1 = abs(solve_zero_energy(pot, n_steps=120).scattering_length - A_KAPPA2)
    e2 = abs(solve_zero_energy(pot, n_steps=240).scattering_length - A_KAPPA2)
    e3 = abs(solve_zero_energy(pot, n_steps=480).scattering_length - A_KAPPA2)
    assert e1 / e2 > 12 and e2 / e3 > 12


def test_residual_tracks_error():
    pot = Potential("soft-sphere", 1.0, 1.0, 2.0)
    sol = solve_zero_energy(pot, n_steps=300)
    err = abs(sol.scattering_length - A_KAPPA2)
    assert err <= 2 * sol.residual + 1e-15


def test_preconditions():
    pot = Potential("soft-sphere")
    with pytest.raises(ConfigError):
        solve_zero_energy(pot, r_max=0.5)
    with pytest.raises(ConfigError):
        solve_zero_energy(pot, n_steps=50)
