import itertools

import numpy as np
import pytest

from neubox.errors import ConfigError, RegimeError, SizeError
from neubox.thermo import (CellProblem, brute_force_cell_minimum, cell_energy_table,
                           lower_bound_curve, minimize_occupancy, occupancy_objective,
                           relaxed_bound)


def problem(mean, p, A=1.0, C=0.0):
    return CellProblem(rho=mean, a=0.1, kappa=1.0, box=1.0, p_cut=p, A=A, C=C)


def test_closed_form_against_scan():
    for mean, p, A, C in [(8.0, 32.0, 1.0, 0.0), (5.0, 3.0, 0.7, 0.4), (2.5, 1.0, 0.2, 1.5)]:
        prob = problem(mean, p, A, C)
        t, val = minimize_occupancy(prob)
        ts = np.linspace(1.0, mean, 200001)
        assert val <= occupancy_objective(ts, prob).min() + 1e-12
        assert val == pytest.approx(occupancy_objective(ts, prob).min(), abs=1e-8)


def test_large_cutoff_fills_cells():
    prob = problem(6.0, 24.0, 0.9, 0.3)
    t, val = minimize_occupancy(prob)
    assert t == 6.0
    assert val == pytest.approx(36 * 0.9 - 6 * 0.3)


def test_single_particle_per_cell():
    assert minimize_occupancy(problem(1.0, 5.0))[0] == 1.0


def test_regime_errors():
    with pytest.raises(RegimeError):
        minimize_occupancy(problem(4.0, 8.0, A=-0.1))
    with pytest.raises(ConfigError):
        minimize_occupancy(problem(0.5, 8.0))
    with pytest.raises(RegimeError):
        relaxed_bound(problem(2.0, 1.0, A=0.5, C=1.0), 4)


def test_brute_force_examples():
    assert brute_force_cell_minimum(4, 4, np.arange(5) ** 2) == 4
    assert brute_force_cell_minimum(7, 5, np.arange(8)) == 7
    with pytest.raises(SizeError):
        brute_force_cell_minimum(11, 2, np.arange(12))


def test_per_cell_tables_and_permutation_invariance():
    rng = np.random.default_rng(0)
    tables = rng.uniform(0, 5, (4, 7))
    tables[:, 0] = 0
    best = brute_force_cell_minimum(6, 4, tables)
    assert best == pytest.approx(brute_force_cell_minimum(6, 4, tables[::-1]))
    direct = min(sum(tables[k, n[k]] for k in range(4))
                 for n in itertools.product(range(7), repeat=4) if sum(n) == 6)
    assert best == pytest.approx(direct)


def test_relaxed_bound_below_enumeration():
    for cells in (1, 2, 8, 27):
        for N in range(0, 9):
            for p in range(1, 9):
                for A, C in [(1.0, 0.0), (0.6, 0.5), (0.3, 1.0)]:
                    prob = problem(N / cells, float(p), A, C)
                    if p * A < C:
                        continue
                    exact = brute_force_cell_minimum(N, cells, cell_energy_table(prob, N))
                    assert relaxed_bound(prob, cells) <= exact + 1e-12


def test_energy_table_superadditive_branch():
    prob = problem(4.0, 3.0, 1.0, 0.0)
    table = cell_energy_table(prob, 8)
    assert list(table[:3]) == [0, 1, 4]
    assert table[7] == 2 * 9


def test_lower_bound_curve():
    rows = lower_bound_curve(0.1, 1.0, [1e-8, 1e-6, 1e-4])
    ratios = [r.bound / (4 * np.pi * 0.1 * r.rho) for r in rows]
    assert ratios[0] > ratios[1] > ratios[2]
    assert ratios[0] > 0.99
    assert all(r.bound <= r.lhy for r in rows)
    assert all(r.regime_ok for r in rows)
    assert all(r.bound == 0.0 for r in lower_bound_curve(0.0, 1.0, [1e-6, 1e-4]))
    # monotone in a at fixed small rho
    b = [lower_bound_curve(a, 1.0, [1e-8])[0].bound for a in (0.05, 0.1, 0.2)]
    assert b[0] < b[1] < b[2]
