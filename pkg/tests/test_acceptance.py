"""Acceptance suite.  Each test prints one ``criterion N: PASS|FAIL`` line
(shown even under output capture) before asserting.

The two-body sweep (l = 6, 8, 10 at grids 12 and 16) is shared by several
criteria and takes a few minutes on one core.
"""
import json
import math
import os
import shutil
import subprocess
import sys
import time

import numpy as np
import pytest
import scipy.linalg

from neubox.bessel import bessel_k
from neubox.energy import UnitBoxState, constant_term_position, constant_term_spectral, mean_field
from neubox.fock import solve as fock_solve
from neubox.green import (FreeKernelSpec, free_kernel, neumann_green, neumann_green_gradient)
from neubox.kernels import (KernelMatrix, build_w_and_k, hyperbolic_identity_error,
                            hyperbolic_split, project_eta)
from neubox.modes import interaction_tensor, lowest_modes
from neubox.periodic import bogoliubov_sum, bogoliubov_summand, boundary_constant
from neubox.potential import Potential
from neubox.scattering import scattering_length_via_integral, solve_zero_energy
from neubox.study import fit_slope
from neubox.thermo import (CellProblem, brute_force_cell_minimum, cell_energy_table,
                           minimize_occupancy, occupancy_objective, relaxed_bound)
from neubox.twobody import (BoxGeometry, assemble_matrix, potential_field, richardson,
                            solve_ground_state, verify_minimizer_properties)

SOFT = Potential("soft-sphere", 1.0, 1.0, 1.0)
BOXES = (6.0, 8.0, 10.0)
GRIDS = (12, 16)
# K_2(1) from mpmath.besselk at 40 digits
K2_AT_1 = 1.624838898635177482811410439
RATIO_NAMES = ("gradient_ratio", "sup_ratio", "l2_ratio", "l1_ratio", "pointwise_ratio",
               "cm_gradient_ratio")


@pytest.fixture
def report(capsys):
    def emit(number, ok, detail):
        with capsys.disabled():
            print(f"\ncriterion {number}: {'PASS' if ok else 'FAIL'}  {detail}")
        return ok
    return emit


@pytest.fixture(scope="module")
def sweep():
    a = solve_zero_energy(SOFT).scattering_length
    sols = {}
    for m in GRIDS:
        for box in BOXES:
            sols[box, m] = solve_ground_state(BoxGeometry(3, box, m), SOFT, tol=1e-10)
    return a, sols


def test_criterion_01_scattering_dual_formula(report):
    pot = Potential("soft-sphere", 1.0, 1.0, 2.0)
    exact = 1.0 - math.tanh(1.0)
    t0 = time.perf_counter()
    sol = solve_zero_energy(pot)
    a_fit = sol.scattering_length
    a_int = scattering_length_via_integral(sol, pot)
    elapsed = time.perf_counter() - t0
    err = max(abs(a_fit / exact - 1), abs(a_int / exact - 1))
    ok = err < 1e-6 and elapsed < 1.0
    report(1, ok, f"rel err {err:.2e} (< 1e-6), {elapsed:.3f} s (< 1 s)")
    assert ok


def test_criterion_02_free_kernel_constant(report):
    spec = FreeKernelSpec(6, 1e-8)
    x = np.zeros(6)
    x[0] = 1.0
    rel = abs(free_kernel(spec, x) * 4 * math.pi**3 - 1)
    kerr = abs(bessel_k(2, 1.0) - K2_AT_1)
    ok = rel < 1e-4 and kerr < 1e-10
    report(2, ok, f"|x|^4 G rel dev {rel:.2e} (< 1e-4), K_2(1) abs err {kerr:.1e} (< 1e-10)")
    assert ok


def interval_green(eps, box, x, y):
    k = math.sqrt(eps)
    return (math.cosh(k * (min(x, y) + box / 2)) * math.cosh(k * (box / 2 - max(x, y)))
            / (k * math.sinh(k * box)))


def test_criterion_03_neumann_green(report):
    rng = np.random.default_rng(2024)
    worst = 0.0
    for _ in range(100):
        # box use needs 0 < eps l^2 <= 1; omitted images cost about exp(-sqrt(eps) * 40 l),
        # so eps l^2 >= 1/2 keeps the truncation below 1e-10
        eps = rng.uniform(0.5, 1.0)
        x, y = rng.uniform(-0.5, 0.5, 2)
        g = neumann_green(FreeKernelSpec(1, eps), 1.0, [x], [y], radius=40).value
        worst = max(worst, abs(g / interval_green(eps, 1.0, x, y) - 1))
    # D = 6: largest normal derivative on the face x_1 = l/2 over a few source points
    eps = 1.0
    spec = FreeKernelSpec(6, eps)
    pairs = []
    for _ in range(6):
        face = rng.uniform(-0.5, 0.5, 6)
        face[0] = 0.5
        pairs.append((face, rng.uniform(-0.5, 0.5, 6)))
    radii = np.arange(1, 7)
    deriv = np.array([max(abs(neumann_green_gradient(spec, 1.0, x, y, int(R))[0])
                          for x, y in pairs) for R in radii])
    decreasing = bool(np.all(np.diff(deriv) < 0))
    rate = -np.polyfit(radii, np.log(deriv), 1)[0]
    expected = math.sqrt(eps)
    ok = worst < 1e-10 and decreasing and 0.5 * expected <= rate <= 1.5 * expected
    report(3, ok, f"1D rel err {worst:.1e} (< 1e-10); D=6 face derivative decreasing={decreasing}, "
                  f"decay rate {rate:.2f} per box vs sqrt(eps) l = {expected:.2f} (within 50%)")
    assert ok


def test_criterion_04_dense_oracle(report):
    cases = [(1, 6.0, 48), (1, 10.0, 70), (2, 5.0, 8), (2, 6.0, 7), (3, 4.0, 4)]
    worst = 0.0
    for d, box, m in cases:
        geom = BoxGeometry(d, box, m)
        assert geom.size <= 5000
        sol = solve_ground_state(geom, SOFT, tol=1e-10)
        A = assemble_matrix(geom, SOFT).toarray()
        ref = scipy.linalg.eigh(A, eigvals_only=True, subset_by_index=[0, 0])[0]
        worst = max(worst, abs(sol.eigenvalue - ref))
    free = solve_ground_state(BoxGeometry(3, 4.0, 4), SOFT.with_kappa(0.0))
    flat = float(np.ptp(free.f))
    ok = worst < 1e-9 and abs(free.eigenvalue) < 1e-8 and flat < 1e-8
    report(4, ok, f"max eigenvalue gap {worst:.1e} (< 1e-9) over {len(cases)} geometries; "
                  f"kappa=0: lambda {free.eigenvalue:.1e}, ptp f {flat:.1e}")
    assert ok


def test_criterion_05_eigenvalue_asymptotics(report, sweep):
    a, sols = sweep
    raw, extrap = [], []
    for box in BOXES:
        vals = [sols[box, m].eigenvalue for m in GRIDS]
        hs = [box / m for m in GRIDS]
        lam = richardson(vals, hs, order=2)
        scale = box**3 / (8 * math.pi * a)
        raw.append(vals[-1] * scale)
        extrap.append(lam * scale)
    in_range = all(0.5 <= r <= 1.5 for r in raw)
    toward = all(abs(b - 1) < abs(c - 1) for c, b in zip(extrap, extrap[1:]))
    ok = in_range and toward
    report(5, ok, f"m=16 ratios {np.round(raw, 4).tolist()} in [0.5, 1.5]; "
                  f"extrapolated {np.round(extrap, 4).tolist()} approach 1")
    assert ok


def test_criterion_06_trend_suite(report, sweep):
    a, sols = sweep
    reps = [verify_minimizer_properties(sols[box, 16], a) for box in BOXES]
    # "bounded": every ratio positive and <= 5, spread across the sweep <= 1.5x
    spreads = {}
    bounded = True
    for name in RATIO_NAMES:
        vals = np.array([getattr(r, name) for r in reps])
        bounded &= bool(np.all((vals > 0) & (vals <= 5)))
        spreads[name] = float(vals.max() / vals.min())
    bounded &= max(spreads.values()) <= 1.5
    fit = fit_slope(BOXES, [r.l2_deviation for r in reps], "l2_deviation", -1.0, 0.3)
    ext = [richardson([verify_minimizer_properties(sols[box, m], a).l2_deviation for m in GRIDS],
                      [box / m for m in GRIDS]) for box in BOXES]
    ext_slope = fit_slope(BOXES, ext).slope
    ok = bounded and fit.passed
    worst = max(spreads, key=spreads.get)
    report(6, ok, f"ratios bounded={bounded} (widest spread {worst} {spreads[worst]:.3f}); "
                  f"L2 slope {fit.slope:.3f} +- {fit.stderr:.3f} (target -1 +- 0.3); "
                  f"grid-extrapolated slope {ext_slope:.3f}")
    assert ok


def test_criterion_07_kernel_algebra(report, sweep):
    rng = np.random.default_rng(7)
    worst_series = worst_ident = worst_rows = 0.0
    for _ in range(6):
        a = rng.normal(size=(50, 50))
        a = a + a.T
        a *= rng.uniform(0.05, 0.5) / np.max(np.abs(np.linalg.eigvalsh(a)))
        eta = KernelMatrix(a * 50, 1, 50)
        hk = hyperbolic_split(eta)
        lam, U = scipy.linalg.eigh(eta.operator())
        s_ref = (U * np.sinh(lam)) @ U.T
        c_ref = (U * np.cosh(lam)) @ U.T
        worst_series = max(worst_series, np.max(np.abs(hk.sigma.operator() - s_ref)),
                           np.max(np.abs(hk.gamma.operator() - c_ref)))
        worst_ident = max(worst_ident, hyperbolic_identity_error(hk))
    _, sols = sweep
    for box, n in [(6.0, 2), (8.0, 3), (8.0, 4)]:
        _, k = build_w_and_k(sols[box, 12].f, box, n, 3)
        eta, _ = project_eta(k)
        hk = hyperbolic_split(eta)
        worst_ident = max(worst_ident, hyperbolic_identity_error(hk))
        for kern in (eta, hk.sigma, hk.p):
            worst_rows = max(worst_rows, float(np.max(np.abs(kern.row_integrals()))))
    ok = worst_ident < 1e-12 and worst_series < 1e-10 and worst_rows < 1e-12
    report(7, ok, f"gamma^2 - sigma^2 - I {worst_ident:.1e} (< 1e-12); series vs eigh "
                  f"{worst_series:.1e} (< 1e-10); row sums {worst_rows:.1e} (< 1e-12)")
    assert ok


def test_criterion_08_dual_route_constant(report, sweep):
    _, sols = sweep
    rows, agree, exact_mf = [], True, True
    for n, box in [(2, 6.0), (3, 8.0), (4, 8.0)]:
        sol = sols[box, 12]
        state = UnitBoxState.from_solution(sol, potential_field(sol.geometry, SOFT))
        spec = constant_term_spectral(state, n)
        pos = constant_term_position(state, n)
        diff = abs(spec.total - pos.total)
        est = spec.truncation_estimate + pos.truncation_estimate
        agree &= diff <= est
        rows.append(f"({n},{box:g}) diff {diff:.1e} <= est {est:.1e}")
        flat = UnitBoxState(state.d, state.m, state.box, np.zeros_like(state.w), state.potential,
                            state.scaled_eigenvalue)
        mf = mean_field(state, n)
        exact_mf &= constant_term_spectral(state, n, eta=np.zeros_like(state.w)).total == mf
        exact_mf &= constant_term_position(flat, n).total == mean_field(flat, n)
    ok = bool(agree and exact_mf)
    report(8, ok, "; ".join(rows) + f"; eta=0 gives mean field exactly: {bool(exact_mf)}")
    assert ok


def test_criterion_09_fock_sandbox(report, sweep):
    _, sols = sweep
    box = 6.0
    lam = richardson([sols[box, m].eigenvalue for m in GRIDS], [box / m for m in GRIDS])
    target = box**2 * lam
    counts = (1, 4, 7, 10, 20, 30)
    tensor = interaction_tensor(SOFT, box, lowest_modes(max(counts), 3))
    gaps = np.array([fock_solve(SOFT, box, 2, m, tensor=tensor).energy - target for m in counts])
    converging = bool(np.all(gaps > 0) and np.all(np.diff(gaps) < 0))
    e = {n: fock_solve(SOFT, box, n, 7, tensor=tensor).energy for n in range(1, 6)}
    superadd = all(e[p + q] >= e[p] + e[q] for p in range(1, 5) for q in range(1, 6 - p))
    free = fock_solve(SOFT.with_kappa(0.0), box, 3, 10)
    ok = converging and superadd and free.depletion == 0.0
    report(9, ok, f"gaps to l^2 lambda {np.array2string(gaps, precision=4)} shrinking from above; "
                  f"superadditive={superadd}; kappa=0 depletion {free.depletion}")
    assert ok


def test_criterion_10_lattice_sums(report):
    cutoffs = list(range(30, 91, 10))
    bc = boundary_constant(cutoffs)
    steps = np.abs(np.diff(bc.averaged))
    stable = bool(np.all(steps < 5e-4))
    a = solve_zero_energy(SOFT).scattering_length
    bog = bogoliubov_sum(a, cutoff=60)
    p2 = (2 * math.pi) ** 2 * np.array([1e4, 4e4])
    s = bogoliubov_summand(p2, a)
    decay = s[0] / s[1]
    ok = stable and bog.outer_shell_max < 1e-8 and abs(decay / 16 - 1) < 0.01
    report(10, ok, f"b averaged {np.round(bc.averaged, 5).tolist()}, max step {steps.max():.1e} "
                   f"(< 5e-4); outer summand {bog.outer_shell_max:.1e} (< 1e-8); "
                   f"|p|^-4 decay ratio {decay:.3f} (16)")
    assert ok


def test_criterion_11_occupancy(report):
    rng = np.random.default_rng(11)
    worst = 0.0
    for _ in range(20):
        mean = rng.uniform(1.5, 8.0)
        prob = CellProblem(mean, 0.1, 1.0, 1.0, rng.uniform(1, 12), rng.uniform(0.2, 1.0),
                           rng.uniform(0, 1.5))
        t, val = minimize_occupancy(prob)
        scan = occupancy_objective(np.linspace(1.0, mean, 1_000_000), prob).min()
        worst = max(worst, abs(val - scan))
        assert val <= scan + 1e-12
    fills = True
    a = solve_zero_energy(SOFT).scattering_length
    for rho in (1e-4, 1e-3, 1e-2):
        for box in (20.0, 50.0, 100.0):
            prob = CellProblem.from_constants(rho, a, 1.0, box, c=0.1, C=1.0)
            if prob.p_cut >= 4 * prob.mean_occupation and prob.mean_occupation >= 1:
                fills &= minimize_occupancy(prob)[0] == prob.mean_occupation
    valid = violations = 0
    for cells in (1, 2, 3, 8, 27):
        for N in range(9):
            for p in range(1, 9):
                for A, C in [(1.0, 0.0), (0.8, 0.3), (0.5, 1.0), (0.3, 1.5)]:
                    prob = CellProblem(N / cells, 0.1, 1.0, 1.0, float(p), A, C)
                    if p * A < C:
                        continue
                    valid += 1
                    exact = brute_force_cell_minimum(N, cells, cell_energy_table(prob, N))
                    violations += relaxed_bound(prob, cells) > exact + 1e-12
    ok = worst < 1e-10 and fills and violations == 0
    report(11, ok, f"closed form vs 1e6-point scan {worst:.1e} (< 1e-10); t = rho l^3 when "
                   f"p >= 4 rho l^3: {fills}; relaxed > brute force in {violations}/{valid}")
    assert ok


RUN_CONFIG = """
[run]
modules = scatter, green, twobody, kernels, energy, fock, thermo
output = out

[potential]
kind = soft-sphere
kappa = 1

[green]
dim = 2
box = 2
radius = 3
samples = 4

[twobody]
box = 4, 5, 6
grid = 6

[kernels]
n = 2, 3
coarse = 2

[energy]
n = 2, 3
periodic_cutoff = 30

[fock]
n = 2, 3
modes = 4, 7

[thermo]
points = 4
"""


def test_criterion_12_determinism(report, tmp_path):
    digests = {}
    for threads in (1, 4, 8):
        work = tmp_path / f"t{threads}"
        work.mkdir()
        (work / "run.ini").write_text(RUN_CONFIG)
        env = dict(os.environ, OMP_NUM_THREADS=str(threads), OPENBLAS_NUM_THREADS=str(threads),
                   MKL_NUM_THREADS=str(threads), NEUBOX_THREADS=str(threads))
        exe = shutil.which("neubox")
        cmd = [exe] if exe else [sys.executable, "-m", "neubox.cli"]
        subprocess.run(cmd + ["run", "run.ini"], cwd=work, env=env, check=True,
                       capture_output=True)
        raw = (work / "out" / "record.json").read_bytes()
        assert json.loads(raw)["modules"]
        digests[threads] = raw
    same = len(set(digests.values())) == 1
    report(12, same, f"record.json identical across 1/4/8 threads: {same}")
    assert same
