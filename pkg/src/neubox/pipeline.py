"""Config-driven pipeline: runs the selected stages in dependency order and
persists a JSON record, CSV traces and optional field dumps.

Every stage function is also used directly by the matching CLI subcommand.
"""
from __future__ import annotations

import hashlib
import json
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from threadpoolctl import threadpool_limits

from . import __version__
from .config import DEPENDS, RunConfig, load_config
from .energy import (UnitBoxState, constant_term_position, constant_term_spectral,
                     gp_energy_window)
from .errors import InsufficientDataError, PipelineError
from .fock import solve as fock_solve
from .green import FreeKernelSpec, neumann_green
from .kernels import build_w_and_k, hyperbolic_split, project_eta, restrict, verify_prop_eta
from .modes import interaction_tensor, lowest_modes
from .periodic import periodic_ground_state
from .potential import Potential
from .records import atomic_write, csv_text, to_json, write_field
from .scattering import scattering_length_via_integral, solve_zero_energy
from .study import MIN_POINTS, parse_expectations, trend_report
from .thermo import lower_bound_curve
from .twobody import BoxGeometry, potential_field, solve_ground_state, verify_minimizer_properties

TREND_QUANTITIES = ("gradient_ratio", "sup_ratio", "l2_deviation", "l2_ratio", "l1_ratio",
                    "pointwise_ratio", "cm_gradient_ratio", "lambda_ratio")
DEFAULT_EXPECT = {"l2_deviation": (-1.0, 0.3)}


@dataclass
class StageResult:
    output: dict
    traces: dict = field(default_factory=dict)   # name -> (header, rows)
    state: object = None                           # in-memory data for later stages


# ---------------------------------------------------------------- stages

def run_scatter(pot: Potential, r_max: float | None = None, n_steps: int = 20000) -> StageResult:
    sol = solve_zero_energy(pot, r_max or None, n_steps)
    a_int = scattering_length_via_integral(sol, pot)
    out = {"a": sol.scattering_length, "a_integral": a_int, "residual": sol.residual,
           "c0": sol.c0, "r_max": float(sol.r[-1]), "n_steps": n_steps}
    return StageResult(out, state=sol.scattering_length)


def green_samples(dim: int, box: float, samples: int, seed: int):
    """Random (x, y) pairs inside the cube, kept at least a tenth of the box apart."""
    rng = np.random.default_rng(seed)
    pairs = []
    while len(pairs) < samples:
        x, y = rng.uniform(-box / 2, box / 2, size=(2, dim))
        if np.linalg.norm(x - y) > 0.1 * box:
            pairs.append((x, y))
    return pairs


def run_green(dim: int, eps: float, box: float, radius: int, samples: int,
              seed: int = 0) -> StageResult:
    if eps <= 0:
        eps = 1.0 / box**2  # largest value the box estimates allow
    spec = FreeKernelSpec(dim, eps)
    rows = []
    for x, y in green_samples(dim, box, samples, seed):
        g = neumann_green(spec, box, x, y, radius)
        rows.append((" ".join(repr(float(v)) for v in x), " ".join(repr(float(v)) for v in y),
                     g.value, g.tail_estimate, radius, eps))
    header = ("x", "y", "G", "tail_estimate", "radius", "eps")
    out = {"dim": dim, "eps": eps, "box": box, "radius": radius, "samples": samples,
           "max_tail_estimate": max(r[3] for r in rows) if rows else 0.0}
    return StageResult(out, {"green": (header, rows)})


def run_twobody(pot: Potential, dim: int, boxes, grid: int, tol: float = 1e-8,
                sampling: str = "tent", a: float | None = None,
                expect: dict | None = None) -> StageResult:
    """Solve on each box side; with ``a`` given, also report the property ratios."""
    reports, sols, hist = [], [], []
    for box in boxes:
        geom = BoxGeometry(dim, float(box), grid)
        sol = solve_ground_state(geom, pot, tol=tol, sampling=sampling)
        sols.append(sol)
        row = {"box": float(box), "grid": grid, "h": geom.h, "eigenvalue": sol.eigenvalue,
               "iterations": sol.iterations, "residual": sol.residual, "tol": tol,
               "sampling": sampling}
        if a is not None:
            row.update(verify_minimizer_properties(sol, a).to_dict())
        reports.append(row)
        hist += [(float(box), grid, i, r) for i, r in enumerate(sol.history)]
    out = {"reports": reports, "slopes": None}
    if a is not None and len(boxes) >= MIN_POINTS:
        fits = trend_report(boxes, reports, TREND_QUANTITIES, expect or DEFAULT_EXPECT)
        out["slopes"] = [f.to_dict() for f in fits]
    traces = {"twobody_residuals": (("box", "grid", "iteration", "residual"), hist)}
    return StageResult(out, traces, state=sols)


def _unit_field(sol, factor: int):
    return sol.f if factor == 1 else restrict(sol.f, sol.geometry.d, factor)


def run_kernels(f: np.ndarray, d: int, box: float, ns, kappa: float) -> StageResult:
    """Kernel algebra checks for the unit-box state ``f`` (values f(l x, l y))."""
    rows = []
    # single-threaded BLAS keeps the matrix series bit-identical across machines
    with threadpool_limits(limits=1):
        for n in ns:
            _, k = build_w_and_k(f, box, n, d)
            eta, _ = project_eta(k)
            hk = hyperbolic_split(eta)
            row = verify_prop_eta(eta, hk, n, box, kappa)
            row["grid"] = f.shape[0]
            rows.append(row)
    return StageResult({"reports": rows})


def run_energy(pot: Potential, sols, ns, a: float, cutoff: int = 0,
               route: str = "both", periodic_cutoff: int = 60,
               particles: int = 8) -> StageResult:
    rows, trace = [], []
    for sol in sols:
        g = sol.geometry
        V = potential_field(g, pot)
        state = UnitBoxState.from_solution(sol, V)
        for n in ns:
            row = {"box": g.box, "n": n, "grid": g.m}
            if route in ("spectral", "both"):
                cut = cutoff or g.m - 1
                spec = constant_term_spectral(state, n, cut)
                row["spectral"] = spec.to_dict()
                for c in range(1, cut + 1):
                    trace.append((g.box, g.m, n, c, constant_term_spectral(state, n, c).total))
            if route in ("position", "both"):
                row["position"] = constant_term_position(state, n).to_dict()
            if route == "both":
                diff = abs(row["spectral"]["total"] - row["position"]["total"])
                est = (row["spectral"]["truncation_estimate"]
                       + row["position"]["truncation_estimate"])
                row["route_difference"] = diff
                row["routes_agree"] = diff <= est
            win = gp_energy_window(n, g.box, a)
            row["window"] = {"center": win.center, "scale": win.scale}
            rows.append(row)
    per = periodic_ground_state(a, particles, periodic_cutoff)
    out = {"rows": rows, "periodic": {"N": particles, "energy": per.energy,
                                      "boundary": per.boundary, "bogoliubov": per.bogoliubov,
                                      "cutoff": periodic_cutoff, "convention": per.convention,
                                      "trace": per.trace}}
    header = ("box", "grid", "n", "cutoff", "total")
    return StageResult(out, {"energy_cutoff": (header, trace)})


def run_fock(pot: Potential, box: float, ns, modes, d: int = 3,
             reference: float | None = None) -> StageResult:
    tensor = interaction_tensor(pot, box, lowest_modes(max(modes), d))
    rows = []
    with threadpool_limits(limits=1):
        for n in ns:
            for m in modes:
                r = fock_solve(pot, box, n, m, d, tensor).to_dict()
                rows.append(r)
    out = {"box": box, "rows": rows}
    if reference is not None:
        out["two_body_reference"] = reference
    header = ("n", "modes", "basis_dim", "energy", "depletion")
    trace = [(r["n"], r["modes"], r["basis_dim"], r["energy"], r["depletion"]) for r in rows]
    return StageResult(out, {"fock": (header, trace)})


def run_thermo(a: float, kappa: float, rho_min: float, rho_max: float, points: int,
               c: float = 0.1, C: float = 1.0) -> StageResult:
    if points < 1:
        points = 1
    rhos = np.geomspace(rho_min, rho_max, points) if points > 1 else np.array([rho_min])
    rows = lower_bound_curve(a, kappa, rhos, c, C)
    header = ("rho", "box", "bound", "lhy", "ratio", "regime_ok", "c", "C")
    trace = [(r.rho, r.box, r.bound, r.lhy, r.ratio, r.regime_ok, r.c, r.C) for r in rows]
    out = {"a": a, "c": c, "C": C, "rows": [dict(zip(header, t)) for t in trace]}
    return StageResult(out, {"thermo": (header, trace)})


# ---------------------------------------------------------------- driver

@dataclass
class RunRecord:
    path: Path
    data: dict
    digest: str       # sha256 of the record file
    elapsed: dict


def check_dependencies(modules) -> None:
    for stage in modules:
        for dep in DEPENDS[stage]:
            if dep not in modules:
                raise PipelineError(f"stage {stage!r} needs the output of stage {dep!r}, "
                                    f"which is not selected", stage=dep)


def execute(cfg: RunConfig) -> tuple[dict, dict, dict]:
    """Run the selected stages; returns (outputs, traces, elapsed seconds)."""
    check_dependencies(cfg.modules)
    pot = cfg.potential()
    v = cfg.values
    outputs, traces, elapsed, cache = {}, {}, {}, {}
    for stage in cfg.modules:
        t0 = time.perf_counter()
        if stage == "scatter":
            s = v["scatter"]
            res = run_scatter(pot, s["r_max"] or None, s["n_steps"])
        elif stage == "green":
            s = v["green"]
            res = run_green(s["dim"], s["eps"], s["box"], s["radius"], s["samples"],
                            v["run"]["seed"])
        elif stage == "twobody":
            s = v["twobody"]
            expect = parse_expectations(v["study"]["expect"]) or None
            res = run_twobody(pot, s["dim"], s["box"], s["grid"], s["tol"], s["sampling"],
                              cache.get("scatter"), expect)
            if s["dump"]:
                out_dir = Path(v["run"]["output"])
                for sol in res.state:
                    write_field(out_dir / f"{s['dump']}_l{sol.geometry.box:g}.f64", sol.f,
                                sol.geometry.d, sol.geometry.box)
        elif stage == "kernels":
            s = v["kernels"]
            reports = []
            for sol in cache["twobody"]:
                f = _unit_field(sol, s["coarse"])
                reports += run_kernels(f, sol.geometry.d, sol.geometry.box, s["n"],
                                       pot.kappa).output["reports"]
            res = StageResult({"reports": reports, "coarse": s["coarse"]})
        elif stage == "energy":
            s = v["energy"]
            res = run_energy(pot, cache["twobody"], s["n"], cache["scatter"], s["cutoff"],
                             "both", s["periodic_cutoff"], s["particles"])
        elif stage == "fock":
            s = v["fock"]
            box = s["box"] or float(v["twobody"]["box"][0])
            ref = None
            for sol in cache.get("twobody", []):
                if sol.geometry.box == box:
                    ref = box**2 * sol.eigenvalue
            res = run_fock(pot, box, s["n"], s["modes"], v["twobody"]["dim"], ref)
        elif stage == "thermo":
            s = v["thermo"]
            res = run_thermo(cache["scatter"], pot.kappa, s["rho_min"], s["rho_max"],
                             s["points"], s["c"], s["C"])
        else:  # pragma: no cover - guarded by the config schema
            raise PipelineError(f"unknown stage {stage!r}", stage=stage)
        elapsed[stage] = time.perf_counter() - t0
        outputs[stage] = res.output
        traces.update(res.traces)
        cache[stage] = res.state
    return outputs, traces, elapsed


def run(config_path) -> RunRecord:
    """Execute a config file and write ``record.json`` plus one CSV per trace
    into the configured output directory.  Wall-clock times go to
    ``timing.json`` so the record itself stays reproducible."""
    cfg = load_config(config_path)
    out_dir = Path(cfg.values["run"]["output"])
    if not out_dir.is_absolute():
        out_dir = Path(config_path).parent / out_dir
        cfg.values["run"]["output"] = str(out_dir)
    outputs, traces, elapsed = execute(cfg)
    trace_files = {}
    for name, (header, rows) in sorted(traces.items()):
        path = atomic_write(out_dir / f"{name}.csv", csv_text(header, rows))
        trace_files[name] = path.name
    data = {"config_hash": cfg.digest, "version": __version__, "modules": cfg.modules,
            "outputs": outputs, "traces": trace_files}
    text = to_json(data)
    path = atomic_write(out_dir / "record.json", text)
    atomic_write(out_dir / "timing.json", json.dumps(elapsed, sort_keys=True, indent=2) + "\n")
    return RunRecord(path, json.loads(text), hashlib.sha256(text.encode()).hexdigest(), elapsed)


def study(config_path) -> dict:
    """Twobody sweep over the configured box sides with slope fits."""
    cfg = load_config(config_path)
    v = cfg.values
    pot = cfg.potential()
    boxes = v["twobody"]["box"]
    if len(boxes) < MIN_POINTS:
        raise InsufficientDataError(f"need at least {MIN_POINTS} box sides, got {len(boxes)}")
    a = run_scatter(pot, v["scatter"]["r_max"] or None, v["scatter"]["n_steps"]).state
    expect = parse_expectations(v["study"]["expect"]) or DEFAULT_EXPECT
    tb = run_twobody(pot, v["twobody"]["dim"], boxes, v["twobody"]["grid"], v["twobody"]["tol"],
                     v["twobody"]["sampling"], a, expect)
    slopes = tb.output["slopes"]
    checked = [s for s in slopes if s["passed"] is not None]
    return {"config_hash": cfg.digest, "version": __version__, "a": a, "sweep": list(boxes),
            "slopes": slopes, "passed": all(s["passed"] for s in checked)}

