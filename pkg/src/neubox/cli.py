"""Command-line front end.  Every subcommand prints JSON (or CSV) to stdout
unless ``--out`` names a file."""
from __future__ import annotations

import functools
import sys
from pathlib import Path

import click

from . import __version__
from . import pipeline as pl
from .errors import NeuboxError
from .potential import Potential, load_table
from .records import atomic_write, csv_text, read_field, to_json, write_field


def _emit(text: str, out: str | None) -> None:
    if out:
        atomic_write(out, text)
    else:
        click.echo(text, nl=False)


def _floats(text: str) -> list[float]:
    try:
        vals = [float(s) for s in text.split(",") if s.strip()]
    except ValueError:
        raise click.BadParameter(f"not a comma-separated list of numbers: {text!r}") from None
    if vals != sorted(vals):
        raise click.BadParameter("sweep values must be sorted")
    return vals


def _ints(text: str) -> list[int]:
    return [int(v) for v in _floats(text)]


def potential_options(fn):
    @click.option("--kind", default="soft-sphere", show_default=True,
                  type=click.Choice(["soft-sphere", "truncated-polynomial", "tabulated"]))
    @click.option("--V0", "v0", default=1.0, show_default=True, type=float)
    @click.option("--R0", "r0", default=1.0, show_default=True, type=float)
    @click.option("--kappa", default=1.0, show_default=True, type=float)
    @click.option("--table", type=click.Path(exists=True, dir_okay=False),
                  help="CSV radius,value for the tabulated kind")
    @functools.wraps(fn)
    def wrapper(*args, kind, v0, r0, kappa, table, **kw):
        try:
            tab = load_table(table) if table else None
            pot = Potential(kind, v0, r0, kappa, tab)
        except NeuboxError as exc:
            raise click.ClickException(f"{type(exc).__name__}: {exc}") from None
        return fn(*args, pot=pot, **kw)
    return wrapper


def _guard(fn):
    @functools.wraps(fn)
    def wrapper(*args, **kw):
        try:
            return fn(*args, **kw)
        except NeuboxError as exc:
            raise click.ClickException(f"{type(exc).__name__}: {exc}") from None
    return wrapper


@click.group()
@click.version_option(__version__, prog_name="neubox")
def main():
    """Dilute Bose gas toolkit: scattering, Green functions, two-body states,
    kernels, energies, Fock sandbox and lower bounds."""


@main.command()
@potential_options
@click.option("--r-max", type=float, default=None, help="outer radius [default: 3 R0]")
@click.option("--steps", "n_steps", type=int, default=20000, show_default=True)
@click.option("--out", type=click.Path(dir_okay=False))
@_guard
def scatter(pot, r_max, n_steps, out):
    """Scattering length by the asymptotic fit and the integral formula."""
    _emit(to_json(pl.run_scatter(pot, r_max, n_steps).output), out)


@main.command()
@click.option("--dim", type=int, default=6, show_default=True)
@click.option("--eps", type=float, default=0.0, help="[default: 1/box^2]")
@click.option("--box", type=float, default=2.0, show_default=True)
@click.option("--radius", type=int, default=4, show_default=True)
@click.option("--samples", type=int, default=8, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--out", type=click.Path(dir_okay=False))
@_guard
def green(dim, eps, box, radius, samples, seed, out):
    """Neumann Green function at random point pairs (CSV)."""
    res = pl.run_green(dim, eps, box, radius, samples, seed)
    header, rows = res.traces["green"]
    _emit(csv_text(header, rows), out)


@main.command()
@potential_options
@click.option("--dim", type=int, default=3, show_default=True)
@click.option("--box", type=float, default=8.0, show_default=True)
@click.option("--grid", type=int, default=12, show_default=True)
@click.option("--tol", type=float, default=1e-8, show_default=True)
@click.option("--sweep", default=None, help="comma-separated box sides (overrides --box)")
@click.option("--sampling", type=click.Choice(["tent", "center"]), default="tent",
              show_default=True)
@click.option("--dump", type=click.Path(dir_okay=False),
              help="field dump path; with a sweep the box side is appended")
@click.option("--out", type=click.Path(dir_okay=False))
@_guard
def twobody(pot, dim, box, grid, tol, sweep, sampling, dump, out):
    """Two-body ground state and property ratios."""
    boxes = _floats(sweep) if sweep else [box]
    a = pl.run_scatter(pot).state if dim == 3 else None
    res = pl.run_twobody(pot, dim, boxes, grid, tol, sampling, a)
    if dump:
        for sol in res.state:
            path = Path(dump)
            if len(boxes) > 1:
                path = path.with_name(f"{path.stem}_l{sol.geometry.box:g}{path.suffix}")
            write_field(path, sol.f, sol.geometry.d, sol.geometry.box)
    _emit(to_json(res.output), out)


@main.command()
@click.argument("dump", type=click.Path(exists=True, dir_okay=False))
@click.option("--n", "ns", default="2", show_default=True, help="comma-separated particle numbers")
@click.option("--coarse-grid", type=int, default=None, help="coarse grid size dividing the dump's")
@click.option("--kappa", type=float, default=1.0, show_default=True)
@click.option("--out", type=click.Path(dir_okay=False))
@_guard
def kernels(dump, ns, coarse_grid, kappa, out):
    """Correlation kernel checks from a twobody field dump."""
    f, d, box = read_field(dump)
    m = f.shape[0]
    factor = 1
    if coarse_grid:
        if m % coarse_grid:
            raise click.BadParameter(f"{coarse_grid} does not divide the dump grid {m}")
        factor = m // coarse_grid
    if factor > 1:
        f = pl.restrict(f, d, factor)
    _emit(to_json(pl.run_kernels(f, d, box, _ints(ns), kappa).output), out)


@main.command()
@potential_options
@click.option("--n", "ns", default="2", show_default=True, help="comma-separated particle numbers")
@click.option("--box", type=float, default=8.0, show_default=True)
@click.option("--grid", type=int, default=12, show_default=True)
@click.option("--cutoff", type=int, default=0, help="per-axis mode cutoff [default: grid-1]")
@click.option("--route", type=click.Choice(["spectral", "position", "both"]), default="both",
              show_default=True)
@click.option("--particles", type=int, default=8, show_default=True,
              help="particle number for the periodic ground-state formula")
@click.option("--trace", type=click.Path(dir_okay=False), help="CSV of the cutoff convergence")
@click.option("--out", type=click.Path(dir_okay=False))
@_guard
def energy(pot, ns, box, grid, cutoff, route, particles, trace, out):
    """Constant term by the spectral and position routes (d = 3)."""
    a = pl.run_scatter(pot).state
    sols = pl.run_twobody(pot, 3, [box], grid).state
    res = pl.run_energy(pot, sols, _ints(ns), a, cutoff, route, particles=particles)
    if trace:
        header, rows = res.traces["energy_cutoff"]
        atomic_write(trace, csv_text(header, rows))
    _emit(to_json(res.output), out)


@main.command()
@potential_options
@click.option("--n", "ns", default="2", show_default=True)
@click.option("--modes", default="4,7,10", show_default=True)
@click.option("--box", type=float, default=6.0, show_default=True)
@click.option("--out", type=click.Path(dir_okay=False))
@_guard
def fock(pot, ns, modes, box, out):
    """Exact diagonalisation in the lowest Neumann modes."""
    _emit(to_json(pl.run_fock(pot, box, _ints(ns), _ints(modes)).output), out)


@main.command()
@potential_options
@click.option("--rho-min", type=float, default=1e-6, show_default=True)
@click.option("--rho-max", type=float, default=1e-2, show_default=True)
@click.option("--points", type=int, default=5, show_default=True)
@click.option("--c", "c_reg", type=float, default=0.1, show_default=True)
@click.option("--C", "c_err", type=float, default=1.0, show_default=True)
@click.option("--out", type=click.Path(dir_okay=False))
@_guard
def thermo(pot, rho_min, rho_max, points, c_reg, c_err, out):
    """Lower bound on the energy per particle against the LHY formula (CSV)."""
    a = pl.run_scatter(pot).state
    res = pl.run_thermo(a, pot.kappa, rho_min, rho_max, points, c_reg, c_err)
    header, rows = res.traces["thermo"]
    _emit(csv_text(header, rows), out)


@main.command()
@click.argument("config", type=click.Path(exists=True, dir_okay=False))
@click.option("--out", type=click.Path(dir_okay=False))
@_guard
def study(config, out):
    """Two-body sweep with log-log slope fits; exit code 2 if a slope fails."""
    report = pl.study(config)
    _emit(to_json(report), out)
    if not report["passed"]:
        sys.exit(2)


@main.command()
@click.argument("config", type=click.Path(exists=True, dir_okay=False))
@_guard
def run(config):
    """Run the configured pipeline; prints the record path and its hash."""
    rec = pl.run(config)
    click.echo(f"{rec.path}\nsha256 {rec.digest}")


if __name__ == "__main__":
    main()
