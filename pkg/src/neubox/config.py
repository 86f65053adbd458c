"""Run configuration: an INI-style key = value file.

Example::

    [run]
    modules = scatter, twobody, energy
    output = results
    seed = 7

    [potential]
    kind = soft-sphere
    V0 = 1
    R0 = 1
    kappa = 1

    [twobody]
    dim = 3
    grid = 12
    box = 6, 8, 10        # more than one value makes a sweep

Sections and keys not listed in :data:`SCHEMA` are rejected with the line
number where they appear.
"""
from __future__ import annotations

import configparser
import hashlib
import math
from dataclasses import dataclass, field
from pathlib import Path

from .errors import ConfigError
from .potential import Potential, load_table

STAGES = ("scatter", "green", "twobody", "kernels", "energy", "fock", "thermo")
# stage -> stages whose output it consumes
DEPENDS = {
    "scatter": (),
    "green": (),
    "twobody": (),
    "kernels": ("twobody",),
    "energy": ("scatter", "twobody"),
    "fock": (),
    "thermo": ("scatter",),
}

# section -> key -> (type, default); "floats" are comma-separated lists
SCHEMA = {
    "run": {"modules": ("list", ""), "output": ("str", "results"), "seed": ("int", 0)},
    "potential": {"kind": ("str", "soft-sphere"), "V0": ("float", 1.0), "R0": ("float", 1.0),
                  "kappa": ("float", 1.0), "table": ("str", "")},
    "scatter": {"r_max": ("float", 0.0), "n_steps": ("int", 20000)},
    "green": {"dim": ("int", 6), "eps": ("float", 0.0), "box": ("float", 2.0),
              "radius": ("int", 4), "samples": ("int", 8)},
    "twobody": {"dim": ("int", 3), "box": ("floats", "8"), "grid": ("int", 12),
                "tol": ("float", 1e-8), "sampling": ("str", "tent"), "dump": ("str", "")},
    "kernels": {"n": ("ints", "2"), "coarse": ("int", 1)},
    "energy": {"n": ("ints", "2"), "cutoff": ("int", 0), "periodic_cutoff": ("int", 60),
               "particles": ("int", 8)},
    "fock": {"n": ("ints", "1, 2"), "modes": ("ints", "4, 7, 10"), "box": ("float", 0.0)},
    "thermo": {"rho_min": ("float", 1e-6), "rho_max": ("float", 1e-2), "points": ("int", 5),
               "c": ("float", 0.1), "C": ("float", 1.0)},
    "study": {"expect": ("str", "")},
}


def _line_of(text: str, section: str, key: str | None = None) -> int | None:
    current = None
    for i, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if line.startswith("[") and line.endswith("]"):
            current = line[1:-1].strip()
            if key is None and current == section:
                return i
            continue
        if current == section and key is not None:
            name = line.split("=", 1)[0].strip()
            if name.lower() == key.lower():
                return i
    return None


def _convert(kind, raw, section, key, text):
    line = _line_of(text, section, key)
    try:
        if kind == "str":
            return raw.strip()
        if kind == "int":
            return int(raw)
        if kind == "float":
            v = float(raw)
            if not math.isfinite(v):
                raise ValueError
            return v
        if kind in ("list", "floats", "ints"):
            items = [s.strip() for s in raw.split(",") if s.strip()]
            if kind == "list":
                return items
            conv = float if kind == "floats" else int
            vals = [conv(s) for s in items]
            if any(not math.isfinite(v) for v in vals):
                raise ValueError
            if vals != sorted(vals):
                raise ConfigError("sweep values must be sorted", key=f"{section}.{key}", line=line)
            return vals
    except ValueError:
        raise ConfigError(f"cannot parse {raw!r} as {kind}", key=f"{section}.{key}", line=line) from None
    raise ConfigError(f"unknown type {kind}")


@dataclass
class RunConfig:
    values: dict
    text: str
    path: Path | None = None
    modules: list = field(default_factory=list)

    def get(self, section, key):
        return self.values[section][key]

    @property
    def digest(self) -> str:
        """Hash of the parsed values (insensitive to comments and spacing)."""
        canon = repr(sorted((s, sorted(v.items())) for s, v in self.values.items()))
        return hashlib.sha256(canon.encode()).hexdigest()

    def potential(self) -> Potential:
        p = self.values["potential"]
        table = None
        if p["kind"] == "tabulated":
            if not p["table"]:
                raise ConfigError("tabulated potential needs a table path", key="potential.table")
            tpath = Path(p["table"])
            if self.path is not None and not tpath.is_absolute():
                tpath = self.path.parent / tpath
            table = load_table(tpath)
        return Potential(p["kind"], p["V0"], p["R0"], p["kappa"], table)


def parse_config(text: str, path: Path | None = None) -> RunConfig:
    parser = configparser.ConfigParser(inline_comment_prefixes=("#", ";"), interpolation=None)
    parser.optionxform = str
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        line = getattr(exc, "lineno", None)
        raise ConfigError(f"malformed config: {exc.message if hasattr(exc, 'message') else exc}",
                          line=line) from None
    values = {}
    for section in parser.sections():
        if section not in SCHEMA:
            raise ConfigError(f"unknown section [{section}]", key=section,
                              line=_line_of(text, section))
        for key in parser[section]:
            if key not in SCHEMA[section]:
                raise ConfigError("unknown key", key=f"{section}.{key}",
                                  line=_line_of(text, section, key))
    for section, keys in SCHEMA.items():
        out = {}
        for key, (kind, default) in keys.items():
            if parser.has_option(section, key):
                out[key] = _convert(kind, parser[section][key], section, key, text)
            else:
                out[key] = _convert(kind, str(default), section, key, text) if kind in (
                    "list", "floats", "ints") else default
        values[section] = out
    modules = values["run"]["modules"]
    for mod in modules:
        if mod not in STAGES:
            raise ConfigError(f"unknown module {mod!r}", key="run.modules",
                              line=_line_of(text, "run", "modules"))
    cfg = RunConfig(values, text, path, [s for s in STAGES if s in modules])
    cfg.potential()  # validate early
    return cfg


def load_config(path) -> RunConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}") from None
    return parse_config(text, path)
