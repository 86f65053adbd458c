import json

import pytest

from neubox.errors import PipelineError
from neubox.pipeline import check_dependencies, run, study
from neubox.records import read_field

SMALL = """
[run]
modules = {modules}
output = out

[potential]
kind = soft-sphere
kappa = 1

[green]
dim = 2
box = 2
radius = 3
samples = 3

[twobody]
box = {boxes}
grid = 6
dump = f

[kernels]
n = 2
coarse = 2

[energy]
n = 2
periodic_cutoff = 20

[fock]
n = 2
modes = 1, 4

[thermo]
points = 3
"""


def write(tmp_path, modules, boxes="4, 5, 6"):
    path = tmp_path / "run.ini"
    path.write_text(SMALL.format(modules=modules, boxes=boxes))
    return path


def test_empty_module_list(tmp_path):
    rec = run(write(tmp_path, ""))
    assert rec.data["outputs"] == {} and rec.data["modules"] == []
    assert len(rec.data["config_hash"]) == 64


def test_missing_dependency_names_stage(tmp_path):
    with pytest.raises(PipelineError) as exc:
        run(write(tmp_path, "kernels"))
    assert exc.value.stage == "twobody"
    with pytest.raises(PipelineError, match="scatter"):
        check_dependencies(["twobody", "energy"])


def test_full_pipeline_sweep_and_rerun(tmp_path):
    path = write(tmp_path, "scatter, green, twobody, kernels, energy, fock, thermo")
    rec = run(path)
    out = rec.data["outputs"]
    assert len(out["twobody"]["reports"]) == 3
    names = {s["name"] for s in out["twobody"]["slopes"]}
    assert "l2_deviation" in names
    assert all(r["grid"] == 6 for r in out["twobody"]["reports"])
    assert all(r["grid"] == 3 for r in out["kernels"]["reports"])
    assert all(row["routes_agree"] for row in out["energy"]["rows"])
    assert set(rec.data["traces"]) == {"green", "twobody_residuals", "energy_cutoff", "fock",
                                       "thermo"}
    f, d, box = read_field(tmp_path / "out" / "f_l5.f64")
    assert d == 3 and box == 5.0 and f.shape == (6,) * 6
    timing = json.loads((tmp_path / "out" / "timing.json").read_text())
    assert set(timing) == set(rec.data["modules"])
    again = run(path)
    assert again.digest == rec.digest
    assert (tmp_path / "out" / "record.json").read_text() == json.dumps(
        again.data, sort_keys=True, indent=2) + "\n"


def test_study_driver(tmp_path):
    rep = study(write(tmp_path, "scatter"))
    fit = {s["name"]: s for s in rep["slopes"]}["l2_deviation"]
    assert fit["expected"] == -1.0 and fit["points"] == 3
    assert isinstance(rep["passed"], bool)


def test_study_needs_three_points(tmp_path):
    from neubox.errors import InsufficientDataError
    with pytest.raises(InsufficientDataError):
        study(write(tmp_path, "scatter", boxes="4, 5"))
