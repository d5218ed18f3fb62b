import hashlib
import json
import subprocess
import sys
from pathlib import Path

import numpy as np
import pytest

from mlip import cli
from mlip.io import atomic_write, csv_text, json_text, packaged_config, read_csv
from mlip.simulator import Scenario


def _run(argv, capsys):
    code = cli.run(argv)
    out, err = capsys.readouterr()
    return code, out, err


def test_csv_format():
    text = csv_text(("a", "b", "c"), [(0.1, 2, "UA"), (1 / 3, True, "FA")])
    assert text == "a,b,c\n0.10000000000000001,2,UA\n0.33333333333333331,1,FA\n"
    assert float(text.splitlines()[2].split(",")[0]) == 1 / 3


def test_json_sorted_and_numpy_aware():
    text = json_text({"b": np.float64(1.5), "a": np.arange(2)})
    assert text.index('"a"') < text.index('"b"')
    assert json.loads(text) == {"a": [0, 1], "b": 1.5}


def test_atomic_write_leaves_no_temp(tmp_path):
    p = atomic_write(tmp_path / "sub" / "x.csv", "hi\n")
    assert p.read_text() == "hi\n"
    assert [f.name for f in p.parent.iterdir()] == ["x.csv"]


def test_packaged_configs_load():
    for name in ("default.json", "lateral.json"):
        Scenario.from_dict(packaged_config(name))
    assert set(packaged_config("figures.json")) == {"fig4", "fig5", "fig6", "fig7", "fig8"}


def test_matrices(tmp_path, capsys):
    code, out, _ = _run(["matrices", "--out", str(tmp_path)], capsys)
    assert code == 0
    data = json.loads(out)
    assert data["structure"]["passed"]
    assert {"A_M", "B_M", "C_M"} <= set(data["ua_end"])
    assert json.loads((tmp_path / "matrices.json").read_text()) == data


def test_orbit_example(tmp_path, capsys):
    code, out, _ = _run(["orbit", "--v", "2", "--mode", "heel-to-toe", "--out", str(tmp_path)], capsys)
    assert code == 0
    assert json.loads(out)["orbit"]["u_star"] == [1.0]
    header, rows = read_csv(tmp_path / "orbit_phase.csv")
    assert header == ["t", "domain", "p", "L", "p_zmp"] and len(rows) == 151


def test_orbit_p2(tmp_path, capsys):
    lateral = tmp_path / "lat.json"
    lateral.write_text(json.dumps(packaged_config("lateral.json")))
    code, out, _ = _run(["orbit", "--input", str(lateral), "--kind", "P2", "--width", "0.3", "--out", str(tmp_path), "--quiet"], capsys)
    assert code == 0 and out == ""
    assert json.loads((tmp_path / "orbit.json").read_text())["orbit"]["u_star"] == [0.3, -0.3]


def test_gains_with_w_max(tmp_path, capsys):
    doc = packaged_config("default.json")
    doc["experiment"] = {"w_max": [0.01, 0.02]}
    path = tmp_path / "in.json"
    path.write_text(json.dumps(doc))
    code, out, _ = _run(["gains", "--input", str(path), "--out", str(tmp_path)], capsys)
    data = json.loads(out)
    assert code == 0 and data["box"]["w_max"] == [0.01, 0.02]
    assert data["gain"]["method"] == "LQR"


def test_overrides(tmp_path, capsys):
    code, out, _ = _run(
        ["simulate", "--out", str(tmp_path), "--set", "n_steps=12", "--set", "plant.kind=\"mismatched\"",
         "--set", "plant.plant_z0=0.78", "--seed", "4"],
        capsys,
    )
    assert code == 0
    assert json.loads(out)["n_steps"] == 12
    assert max(json.loads(out)["max_abs_w"]) > 0


def test_malformed_json_exit_1_no_artifacts(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    out_dir = tmp_path / "out"
    code, _, err = _run(["simulate", "--input", str(bad), "--out", str(out_dir)], capsys)
    assert code == 1
    assert json.loads(err)["error"] == "schema"
    assert not out_dir.exists()


@pytest.mark.parametrize(
    "sets",
    [["bogus=1"], ["params.zz=1"], ["gains.method=\"pid\""], ["params.z0=-1"], ["experiment.nope=1"], ["noequals"]],
)
def test_schema_errors_exit_1(tmp_path, capsys, sets):
    argv = ["simulate", "--out", str(tmp_path / "o")]
    for s in sets:
        argv += ["--set", s]
    code, _, err = _run(argv, capsys)
    assert code == 1
    assert json.loads(err)["exit_code"] == 1
    assert not (tmp_path / "o").exists()


def test_unknown_key_named(tmp_path, capsys):
    code, _, err = _run(["matrices", "--set", "params.height=1", "--out", str(tmp_path)], capsys)
    assert code == 1 and "height" in json.loads(err)["message"]


def test_divergence_exit_2(tmp_path, capsys):
    code, _, err = _run(
        ["simulate", "--set", "gains={\"K\": [0, 0]}", "--set", "initial_error=[0.05, 0]", "--out", str(tmp_path)], capsys
    )
    assert code == 2
    assert json.loads(err)["error"] == "numerical"
    # the diagnostic trace is still written
    assert (tmp_path / "trace.csv").exists()


def test_singular_exit_2(tmp_path, capsys):
    # g this small makes I - A_M numerically singular
    code, _, err = _run(["orbit", "--set", "params.g=1e-30", "--out", str(tmp_path)], capsys)
    assert code == 2, err


def test_sweep_and_maxspeed(tmp_path, capsys):
    code, out, _ = _run(["sweep", "--set", "experiment={\"speeds\": [0.5]}", "--out", str(tmp_path)], capsys)
    assert code == 0 and json.loads(out)[0]["mean_velocity"] == pytest.approx(0.5, abs=1e-6)
    code, out, _ = _run(["maxspeed", "--u-limit", "0.8", "--out", str(tmp_path)], capsys)
    modes = json.loads(out)["modes"]
    assert code == 0 and modes["heel-to-toe"]["max_ground_speed"] > modes["flat-footed"]["max_ground_speed"]


def test_push_command(tmp_path, capsys):
    code, out, _ = _run(["push", "--out", str(tmp_path)], capsys)
    assert code == 0 and json.loads(out)["recovered"]
    code, _, err = _run(["push", "--set", "experiment={\"pushes\": []}", "--out", str(tmp_path)], capsys)
    assert code == 1


def _digest(directory: Path) -> dict:
    return {p.name: hashlib.sha256(p.read_bytes()).hexdigest() for p in sorted(directory.iterdir())}


def test_figure_deterministic(tmp_path, capsys):
    a, b = tmp_path / "a", tmp_path / "b"
    assert _run(["figure", "--out", str(a), "--quiet"], capsys)[0] == 0
    assert _run(["figure", "--out", str(b), "--quiet"], capsys)[0] == 0
    da, db = _digest(a), _digest(b)
    assert da == db
    assert sum(name.endswith(".csv") for name in da) > 30


def test_module_entry_point(tmp_path):
    res = subprocess.run(
        [sys.executable, "-m", "mlip", "matrices", "--out", str(tmp_path), "--quiet"], capture_output=True, text=True
    )
    assert res.returncode == 0, res.stderr
    assert (tmp_path / "matrices.json").exists()


def test_json_round_trip_objects(tmp_path, capsys):
    from mlip.gains import GainSpec
    from mlip.orbits import OrbitSpec

    _run(["orbit", "--v", "1", "--out", str(tmp_path), "--quiet"], capsys)
    orbit_doc = json.loads((tmp_path / "orbit.json").read_text())["orbit"]
    assert OrbitSpec.from_dict(orbit_doc).to_dict() == orbit_doc
    _run(["gains", "--out", str(tmp_path), "--quiet"], capsys)
    gain_doc = json.loads((tmp_path / "gains.json").read_text())["gain"]
    assert json.loads(json_text(GainSpec.from_dict(gain_doc).to_dict())) == gain_doc
