import json
import math
import subprocess
import sys

import pytest

from reslab import billiard as B
from reslab import cli
from reslab.errors import ConfigInvalid


def write(tmp_path, obj, name="job.json"):
    path = tmp_path / name
    path.write_text(json.dumps(obj))
    return path


def gap_config(**params):
    base = {"max_word_length": 6, "m_max": 1, "rectangle": [0.0123, 4.0, -1.0, -0.05]}
    base.update(params)
    return {"schema_version": 1, "job": "gap",
            "model": {"type": "billiard", "builder": "two_disk", "distance": 6, "radius": 1},
            "params": base}


def data_files(out):
    return {p.name: p.read_bytes() for p in sorted(out.iterdir()) if p.name != "manifest.json"}


def test_bundled_two_disk_gap(tmp_path):
    out = tmp_path / "gap"
    assert cli.main(["gap", "--config", str(cli.bundled_config("two_disk_gap")), "--out", str(out)]) == 0
    pred = json.loads((out / "gap_prediction.json").read_text())
    orbit = B.find_orbit(B.two_disk(6.0), "AB")
    lam = math.log(orbit.jacobian) / orbit.period
    assert pred["gap_width"] == pytest.approx(lam / 2, abs=1e-6)
    report = json.loads((out / "gap_report.json").read_text())
    assert report["observed_gap"] == pytest.approx(lam / 2, abs=1e-6)
    manifest = json.loads((out / "manifest.json").read_text())
    assert set(manifest["files"]) == {"gap_prediction.json", "gap_report.json", "resonances.csv"}
    assert manifest["tool"] == "reslab" and len(manifest["inputs_sha256"]) == 64


def test_bundled_pants_dimension(tmp_path):
    out = tmp_path / "dim"
    assert cli.main(["dimension", "--config", str(cli.bundled_config("pants_dimension")),
                     "--out", str(out)]) == 0
    rep = json.loads((out / "dimension.json").read_text())
    est = rep["estimates"]
    assert set(est) == {"bowen", "eigenvalue_root", "first_det_zero"}
    assert all(row["difference"] < 1e-3 for row in rep["agreement"])
    assert abs(rep["box_count"] - est["eigenvalue_root"]) < 0.05


def test_determinism(tmp_path):
    cfg = write(tmp_path, gap_config())
    a, b = tmp_path / "a", tmp_path / "b"
    assert cli.main(["gap", "--config", str(cfg), "--out", str(a)]) == 0
    assert cli.main(["gap", "--config", str(cfg), "--out", str(b), "--threads", "2"]) == 0
    assert data_files(a) == data_files(b)
    ma = json.loads((a / "manifest.json").read_text())
    mb = json.loads((b / "manifest.json").read_text())
    assert ma["files"] == mb["files"] and ma["inputs_sha256"] == mb["inputs_sha256"]


def test_zero_height_rectangle_is_rejected(tmp_path, capsys):
    cfg = write(tmp_path, gap_config(rectangle=[0.0, 4.0, -0.5, -0.5]))
    out = tmp_path / "never"
    assert cli.main(["gap", "--config", str(cfg), "--out", str(out)]) == 2
    assert "params.rectangle: zero or negative height" in capsys.readouterr().err
    assert not out.exists()
    assert not list(tmp_path.glob(".reslab-*"))


@pytest.mark.parametrize("mutate,message", [
    (lambda c: c.update(schema_version=2), "schema_version"),
    (lambda c: c.update(job="fup"), "job: config is for 'fup'"),
    (lambda c: c["model"].update(type="cantor"), "model.type"),
    (lambda c: c["params"].update(max_word_length=0), "params.max_word_length"),
    (lambda c: c["params"].update(rectangle=[1, 2, 3]), "params.rectangle"),
    (lambda c: c.update(extra=1), "unknown keys"),
])
def test_field_level_diagnostics(tmp_path, mutate, message):
    raw = gap_config()
    mutate(raw)
    with pytest.raises(ConfigInvalid) as exc:
        cli.parse_config(raw, "gap", tmp_path / "o")
    assert any(message in p for p in exc.value.problems)


def test_every_problem_is_listed(tmp_path):
    raw = {"schema_version": 1, "model": {"type": "cantor", "M": 1},
           "params": {"k_range": [3, 4]}}
    with pytest.raises(ConfigInvalid) as exc:
        cli.parse_config(raw, "fup", tmp_path / "o")
    assert len(exc.value.problems) == 2


def test_missing_and_broken_files(tmp_path):
    assert cli.main(["gap", "--config", str(tmp_path / "nope.json"), "--out", str(tmp_path / "o")]) == 2
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert cli.main(["gap", "--config", str(bad), "--out", str(tmp_path / "o")]) == 2


def test_numerical_failure_exit_code(tmp_path, capsys):
    # a rectangle edge through the first lattice zero's height cannot be counted
    orbit = B.find_orbit(B.two_disk(6.0), "AB")
    k0 = B.lattice_point(orbit, 0, 1)
    cfg = write(tmp_path, {"schema_version": 1,
                           "model": {"type": "billiard", "builder": "two_disk", "distance": 6},
                           "params": {"max_word_length": 4,
                                      "rectangle": [k0.real - 0.1, k0.real + 0.1, k0.imag, 0.5]}})
    out = tmp_path / "o"
    assert cli.main(["resonances", "--config", str(cfg), "--out", str(out)]) == 3
    err = capsys.readouterr().err
    assert "failed in zeros" in err and "BoundaryZero" in err
    assert not out.exists()


def test_model_file_is_relative_to_config(tmp_path):
    (tmp_path / "sys.json").write_text(json.dumps({"builder": "equilateral", "side": 6}))
    cfg = write(tmp_path, {"schema_version": 1, "model": {"type": "billiard", "file": "sys.json"},
                           "params": {"max_word_length": 3}})
    out = tmp_path / "o"
    assert cli.main(["orbits", "--config", str(cfg), "--out", str(out)]) == 0
    lines = (out / "orbits.csv").read_text().splitlines()
    assert len(lines) == 1 + 5  # AB, AC, BC, ABC, ACB


def test_pressure_and_fup_jobs(tmp_path):
    cfg = write(tmp_path, {"schema_version": 1, "model": {"type": "schottky", "builder": "pants",
                                                         "funnel_length": 6},
                           "params": {"max_word_length": 8, "betas": [0, 0.5, 1]}}, "p.json")
    assert cli.main(["pressure", "--config", str(cfg), "--out", str(tmp_path / "p")]) == 0
    assert len((tmp_path / "p" / "pressure.csv").read_text().splitlines()) == 4
    cfg = write(tmp_path, {"schema_version": 1, "model": {"type": "cantor", "M": 3, "alphabet": [0, 2]},
                           "params": {"k_range": [2, 6]}}, "f.json")
    assert cli.main(["fup", "--config", str(cfg), "--out", str(tmp_path / "f")]) == 0
    summary = json.loads((tmp_path / "f" / "fup_summary.json").read_text())
    assert summary["deepest_k"] == 6 and summary["beta_estimate"] > 0


def test_weyl_fit_job(tmp_path):
    cfg = write(tmp_path, {"schema_version": 1, "model": {"type": "schottky", "builder": "cylinder",
                                                         "length": 2.0},
                           "params": {"M": 16, "rectangle": [-0.5, 0.5, 0.5, 28.0],
                                      "strip_depth": 1.0, "window_width": 3.0,
                                      "window_centers": [2 * math.pi * j for j in (1, 2, 3, 4)]}})
    assert cli.main(["weyl-fit", "--config", str(cfg), "--out", str(tmp_path / "w")]) == 0
    fit = json.loads((tmp_path / "w" / "weyl_fit.json").read_text())
    # zeros sit every pi; each window holds the double zero at its center only
    assert fit["counts"] == [2, 2, 2, 2] and abs(fit["exponent"]) < 1e-12


def test_orbit_cache(tmp_path, monkeypatch):
    monkeypatch.setenv("RESLAB_CACHE_DIR", str(tmp_path / "cache"))
    system = B.equilateral(6.0)
    first = cli.billiard_orbits(system, 4)
    files = list((tmp_path / "cache").glob("orbits-*.json"))
    assert len(files) == 1
    second = cli.billiard_orbits(system, 4)
    assert [o.word.letters for o in first] == [o.word.letters for o in second]
    assert [o.period for o in first] == [o.period for o in second]
    # a different system gets a different key
    cli.billiard_orbits(B.equilateral(7.0), 4)
    assert len(list((tmp_path / "cache").glob("orbits-*.json"))) == 2


def test_console_entry_point(tmp_path):
    proc = subprocess.run([sys.executable, "-m", "reslab", "orbits", "--config",
                           str(write(tmp_path, gap_config())), "--out", str(tmp_path / "o")],
                          capture_output=True, text=True)
    assert proc.returncode == 2 and "job: config is for 'gap'" in proc.stderr
