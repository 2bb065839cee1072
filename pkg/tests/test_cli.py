import json
import os
import subprocess
import sys

import pytest

from rydrx import cli, plotting, figures, io
from rydrx.errors import InputError


def data_rows(path):
    return [l for l in open(path, encoding="utf-8") if not l.startswith("#")]


def run(tmp_path, *argv):
    out = tmp_path / "out"
    status = cli.run([*argv, "--out", str(out)])
    return status, out


def test_spectrum_writes_artifacts(tmp_path):
    status, out = run(tmp_path, "spectrum", "--seed", "3", "--set", "sweep.spectrum_points=201")
    assert status == 0
    names = set(os.listdir(out))
    assert {"spectrum_rf_off.csv", "spectrum_rf_on.csv", "manifest.json", "plot_spectrum.py",
            "plot_spectrum.png"} <= names
    m = json.loads((out / "manifest.json").read_text())
    assert m["seed"] == 3 and m["config"]["sweep"]["spectrum_points"] == 201
    assert len(m["config_sha256"]) == 64 and "timestamp" in m


def test_manifest_config_reruns_identically(tmp_path):
    status, out = run(tmp_path, "sensitivity", "--seed", "5", "--set", "sweep.repetitions=1")
    assert status == 0
    m = json.loads((out / "manifest.json").read_text())
    cfg_path = tmp_path / "effective.json"
    cfg_path.write_text(json.dumps(m["config"]))
    out2 = tmp_path / "again"
    assert cli.run(["sensitivity", "--config", str(cfg_path), "--out", str(out2)]) == 0
    assert data_rows(out / "sensitivity_sweep.csv") == data_rows(out2 / "sensitivity_sweep.csv")


def test_missing_seed_exits_2_naming_key(tmp_path, capsys):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"readout": {"rbw": 10}}))
    assert cli.run(["spectrum", "--config", str(cfg), "--out", str(tmp_path / "o")]) == 2
    record = json.loads(capsys.readouterr().err.strip().splitlines()[-1])
    assert record["field"] == "seed" and record["kind"] == "validation"


def test_bad_override_exits_2(tmp_path, capsys):
    status, _ = run(tmp_path, "spectrum", "--seed", "1", "--set", "readout.nope=1")
    assert status == 2
    assert json.loads(capsys.readouterr().err)["field"] == "readout.nope"


def test_runtime_error_exits_1(tmp_path, capsys):
    status, _ = run(tmp_path, "calibrate", "--seed", "1", "--set",
                    f"sweep.cal_dataset={json.dumps(str(tmp_path / 'missing.csv'))}")
    assert status == 2
    bad = tmp_path / "bad.csv"
    io.write_csv(bad, ["power_dbm", "other"], [(0.0, 1.0)])
    status, _ = run(tmp_path, "calibrate", "--seed", "1", "--set",
                    f"sweep.cal_dataset={json.dumps(str(bad))}")
    assert status == 1
    assert json.loads(capsys.readouterr().err.strip().splitlines()[-1])["kind"] == "runtime"


def test_calibrate_bundled(tmp_path):
    status, out = run(tmp_path, "calibrate", "--seed", "1", "--set", "sweep.cal_dataset=bundled")
    assert status == 0
    res = json.loads((out / "manifest.json").read_text())["results"]
    assert abs(res["c_cal"] - 0.58) <= 0.01


def test_constellation_and_plot_script(tmp_path):
    status, out = run(tmp_path, "constellation", "--seed", "2")
    assert status == 0
    script = out / "plot_constellation.py"
    png = tmp_path / "regen.png"
    subprocess.run([sys.executable, str(script), str(png)], check=True, cwd=tmp_path)
    assert png.stat().st_size > 1000


def test_plot_script_is_deterministic_and_standalone(tmp_path):
    csv = tmp_path / "b.csv"
    io.write_csv(csv, ["beatnote_hz", "sensitivity_vm_rthz", "stderr_vm_rthz"],
                 [(1e4, 1e-5, 1e-7), (1e6, 1.1e-5, 1e-7), (5e6, 1.6e-5, 1e-7), (1e7, 2.5e-5, 1e-7)])
    a = plotting.emit_plot_script([csv], "bandwidth", tmp_path / "p1.py")
    b = plotting.emit_plot_script([csv], "bandwidth", tmp_path / "p2.py")
    text = open(a).read()
    assert text.replace("p1", "p2") == open(b).read()
    assert "import rydrx" not in text and "from rydrx" not in text
    subprocess.run([sys.executable, a], check=True, cwd="/")
    assert (tmp_path / "p1.png").exists()


def test_plot_schema_mismatch_names_column(tmp_path):
    csv = tmp_path / "x.csv"
    io.write_csv(csv, ["symbol_index", "label", "i_meas"], [(0, 0, 1.0)])
    with pytest.raises(InputError, match="q_meas"):
        plotting.emit_plot_script([csv], "constellation", tmp_path / "p.py")
    with pytest.raises(InputError):
        plotting.emit_plot_script([csv], "histogram", tmp_path / "p.py")


def test_empty_csv_gives_empty_axes(tmp_path):
    csv = tmp_path / "empty.csv"
    csv.write_text("")
    script = plotting.emit_plot_script([csv], "evm-sweep", tmp_path / "p.py")
    r = subprocess.run([sys.executable, script], cwd=tmp_path)
    assert r.returncode == 0 and (tmp_path / "p.png").exists()


def test_every_kind_renders(tmp_path):
    tables = {
        "spectrum": (["frequency_hz", "value"], [(0.0, 1.0), (1.0, 2.0)]),
        "calibration": (["sqrt_power_mw", "field_vm", "fit_vm"], [(1.0, 0.58, 0.58)]),
        "sensitivity": (["sig_power_dbm", "snr_db"], [(-60.0, 20.0), (-40.0, 40.0)]),
        "noise-floors": (["frequency_hz", "total_dbm", "probe_laser_dbm", "shot_dbm",
                          "detector_dbm"], [(1e4, -50, -51, -90, -95), (1e5, -52, -53, -90, -95)]),
        "bandwidth": (["beatnote_hz", "sensitivity_vm_rthz", "stderr_vm_rthz"],
                      [(1e4, 1e-5, 0.0), (5e6, 2e-5, 0.0)]),
        "constellation": (["symbol_index", "label", "i_meas", "q_meas", "i_nom", "q_nom"],
                          [(0, 0, 0.7, 0.7, 0.707, 0.707)]),
        "evm-sweep": (["x", "evm_mean", "evm_stderr"], [(1e6, 5.0, 0.1), (2e6, 6.0, 0.1)]),
    }
    assert set(tables) == set(figures.SCHEMAS)
    for kind, (cols, rows) in tables.items():
        csv = tmp_path / f"{kind}.csv"
        io.write_csv(csv, cols, rows, {"sweep": "beatnote"})
        png = tmp_path / f"{kind}.png"
        plotting.render_png([csv], kind, png)
        assert png.stat().st_size > 1000
