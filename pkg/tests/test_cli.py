import csv
import json

import pytest

from spinguide import cli
from spinguide.records import FLOAT_FMT, frame_rows, write_csv


def _run(argv):
    return cli.main([str(a) for a in argv])


def test_dispersion_points(tmp_path, capsys):
    out = tmp_path / "d"
    assert _run(["dispersion", "--points", 100, "--out", out]) == 0
    rows = list(csv.reader(open(out / "dispersion.csv")))
    assert rows[0] == ["s", "kx", "ky", "omega"] and len(rows) == 302
    man = json.loads((out / "manifest.json").read_text())
    assert man["subcommand"] == "dispersion"
    assert set(man["files"]) >= {"config.json", "tracks.csv", "dispersion.csv"}
    assert json.loads((out / "config.json").read_text())["points"] == 100


def test_identical_config_bitwise_outputs(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    for o in (a, b):
        assert _run(["modes", "--out", o]) == 0
    for fn in ("modes.csv", "mode_summary.csv", "config.json", "tracks.csv"):
        assert (a / fn).read_bytes() == (b / fn).read_bytes()
    ma, mb = (json.loads((o / "manifest.json").read_text()) for o in (a, b))
    assert ma["config_digest"] == mb["config_digest"] and ma["code_hash"] == mb["code_hash"]


def test_rerun_from_echo(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    assert _run(["modes", "--out", a]) == 0
    assert _run(["modes", "--config", a / "config.json", "--out", b]) == 0
    assert (a / "modes.csv").read_bytes() == (b / "modes.csv").read_bytes()


def test_units_prints_table(tmp_path, capsys):
    assert _run(["units", "--out", tmp_path / "u"]) == 0
    text = capsys.readouterr().out
    assert "kappa" in text and "2.74" in text
    assert (tmp_path / "u" / "units.csv").exists()


def test_unknown_subcommand(capsys):
    with pytest.raises(SystemExit) as e:
        _run(["teleport"])
    assert e.value.code != 0
    assert "usage" in capsys.readouterr().err


def test_bad_config_error_record(tmp_path, capsys):
    cfgp = tmp_path / "bad.yaml"
    cfgp.write_text("guide:\n  eps_min: -0.1\n")
    out = tmp_path / "o"
    assert _run(["guide", "--config", cfgp, "--out", out]) != 0
    rec = json.loads((out / "error.json").read_text())
    assert rec["error"] == "ConfigError" and "guide.eps_min" in rec["message"]
    assert "guide.eps_min" in capsys.readouterr().err


def test_missing_config_file(tmp_path):
    assert _run(["free", "--config", tmp_path / "nope.yaml", "--out", tmp_path / "o"]) != 0
    assert "nope.yaml" in (tmp_path / "o" / "error.json").read_text()


def test_bad_sweep_key(tmp_path):
    assert _run(["dmc", "--sweep", "taper=0:1:0.5", "--out", tmp_path / "o"]) != 0


def test_csv_format(tmp_path):
    p = write_csv(tmp_path / "x.csv", ["a", "b", "c"], [[1.5, 2, "z"]])
    assert p.read_bytes() == b"a,b,c\n" + (FLOAT_FMT % 1.5).encode() + b",2,z\n"


def test_frame_rows_threshold_and_scale():
    import numpy as np

    g = np.zeros((3, 3), complex)
    g[1, 1] = 0.9
    g[0, 0] = 0.01
    rows, scales = frame_rows([(0.0, g)], threshold=1e-3)
    assert len(rows) == 1 and rows[0][1:3] == (1, 1)
    assert scales[0][2] == pytest.approx(1 / 0.81)
