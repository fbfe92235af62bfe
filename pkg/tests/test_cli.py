import csv
import json

import pytest

from genedup import cli


def _run(tmp_path, *args):
    out = tmp_path / "out"
    code = cli.run([*args, "--out", str(out)])
    return code, out


def _read_csv(path):
    with open(path) as fh:
        return list(csv.reader(fh))


def test_curve_watterson(tmp_path):
    code, out = _run(tmp_path, "curve", "--grid", "11")
    assert code == 0
    rows = _read_csv(out / "curve.csv")
    assert rows[0] == ["z", "x_star", "y_star"]
    assert len(rows) == 12
    assert rows[6][0] == "0"
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["command"] == "curve"
    assert set(manifest["outputs"]) == {"curve.csv", "summary.json"}


def test_exit_time_reports_both_variance_forms(tmp_path):
    code, out = _run(tmp_path, "exit-time", "--model", "watterson", "--mu", "1e-4")
    assert code == 0
    rows = _read_csv(out / "exit_time.csv")
    forms = {r[2]: float(r[4]) for r in rows[1:]}
    assert forms["ito"] == pytest.approx(4.8207271565, rel=1e-8)
    assert forms["marginal_sum"] == pytest.approx(6.5694427822, rel=1e-8)


@pytest.mark.parametrize("args", [
    ["curve", "--mu", "2"],
    ["curve", "--b", "0.5"],
    ["green", "--x0", "1.5"],
    ["simulate", "--reps", "0"],
    ["theorem1", "--n-list", "1"],
    ["psub-scan", "--n-list", "50,25"],
])
def test_invalid_config_exits_2(tmp_path, args):
    code, _ = _run(tmp_path, *args)
    assert code == 2


def test_unknown_config_field(tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"grid": 5, "colour": "red"}))
    code, _ = _run(tmp_path, "curve", "--config", str(cfg))
    assert code == 2


def test_flags_override_config_file(tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"grid": 5, "mu": 1e-2}))
    code, out = _run(tmp_path, "curve", "--config", str(cfg), "--grid", "7")
    assert code == 0
    m = json.loads((out / "manifest.json").read_text())
    assert m["config"]["grid"] == 7
    assert m["config"]["mu"] == 1e-2


def test_verify_suite_passes(tmp_path):
    code, out = _run(tmp_path, "verify", "--suite", "curve", "--b", "1e-3")
    assert code == 0
    statuses = {r[3] for r in _read_csv(out / "verify.csv")[1:]}
    assert statuses == {"pass"}


def test_simulate_rerun_from_manifest(tmp_path):
    code, out = _run(tmp_path, "simulate", "--pop-size", "6", "--reps", "30")
    assert code == 0
    first = (out / "replicates.csv").read_bytes()
    again = tmp_path / "again"
    code = cli.run(["simulate", "--config", str(out / "manifest.json"), "--out", str(again)])
    assert code == 0
    assert (again / "replicates.csv").read_bytes() == first


def test_manifest_for_other_command_is_refused(tmp_path):
    code, out = _run(tmp_path, "curve", "--grid", "5")
    assert code == 0
    code = cli.run(["coeffs", "--config", str(out / "manifest.json"), "--out", str(tmp_path / "x")])
    assert code == 2


def test_version(capsys):
    with pytest.raises(SystemExit) as exc:
        cli.run(["--version"])
    assert exc.value.code == 0
    assert capsys.readouterr().out.strip() == cli.__version__


def test_fmt():
    assert cli.fmt(-0.0) == "0"
    assert cli.fmt(1 / 3) == "0.333333333"
    assert cli.fmt(True) == "true"
    assert cli.fmt(float("nan")) == "nan"
