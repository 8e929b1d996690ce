import csv
import io
import json

import pytest

from isacsim.cli import _int_range, _snr_grid, main


def _run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_ranges():
    assert _int_range("0..3") == [0, 1, 2, 3]
    assert _int_range("1,4,7") == [1, 4, 7]
    assert _snr_grid("-10..30") == [-10.0, 0.0, 10.0, 20.0, 30.0]


def test_mee_command(tmp_path, capsys):
    p = tmp_path / "pts.csv"
    p.write_text("x,y\n-2,-1\n2,-1\n2,1\n-2,1\n0,0\n")
    code, out, _ = _run(capsys, "mee", "--points", str(p))
    assert code == 0
    res = json.loads(out)
    assert res["mee"]["area"] == pytest.approx(2 * 3.141592653589793 * 2, rel=1e-6)
    assert set(res["mee"]["central_form"]) == {"A", "B", "C", "F"}
    assert res["mec"]["radius"] == pytest.approx(5 ** 0.5)


def test_crb_check_command(capsys):
    code, out, _ = _run(capsys, "crb-check", "--draws", "3")
    assert code == 0
    rows = list(csv.DictReader(io.StringIO(out)))
    assert len(rows) == 3
    assert max(float(r["max_rel_err"]) for r in rows) < 1e-4


def test_rmse_sweep_command(capsys):
    code, out, _ = _run(capsys, "rmse-sweep", "--snr", "-10..30", "--trials", "10")
    assert code == 0
    rows = list(csv.DictReader(io.StringIO(out)))
    assert [float(r["snr_db"]) for r in rows] == [-10, 0, 10, 20, 30]
    assert {"rmse_phi", "sqrt_crb_phi"} <= set(rows[0])


def test_run_command(tmp_path, capsys):
    code, out, _ = _run(capsys, "run", "--schemes", "aba,sweep", "--seeds", "0..1",
                        "--slots", "100", "--out", str(tmp_path))
    assert code == 0
    assert len(json.loads(out)) == 4
    assert (tmp_path / "sweep_8x8_seed1.csv").exists()


def test_table3_command(capsys):
    code, out, _ = _run(capsys, "table3", "--arrays", "8", "--seeds", "0", "--schemes", "sweep",
                        "--workers", "1")
    assert code == 0
    assert out.splitlines()[0] == "array,sweep"


def test_error_json(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text("{}")
    code, _, err = _run(capsys, "run", "--config", str(bad))
    assert code != 0
    e = json.loads(err)
    assert e["type"] == "ConfigError" and e["key"] == "scenario"
    code, _, err = _run(capsys, "mee", "--points", str(tmp_path / "missing.csv"))
    assert code != 0 and "error" in json.loads(err)
