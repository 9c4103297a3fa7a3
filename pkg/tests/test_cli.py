import json
import subprocess
import sys

import pytest

from isolab.cli import DEFAULT_SEED, main, run

RUNS = [
    ["ball", "--group", "Zmod3^2", "--radius", "3"],
    ["cheeger", "--group", "F2", "--radius", "3", "--max-size", "5", "--exact"],
    ["profile", "--group", "F2", "--radius", "4"],
    ["forest", "--group", "Z^2", "--radius", "3", "--samples", "50"],
    ["betti", "--group", "F2", "--sweep", "2:4"],
    ["relsim", "hzero", "--N", "1000", "--n", "10", "--eps", "0.01"],
    ["relsim", "main-check", "--scenario", "random", "--seed", "7"],
    ["relsim", "compress"],
]


def _read(path):
    return path.read_bytes()


@pytest.mark.parametrize("argv", RUNS, ids=lambda a: "-".join(a[:2]))
def test_byte_identical(tmp_path, argv):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    assert main(argv + ["--out", str(a)]) == 0
    assert main(argv + ["--out", str(b)]) == 0
    assert _read(a) == _read(b)
    d = json.loads(a.read_text())
    assert d["timestamp"] is None and d["ok"] is True
    assert list(d) == sorted(d)


def test_cheeger_report():
    rep, code = run(["cheeger", "--group", "F2", "--radius", "3", "--max-size", "5", "--exact",
                     "--out", "-"])
    d = rep.to_dict()
    assert code == 0
    assert d["ratio"] == {"num": 12, "den": 5}
    names = {c["name"]: c for c in d["checks"]}
    assert names["folner_sandwich"]["passed"] and names["kazhdan_displacement"]["passed"]


def test_forest_report():
    rep, code = run(["forest", "--group", "F2", "--radius", "4", "--mode", "free",
                     "--samples", "100", "--out", "-"])
    d = rep.to_dict()
    assert code == 0
    assert d["beta1_estimate"] == 1.0 and d["variance"] == 0.0
    assert d["rsf_checks_passed"] is True
    assert d["config"]["seed"] == DEFAULT_SEED


def test_hzero_report():
    rep, _ = run(["relsim", "hzero", "--N", "1000", "--n", "10", "--eps", "0.01", "--out", "-"])
    d = rep.to_dict()
    assert d["cost"] == {"num": 101, "den": 100}
    w = d["witness_ratio"]
    assert w["num"] * 11 <= 4 * w["den"]


def test_profile_csv(tmp_path):
    csv_path = tmp_path / "p.csv"
    assert main(["profile", "--group", "F2", "--radius", "3", "--csv", str(csv_path),
                 "--out", str(tmp_path / "p.json")]) == 0
    lines = csv_path.read_text().splitlines()
    assert lines[0] == "n,ball,boundary,ratio_num,ratio_den,ratio_float"
    assert lines[1].startswith("1,5,12,12,5,")


def test_float_formatting(tmp_path):
    out = tmp_path / "b.json"
    main(["betti", "--group", "F2", "--radius", "3", "--out", str(out)])
    d = json.loads(out.read_text())
    assert d["center_trace"] == [1.03846153846]


def test_timestamp_opt_in(tmp_path):
    out = tmp_path / "t.json"
    main(["ball", "--group", "Z", "--radius", "2", "--timestamp", "--out", str(out)])
    assert json.loads(out.read_text())["timestamp"]


def test_error_exit_codes(tmp_path, capsys):
    assert main(["ball", "--group", "Q8"]) == 2
    assert "position" in capsys.readouterr().err
    assert main(["ball", "--group", "F2", "--out", str(tmp_path / "no" / "x.json")]) == 4
    assert main(["betti", "--group", "F2", "--sweep", "3:1"]) == 2
    assert main(["relsim", "hzero", "--N", "20", "--n", "10"]) == 2
    with pytest.raises(SystemExit):
        main(["forest", "--group", "F2", "--mode", "bogus"])


def test_resource_cap(monkeypatch):
    monkeypatch.setenv("ISOLAB_VERTEX_CAP", "50")
    assert main(["ball", "--group", "F2", "--radius", "6"]) == 3


def test_asserted_failure_exit_code(tmp_path):
    # Z^2 at radius 2 is far from its limit, so the calibrated check fails under --assert
    out = tmp_path / "b.json"
    assert main(["betti", "--group", "Z^2", "--radius", "2", "--out", str(out)]) == 0
    assert main(["betti", "--group", "Z^2", "--radius", "2", "--assert", "--out", str(out)]) == 1


def test_console_script(tmp_path):
    out = tmp_path / "c.json"
    proc = subprocess.run([sys.executable, "-m", "isolab.cli", "relsim", "compress",
                           "--out", str(out)], capture_output=True, text=True)
    assert proc.returncode == 0, proc.stderr
    assert json.loads(out.read_text())["ok"]
