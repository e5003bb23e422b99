import csv
import io
import json

import pytest

from polyenergy.cli import main, parse_sweep

from conftest import BENCH, REF_POINT

BIND = ",".join(f"{k}={v}" for k, v in REF_POINT.items())


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_evaluate_reference_point(capsys):
    code, out, _ = run(capsys, "evaluate", "gesummv", "gesummv-2x2", "--bind", BIND)
    assert code == 0
    data = json.loads(out)
    assert data["latency"] == 16
    assert data["energy_fJ"] == 63673980
    assert data["statements"]["S7*1"] == 12


def test_analyze_then_evaluate_report(capsys, tmp_path):
    report = tmp_path / "r.json"
    assert run(capsys, "analyze", "--program", str(BENCH / "gesummv.pra"),
               "--mapping", str(BENCH / "gesummv-2x2.map"), "--out", str(report))[0] == 0
    code, out, _ = run(capsys, "evaluate", "--report", str(report), "--bind", BIND, "--format", "csv")
    assert code == 0
    rows = list(csv.reader(io.StringIO(out)))
    assert rows[0] == ["section", "key", "value"]
    assert ["total", "energy_fJ", "63673980"] in rows


def test_compare_exit_codes(capsys):
    code, out, _ = run(capsys, "compare", "gesummv", "gesummv-2x2", "--bind", BIND)
    assert code == 0 and json.loads(out)["match"]
    code, out, _ = run(capsys, "compare", "gesummv", "gesummv-2x2", "--bind", BIND, "--perturb", "S7*1=1")
    assert code == 1
    diff = json.loads(out)["diff"]
    assert len(diff) == 1 and diff[0]["key"] == "S7*1"


def test_input_errors_exit_two(capsys, tmp_path):
    code, _, err = run(capsys, "evaluate", "gesummv", "gesummv-2x2", "--bind", "N0=9,N1=5,p0=2,p1=3")
    assert code == 2 and "does not cover" in json.loads(err)["message"]
    code, _, err = run(capsys, "analyze", "gemm", "gesummv-2x2")
    assert code == 2 and "dimension mismatch" in json.loads(err)["message"]
    bad = tmp_path / "bad.pra"
    bad.write_text("params N;\nspace (i): 0 <= i < N;\n")
    code, _, err = run(capsys, "analyze", str(bad), "fir-2x2")
    assert code == 2 and json.loads(err)["error"] == "DSLError"
    code, _, err = run(capsys, "evaluate", "gesummv", "gesummv-2x2", "--bind", "N0=x")
    assert code == 2
    code, _, _ = run(capsys, "simulate", "nosuch", "gesummv-2x2", "--bind", BIND)
    assert code == 2


def test_simulate_reports_latency(capsys):
    code, out, _ = run(capsys, "simulate", "gesummv", "gesummv-2x2", "--bind", BIND)
    assert code == 0 and json.loads(out)["latency"] == 16


def test_single_point_sweep_equals_evaluate(capsys):
    code, out, _ = run(capsys, "sweep", "gesummv", "gesummv-2x2", "--sweep", "N0=4;N1=5")
    assert code == 0
    rows = list(csv.DictReader(io.StringIO(out)))
    assert len(rows) == 1
    row = rows[0]
    # tile sizes follow ceil(N/t)
    assert (row["p0"], row["p1"]) == ("2", "3")
    assert row["valid"] == "1" and int(row["E_tot_fJ"]) == 63673980 and int(row["L"]) == 16


def _without_timing(text):
    rows = list(csv.reader(io.StringIO(text)))
    col = rows[0].index("analyzer_time_s")
    return [r[:col] + r[col + 1:] for r in rows]


def test_sweep_is_deterministic_and_marks_invalid_rows(capsys):
    argv = ["sweep", "gesummv", "gesummv-2x2", "--sweep", "N0:N1=4,8,16", "--bind", "p0=2,p1=2", "--tile-rule", "none"]
    first = _without_timing(run(capsys, *argv)[1])
    second = _without_timing(run(capsys, *argv)[1])
    assert first == second
    header, rows = first[0], first[1:]
    valid = [r[header.index("valid")] for r in rows]
    assert valid == ["1", "0", "0"]
    assert "does not cover" in rows[1][header.index("note")]


def test_parse_sweep():
    assert parse_sweep("N0:N1=1,2;p0=3") == [dict(N0=1, N1=1, p0=3), dict(N0=2, N1=2, p0=3)]
    with pytest.raises(ValueError):
        parse_sweep("N0")
