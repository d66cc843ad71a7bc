import json
import subprocess
import sys

import pytest

from numeraire_lab.cli import main

SEGMENT = {"points": [["1", "1"], ["2", "0"]]}
DOMINATED = {"points": [["1", "1"], ["2", "1"]]}


@pytest.fixture
def files(tmp_path):
    paths = {}
    for name, body in [("segment", SEGMENT), ("dominated", DOMINATED), ("single", {"points": [["3", "2"]]})]:
        p = tmp_path / f"{name}.json"
        p.write_text(json.dumps(body))
        paths[name] = str(p)
    bad = tmp_path / "bad.json"
    bad.write_text('{"points": [[1, 1]')
    paths["bad"] = str(bad)
    paths["tmp"] = tmp_path
    return paths


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    doc = json.loads(out.out) if out.out.strip() else None
    return code, doc, out.err


def reverify(capsys, tmp_path, doc):
    p = tmp_path / "report.json"
    p.write_text(json.dumps(doc))
    code, out, _ = run(capsys, "verify", str(p))
    return code, out["result"]


def test_check_numeraire(capsys, files):
    code, doc, _ = run(capsys, "check", files["segment"], "--g", "0")
    assert code == 0
    assert doc["command"] == "check" and doc["result"]["q"] == ["1/2", "1/2"]
    assert len(doc["inputs_digest"]) == 64
    vcode, v = reverify(capsys, files["tmp"], doc)
    assert vcode == 0 and v["count"] == 1 and v["all_ok"]


def test_check_not_maximal(capsys, files):
    code, doc, _ = run(capsys, "check", files["dominated"], "--g", "1,1")
    assert code == 1 and doc["result"]["reason"] == "not-maximal"
    vcode, v = reverify(capsys, files["tmp"], doc)
    assert vcode == 0 and {c["kind"] for c in v["checks"]} == {"farkas", "dominator"}


def test_check_input_errors(capsys, caplog, files):
    assert run(capsys, "check", str(files["tmp"] / "missing.json"), "--g", "0")[0] == 2
    code, doc, _ = run(capsys, "check", files["bad"], "--g", "0")
    assert code == 2 and doc is None and "not valid JSON" in caplog.text
    assert run(capsys, "check", files["segment"], "--g", "5")[0] == 2
    assert run(capsys, "check", files["segment"], "--g", "3,3")[0] == 2
    assert run(capsys, "check", files["segment"], "--g", "1,1,1")[0] == 2
    assert run(capsys, "check", files["segment"], "--g", "0.5,1")[0] == 2


def test_closure_exit_codes(capsys, files):
    code, doc, _ = run(capsys, "closure", files["segment"], "--g", "0")
    assert code == 0 and doc["result"]["closure"]["verdict"] == "bounded"
    code, doc, _ = run(capsys, "closure", files["dominated"], "--g", "0")
    assert code == 1 and doc["result"]["closure"]["ray"] == ["1", "0"]
    vcode, v = reverify(capsys, files["tmp"], doc)
    assert vcode == 0 and "chain" in {c["kind"] for c in v["checks"]}
    code, doc, _ = run(capsys, "closure", files["single"], "--g", "0", "--max-rounds", "5")
    assert code == 0


def test_prove(capsys, files):
    code, doc, _ = run(capsys, "prove", files["segment"], "--g", "0")
    assert code == 0 and doc["result"]["report"]["q"] == ["1/2", "1/2"]
    assert reverify(capsys, files["tmp"], doc)[1]["all_ok"]
    code, doc, _ = run(capsys, "prove", files["dominated"], "--g", "0")
    assert code == 1 and doc["result"]["report"]["first_failure"] == "max_in_solid"


def test_example(capsys, caplog, files):
    code, doc, _ = run(capsys, "example", "--grid", "0,1/25,1/4,1")
    assert code == 0 and doc["result"]["numeraire"] is True
    code, doc, _ = run(capsys, "example", "--grid", "0,1/100,1/25,1/4,1")
    assert doc["result"]["numeraire"] is False
    assert doc["result"]["witness_ray_primitive"] == ["1", "100", "1090"]
    vcode, v = reverify(capsys, files["tmp"], doc)
    assert vcode == 0 and v["count"] >= 2
    code, doc, _ = run(capsys, "example")
    assert doc["result"]["threshold_gamma"] == "1/81"
    assert [row["numeraire"] for row in doc["result"]["table"]] == [True] * 7 + [False] * 4
    assert reverify(capsys, files["tmp"], doc)[1]["all_ok"]
    code, _, _ = run(capsys, "example", "--grid", "0,1/3")
    assert code == 2 and "nearby admissible values" in caplog.text


def test_fuzz(capsys, caplog, monkeypatch):
    caplog.set_level("INFO", logger="numeraire_lab")
    monkeypatch.delenv("NUMERAIRE_LAB_JOBS", raising=False)
    code, doc, _ = run(capsys, "fuzz", "--seed", "1", "--count", "100")
    assert code == 0 and doc["result"]["status"]["inconsistent"] == 0 and doc["seed"] == 1
    assert "instances in" in caplog.text
    code, empty, _ = run(capsys, "fuzz", "--count", "0")
    assert code == 0 and empty["result"]["count"] == 0


def test_fuzz_byte_identical(capsys, monkeypatch):
    main(["fuzz", "--seed", "9", "--count", "25"])
    first = capsys.readouterr().out
    monkeypatch.setenv("NUMERAIRE_LAB_JOBS", "2")
    main(["fuzz", "--seed", "9", "--count", "25"])
    assert capsys.readouterr().out == first


def test_oracle(capsys, files):
    code, doc, _ = run(capsys, "oracle", files["segment"], "--g", "0")
    assert code == 0 and doc["result"]["agrees"] and doc["result"]["mesh"] == "1/128"
    code, doc, _ = run(capsys, "oracle", files["dominated"], "--g", "0")
    assert code == 0 and doc["result"]["agrees"] and doc["result"]["lp_feasible"] is False


def test_verify_rejects_tampering(capsys, files):
    _, doc, _ = run(capsys, "check", files["segment"], "--g", "0")
    doc["result"]["q"] = ["3/4", "1/4"]
    code, v = reverify(capsys, files["tmp"], doc)
    assert code == 1 and not v["all_ok"]


def test_console_entry_point(files):
    proc = subprocess.run(
        [sys.executable, "-m", "numeraire_lab.cli", "check", files["segment"], "--g", "0"],
        capture_output=True, text=True, check=False,
    )
    assert proc.returncode == 0
    assert json.loads(proc.stdout)["result"]["numeraire"] is True
