import json
from fractions import Fraction as F

import pytest

from arexact import cli
from arexact.report import ReportError, read_report, to_csv
from arexact.shipped import fixture_path

MODEL = str(fixture_path("models", "uniform3.markov"))
MET = str(fixture_path("constraints", "metrical_k2.con"))
FIX3 = str(fixture_path("constraints", "fixedlen3.con"))
OR2 = str(fixture_path("cnf", "or2.cnf"))
CONTRA = str(fixture_path("cnf", "contradiction.cnf"))


def run(argv, tmp_path, name="out.json"):
    out = tmp_path / name
    code = cli.main(argv + ["-o", str(out)])
    return code, (out.read_text() if out.exists() else None)


def test_gadget_verify(tmp_path):
    code, text = run(["gadget-verify", OR2], tmp_path)
    assert code == 0
    doc = read_report(text)
    res = doc["result"]
    assert res["passed"] and res["model_count"] == 3 and res["z"] == "3/4"
    assert res["map_sequence"][-3:] == "eos"


def test_gadget_verify_unsat(tmp_path):
    code, text = run(["gadget-verify", CONTRA], tmp_path)
    assert code == 0
    res = read_report(text)["result"]
    assert res["satisfiable"] is False and res["map_sequence"] == "0 b0 eos" and res["z"] == "0"


@pytest.mark.parametrize("engine", ["oracle", "dynprog"])
def test_map_and_z(tmp_path, engine):
    code, text = run(["map", "--model", MODEL, "--constraint", MET, "--engine", engine], tmp_path)
    res = read_report(text)["result"]
    assert code == 0 and res["sequence"] == "b eos" and res["probability"] == "1/9"
    assert res["probability_display"] == "0.111111"
    code, text = run(["z", "--model", MODEL, "--constraint", FIX3, "--engine", engine, "--check-oracle"], tmp_path)
    assert code == 0 and read_report(text)["result"]["z"] == "4/27"


def test_map_greedy(tmp_path):
    code, text = run(["map", "--model", MODEL, "--constraint", MET, "--engine", "greedy"], tmp_path)
    assert read_report(text)["result"]["sequence"] == "a a eos"


def test_threshold(tmp_path):
    code, text = run(["threshold", "--dimacs", OR2, "--n", "3", "--tau", "1/4"], tmp_path)
    res = read_report(text)["result"]
    assert code == 0 and res["result"] and res["certificate_valid"]
    code, text = run(["threshold", "--dimacs", CONTRA, "--n", "2", "--tau", "1/2"], tmp_path)
    res = read_report(text)["result"]
    assert res["result"] is False and res["witness"] is None


def test_sample(tmp_path):
    code, text = run(["sample", "--model", MODEL, "--constraint", FIX3, "--count", "25", "--seed", "4"], tmp_path)
    samples = read_report(text)["result"]["samples"]
    assert code == 0 and len(samples) == 25
    assert all(s["status"] == "ok" and len(s["sequence"].split()) == 3 for s in samples)


def test_bias_json_and_csv(tmp_path):
    argv = ["bias", "--model", MODEL, "--constraint", MET, "--decoder", "greedy", "--trials", "20"]
    code, text = run(argv, tmp_path)
    res = read_report(text)["result"]
    assert code == 0 and res["coverage"] == "1/2" and res["tv_distance"] == "3/4"
    code, csv_text = run(argv + ["--format", "csv"], tmp_path, "out.csv")
    lines = csv_text.splitlines()
    assert lines[0] == "instance,decoder,sequence,exact,exact_display,empirical,empirical_display,count"
    assert lines[1].split(",")[2:4] == ["b eos", "3/4"]
    assert to_csv(json.loads(text)) == csv_text


def test_config_file(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"model": MODEL, "constraint": MET, "engine": "masked-ancestral",
                               "trials": 300, "seed": 3}))
    code, text = run(["bias", "--config", str(cfg)], tmp_path)
    doc = read_report(text)
    assert code == 0 and doc["result"]["decoder"] == "masked-ancestral"
    assert doc["inputs"]["seed"] == 3 and doc["result"]["samples_requested"] == 300


def test_report_check(tmp_path, capsys):
    code, text = run(["z", "--model", MODEL, "--constraint", MET], tmp_path)
    assert cli.main(["report-check", str(tmp_path / "out.json")]) == 0
    bad = json.loads(text)
    bad["result"]["z"] = 0.148
    (tmp_path / "bad.json").write_text(json.dumps(bad))
    assert cli.main(["report-check", str(tmp_path / "bad.json")]) == 1
    assert "rational" in capsys.readouterr().err


@pytest.mark.parametrize("mutate, fragment", [
    (lambda d: d.update(schema="other"), "schema"),
    (lambda d: d.update(version=2), "version"),
    (lambda d: d["result"].pop("z"), "lacks z"),
    (lambda d: d["result"].pop("z_display"), "z_display"),
    (lambda d: d["result"].update(z="1/0"), "not a rational"),
])
def test_read_report_rejects(tmp_path, mutate, fragment):
    _, text = run(["z", "--model", MODEL, "--constraint", MET], tmp_path)
    doc = json.loads(text)
    mutate(doc)
    with pytest.raises(ReportError, match=fragment):
        read_report(json.dumps(doc))


@pytest.mark.parametrize("argv", [
    ["map"],
    ["map", "--model", MODEL],  # no horizon and no constraint
    ["bias", "--model", MODEL, "--constraint", MET, "--decoder", "greedy", "--beam-width", "2"],
    ["threshold", "--dimacs", OR2, "--n", "3", "--tau", "x"],
    ["frobnicate"],
    ["z", "--model", MODEL, "--dimacs", OR2, "--constraint", MET],
])
def test_usage_errors_exit_1(argv, tmp_path):
    assert run(argv, tmp_path)[0] == 1


def test_parse_error_exit_1(tmp_path, capsys):
    broken = tmp_path / "broken.cnf"
    broken.write_text("p cnf 2 2\n1 2 0\n-1 -2\n")
    assert cli.main(["gadget-verify", str(broken)]) == 1
    assert "line 3: missing 0 terminator" in capsys.readouterr().err


def test_budget_exit_2(tmp_path):
    chain = str(fixture_path("cnf", "chain12.cnf"))
    assert run(["gadget-verify", chain, "--budget", "100"], tmp_path)[0] == 2
    assert run(["map", "--dimacs", chain, "--horizon", "14", "--budget", "50"], tmp_path)[0] == 2


def test_check_failure_exit_3(tmp_path, monkeypatch):
    monkeypatch.setattr(cli, "exact_conditional", lambda *a, **k: None)
    argv = ["bias", "--model", MODEL, "--constraint", MET, "--decoder", "exact", "--trials", "5", "--check-oracle"]
    assert run(argv, tmp_path)[0] == 3


@pytest.mark.parametrize("argv", [
    ["sample", "--model", MODEL, "--constraint", MET, "--engine", "masked-ancestral", "--count", "40"],
    ["bias", "--model", MODEL, "--constraint", FIX3, "--decoder", "rejection", "--trials", "300"],
])
def test_identical_runs_identical_bytes(tmp_path, argv):
    _, a = run(argv + ["--seed", "17"], tmp_path, "a.json")
    _, b = run(argv + ["--seed", "17"], tmp_path, "b.json")
    _, c = run(argv + ["--seed", "18"], tmp_path, "c.json")
    assert a == b and a != c


def test_display_twin_rounding():
    from arexact.report import display
    assert display(F(1, 27)) == "0.0370370"
    assert display(F(4, 27)) == "0.148148"
    assert display(F(1)) == "1"
