import csv
import json
import os
import subprocess
import sys

import pytest

from entrolab.cli import run
from entrolab.errors import ScenarioError
from entrolab.scenario import load_scenario, validate

ROOT = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))
SCEN = os.path.join(ROOT, "scenarios")

EXPECTED = [
    ("check", "euler_check.json", 0),
    ("check", "rozhdestvenskii_claim.json", 1),
    ("action", "burgers_action.json", 0),
    ("action", "rozhdestvenskii_variation.json", 0),
    ("compare", "burgers_compare.json", 0),
    ("compare", "sod_compare.json", 0),
    ("riemann", "sod_riemann.json", 0),
    ("path-product", "shear_paths.json", 0),
    ("path-product", "euler_paths.json", 0),
]


def scen(name):
    return os.path.join(SCEN, name)


def write(tmp_path, doc, name="s.json"):
    p = tmp_path / name
    p.write_text(json.dumps(doc) if not isinstance(doc, str) else doc)
    return str(p)


@pytest.mark.parametrize("command,name,code", EXPECTED)
def test_shipped_scenarios(command, name, code, tmp_path):
    got, report = run([command, "--scenario", scen(name), "--out", str(tmp_path), "--csv"])
    assert got == code
    validate(report, "report")
    on_disk = json.loads((tmp_path / (command.replace("-", "_") + ".json")).read_text())
    assert on_disk == json.loads(json.dumps(report))
    rows = list(csv.reader(open(tmp_path / "ledger.csv")))
    assert rows[0][0] == "command" and len(rows) > 1


def test_rozhdestvenskii_claim_reports_non_entropic(tmp_path):
    code, report = run(["check", "--scenario", scen("rozhdestvenskii_claim.json")])
    assert code == 1
    assert report["status"] == "fail"
    assert any("non-entropic" in f for f in report["failures"])


def test_systems_listing(capsys):
    code, report = run(["systems"])
    assert code == 0
    ids = {s["id"] for s in report["results"]["systems"]}
    assert {"burgers", "euler", "rozhdestvenskii"} <= ids
    assert "burgers" in capsys.readouterr().out


def test_malformed_json_exits_2(tmp_path, capsys):
    code, _ = run(["check", "--scenario", write(tmp_path, "{not json")])
    assert code == 2
    assert "malformed JSON" in capsys.readouterr().err


def test_schema_error_names_the_path(tmp_path, capsys):
    doc = json.load(open(scen("euler_check.json")))
    doc["checks"]["states"] = "many"
    doc["bogus"] = 1
    code, _ = run(["check", "--scenario", write(tmp_path, doc)])
    assert code == 2
    err = capsys.readouterr().err
    assert "$.checks.states" in err and "schema path" in err
    assert "bogus" in err


def test_missing_scenario_and_bad_flags(tmp_path):
    assert run(["check"])[0] == 2
    assert run(["check", "--scenario", str(tmp_path / "nope.json")])[0] == 2
    assert run(["check", "--scenario", scen("euler_check.json"), "--csv"])[0] == 2
    assert run(["check", "--scenario", scen("euler_check.json"), "--jobs", "0"])[0] == 2
    with pytest.raises(SystemExit):
        run(["frobnicate"])


def test_unknown_pair_is_input_error(tmp_path):
    doc = json.load(open(scen("euler_check.json")))
    doc["pairs"] = [{"id": "nonexistent"}]
    assert run(["check", "--scenario", write(tmp_path, doc)])[0] == 2


def test_scenario_loader_rejects_unknown_keys(tmp_path):
    doc = json.load(open(scen("sod_riemann.json")))
    doc["extra"] = True
    with pytest.raises(ScenarioError):
        load_scenario(write(tmp_path, doc))


def test_jobs_do_not_change_reports(tmp_path):
    outs = []
    for jobs in ("1", "4"):
        d = tmp_path / f"j{jobs}"
        assert run(["check", "--scenario", scen("euler_check.json"), "--out", str(d),
                    "--jobs", jobs])[0] == 0
        outs.append((d / "check.json").read_bytes())
    assert outs[0] == outs[1]


def test_seed_override_is_recorded(tmp_path):
    code, report = run(["check", "--scenario", scen("euler_check.json"), "--seed", "7"])
    assert code == 0 and report["seed"] == 7


def test_figures_are_written(tmp_path):
    code, _ = run(["riemann", "--scenario", scen("sod_riemann.json"), "--out", str(tmp_path),
                   "--figures"])
    assert code == 0
    pngs = [p for p in os.listdir(tmp_path) if p.endswith(".png")]
    assert pngs
    for p in pngs:
        assert (tmp_path / p).read_bytes()[:8] == b"\x89PNG\r\n\x1a\n"


def test_module_entry_point(tmp_path):
    proc = subprocess.run([sys.executable, "-m", "entrolab", "riemann", "--scenario",
                           scen("sod_riemann.json")], capture_output=True, text=True)
    assert proc.returncode == 0
    report = json.loads(proc.stdout)
    assert report["command"] == "riemann"
