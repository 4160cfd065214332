import json
import os
import pathlib
import subprocess

import pytest

import coaction

ROOT = pathlib.Path(__file__).resolve().parents[2]
DATA = pathlib.Path(os.environ.get("COACT_DATA_DIR", ROOT / "data"))
SCHEMAS = pathlib.Path(os.environ.get("COACT_SCHEMA_DIR", ROOT / "schemas"))


def load(name):
    return json.loads((DATA / name).read_text())


def schema(name):
    return json.loads((SCHEMAS / name).read_text())


def test_classify_logical():
    out = coaction.classify(load("logical.json"))
    assert out["verdict"]["weak"] is True
    assert out["verdict"]["strong"] is False


def test_boolean_pattern_and_errors():
    assert coaction.boolean_pattern(8)
    with pytest.raises(coaction.UsageError):
        coaction.boolean_pattern(0)
    assert issubclass(coaction.DomainError, coaction.UsageError)
    assert issubclass(coaction.FitError, coaction.CoactError)


def test_graph_queries():
    g = load("factor_edge.json")
    assert coaction.d_separated(g, ["A"], ["B"]) is False
    report = coaction.check_conditions(load("shared_cause.json"), c=["Z"], u=["U"])
    assert "conditions" in report and "sufficient_covariate" in report


def test_excess_risk_and_fits():
    alpha, beta, y = [], [], []
    for i, j, ones, total in [(1, 1, 30, 40), (1, 0, 10, 40), (0, 1, 10, 40), (0, 0, 4, 40)]:
        alpha += [i] * total
        beta += [j] * total
        y += [1] * ones + [0] * (total - ones)
    np_test = coaction.excess_risk(alpha, beta, y)
    assert np_test["test"]["statistic"] == pytest.approx(0.25)
    risk = coaction.fit_model(alpha, beta, y, link="risk")
    assert risk["test"]["statistic"] == pytest.approx(0.25, abs=1e-6)
    odds = coaction.fit_model(alpha, beta, y, link="odds")
    assert odds["fit"]["link"]
    with pytest.raises(coaction.UsageError):
        coaction.fit_model(alpha, beta, y, link="probit")


def test_simulation_round_trip():
    scenario = load("and_scenario.json")
    exact = coaction.exact_risk(scenario)
    assert exact
    rows = coaction.sample(scenario, 500, seed=3)
    assert len(rows["Y"]) == 500
    assert rows == coaction.sample(scenario, 500, seed=3)
    report = coaction.soundness(100, seed=1, workers=2)
    assert report["trials"] == 100
    assert report["counterexamples"] == []


def test_run_cli_in_process():
    code, out, _ = coaction.run_cli(["mech", "classify", str(DATA / "logical.json"), "--json"])
    assert code == 0
    assert json.loads(out)["command"] == "mech classify"
    code, _, err = coaction.run_cli(["mech", "classify", "--nope"])
    assert code == 2 and err


def validator(name):
    jsonschema = pytest.importorskip("jsonschema")
    referencing = pytest.importorskip("referencing")
    resources = [
        (path.name, referencing.Resource.from_contents(json.loads(path.read_text())))
        for path in SCHEMAS.glob("*.schema.json")
    ]
    registry = referencing.Registry().with_resources(resources)
    return jsonschema.Draft202012Validator(schema(name), registry=registry)


def test_fixtures_match_input_schemas():
    responses = validator("response_function.schema.json")
    graphs = validator("graph.schema.json")
    scenarios = validator("scenario.schema.json")
    for name in ["logical.json", "circuit.json"]:
        responses.validate(load(name))
    for name in ["independent_factors.json", "factor_edge.json", "shared_cause.json", "confounded_factor.json", "mediator.json", "mediator_collider.json"]:
        graphs.validate(load(name))
    for name in ["and_scenario.json", "logical_scenario.json"]:
        scenarios.validate(load(name))


@pytest.mark.skipif("COACT_BIN" not in os.environ, reason="CLI binary not provided")
def test_cli_reports_match_report_schema(tmp_path):
    reports = validator("report.schema.json")
    binary = os.environ["COACT_BIN"]
    csv = tmp_path / "and.csv"
    runs = [
        ["mech", "classify", str(DATA / "circuit.json"), "--alpha", ">1", "--beta", ">0"],
        ["adag", "check", str(DATA / "shared_cause.json"), "--C", "Z", "--U", "U"],
        ["simulate", str(DATA / "and_scenario.json"), "-n", "2000", "--seed", "4", "--out", str(csv)],
        ["test", str(csv), "--a-var", "A", "--b-var", "B", "--alpha", ">0", "--beta", ">0"],
        ["test", str(csv), "--a-var", "A", "--b-var", "B", "--alpha", ">0", "--beta", ">0",
         "--model", "riskreg"],
        ["soundness", "--trials", "50", "--seed", "2"],
        ["test", str(csv), "--a-var", "A", "--b-var", "B", "--alpha", ">0", "--beta", ">0",
         "--model", "oddsreg"],
        ["adag", "check", str(DATA / "factor_edge.json"), "--C", "Q"],
    ]
    for args in runs:
        proc = subprocess.run([binary, *args, "--json"], capture_output=True, text=True)
        assert proc.returncode in (0, 1, 2), proc.stderr
        reports.validate(json.loads(proc.stdout))
