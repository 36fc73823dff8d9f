import json
from fractions import Fraction

import pytest
from hypothesis import given, strategies as st

from dtasep.cli import main
from dtasep.report import (ConfigError, ExperimentConfig, RunReport, Tally, compare, decode_scalar, dumps, encode,
                           parse_query)
from dtasep.verify import EXPECTED_COUNTS, MANIFEST, run_suite

BASE = {"y": [1, -1], "p": ["1/4", "1/3"], "q": ["3/2", "2"], "t": 2}


def run_cli(capsys, *args):
    code = main(list(args))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_compare_examples():
    r = compare(Fraction(1, 3), Fraction(2, 6))
    assert r.passed and r.tol is None and r.diff == 0
    r = compare(0.1 + 0.2, 0.3, 1e-12)
    assert r.passed and 0 < r.diff < 1e-15
    r = compare(Fraction(1, 3), Fraction(1, 4))
    assert not r.passed and r.diff == Fraction(1, 12)
    assert compare(1e6 + 1e-7, 1e6, 1e-12, relative=True).passed
    assert not compare(1e6 + 1e-3, 1e6, 1e-12, relative=True).passed


def test_tally_keeps_worst_and_first_failure():
    t = Tally("demo", tol=1e-9)
    t.add(1.0, 1.0)
    t.add(1.0, 1.0 + 1e-10)
    res = t.result()
    assert res.passed and res.cases == 2 and res.diff > 0
    t.add(2.0, 1.0, "bad spot")
    res = t.result()
    assert not res.passed and "bad spot" in res.detail and res.diff == 1.0
    assert Tally("empty").result().passed is False
    assert res.line().startswith("FAIL  demo")


@given(st.fractions(), st.integers(), st.floats(allow_nan=False, allow_infinity=False))
def test_scalar_encoding_round_trip(f, i, x):
    for v in (f, i, x):
        enc = encode(v)
        assert decode_scalar(json.loads(json.dumps(enc))) == v


def test_encoding_is_canonical():
    text = dumps({"b": Fraction(-3, 7), "a": [1, 2.5]})
    assert text == dumps(json.loads(text))
    assert text.index('"a"') < text.index('"b"')
    assert '"num": "-3"' in text and '"den": "7"' in text


def test_config_parsing():
    cfg = ExperimentConfig.from_mapping({**BASE, "query": "1:2, 2:0", "seed": 5})
    assert cfg.N == 2 and cfg.query == ((1, 2), (2, 0)) and cfg.seed == 5
    assert cfg.p == (Fraction(1, 4), Fraction(1, 3))
    assert cfg.regime()["theorem_regime"]
    assert parse_query([[1, 2], {"k": 2, "s": 0}]) == ((1, 2), (2, 0))
    assert ExperimentConfig.from_mapping(json.loads(json.dumps({**BASE, **{"p": cfg.to_json()["p"]}}))).p == cfg.p


@pytest.mark.parametrize("change, field", [
    ({"colour": 1}, "colour"),
    ({"y": [1, 1]}, "y"),
    ({"query": "2:0,1:3"}, "query"),
    ({"query": "3:0"}, "query"),
    ({"query": "1-2"}, "query"),
    ({"seed": -1}, "seed"),
    ({"seed": 2 ** 64}, "seed"),
    ({"q": None}, "q"),
    ({"q": ["2"]}, "q"),
    ({"p": ["1/4", "x"]}, "p"),
    ({"N": 3}, "N"),
    ({"backend": "decimal"}, "backend"),
    ({"route": "shortcut"}, "route"),
])
def test_config_errors(change, field):
    data = {**BASE, **change}
    if change.get("q", 0) is None:
        del data["q"]
    with pytest.raises(ConfigError) as info:
        ExperimentConfig.from_mapping(data)
    assert info.value.field == field


def test_cli_reports_config_errors(capsys):
    code, out, _ = run_cli(capsys, "fredholm", "--y", "1,1", "--q", "2,3")
    assert code == 2
    err = json.loads(out)["error"]
    assert err["type"] == "config" and err["field"] == "y"


def test_cli_rejects_unknown_config_file(capsys, tmp_path):
    code, out, _ = run_cli(capsys, "enumerate", "--config", str(tmp_path / "missing.json"))
    assert code == 2 and json.loads(out)["error"]["field"] == "config"


def test_cli_single_particle(capsys):
    code, out, _ = run_cli(capsys, "fredholm", "--y", "4", "--p", "1/4", "--q", "3/2", "--t", "1",
                           "--query", "1:5", "--oracle")
    assert code == 0
    rep = json.loads(out)
    assert decode_scalar(rep["results"]["value"]) == Fraction(3, 11)
    assert rep["ok"] and {c["name"] for c in rep["checks"]} >= {"fredholm.window_stable"}


def test_cli_empty_query_is_the_sure_event(capsys):
    code, out, _ = run_cli(capsys, "fredholm", "--y", "1,-1", "--p", "1/4", "--q", "3/2,2", "--t", "1")
    assert code == 0 and decode_scalar(json.loads(out)["results"]["value"]) == 1


def test_cli_drsk(capsys, tmp_path):
    code, out, _ = run_cli(capsys, "drsk", "--w", "1011/0110/1101")
    assert code == 0
    res = json.loads(out)["results"]
    assert res["P"] == [[1, 1, 3], [2, 2, 4], [3], [4]]
    assert res["Q"] == [[1, 2, 3], [1, 2, 3], [1], [3]]
    path = tmp_path / "w.json"
    path.write_text(json.dumps([[1, 0, 1, 1], [0, 1, 1, 0], [1, 1, 0, 1]]))
    code, out2, _ = run_cli(capsys, "drsk", "--matrix", str(path))
    assert code == 0 and json.loads(out2)["results"]["P"] == res["P"]


def test_cli_enumerate_files(capsys, tmp_path):
    csv_path, out_path = tmp_path / "law.csv", tmp_path / "rep.json"
    code, out, _ = run_cli(capsys, "enumerate", "--y", "1,-1", "--p", "1/4,1/3", "--q", "3/2,2", "--t", "2",
                           "--csv", str(csv_path), "--out", str(out_path))
    assert code == 0
    lines = csv_path.read_text().splitlines()
    assert lines[0] == "Y1,Y2,probability" and "2,0,98/495" in lines and len(lines) == 9
    assert json.loads(out_path.read_text())["ok"]


def test_cli_config_file_with_override(capsys, tmp_path):
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps({**BASE, "query": "1:2"}))
    code, out, _ = run_cli(capsys, "fredholm", "--config", str(path), "--query", "2:0")
    rep = json.loads(out)
    assert code == 0 and rep["config"]["query"] == [[2, 0]]


def test_cli_reports_are_deterministic(capsys):
    args = ["simulate", "--y", "1,-1", "--p", "1/4,1/3", "--q", "3/2,2", "--t", "2", "--seed", "3",
            "--replicas", "3000", "--query", "1:2"]
    first = run_cli(capsys, *args, "--threads", "1")
    second = run_cli(capsys, *args, "--threads", "4")
    assert first[0] == 0 and first == second
    assert "wall_seconds" not in first[1]
    _, timed, _ = run_cli(capsys, *args, "--timings")
    assert "wall_seconds" in timed


def test_cli_verify_subset(capsys):
    code, out, err = run_cli(capsys, "verify", "--level", "quick", "--only", "dpp.")
    assert code == 0
    assert err.count("PASS") == EXPECTED_COUNTS["dpp"] and "FAIL" not in err


def test_failed_check_marks_the_report():
    rep = RunReport("demo", checks=[compare(Fraction(1), Fraction(2))])
    assert not rep.ok and json.loads(rep.dumps())["ok"] is False


def test_manifest():
    assert len(MANIFEST) == sum(EXPECTED_COUNTS.values()) == 30
    results = run_suite("quick", only="harness")
    assert [r.name for r in results] == ["harness.determinism", "harness.manifest_coverage"]
    assert all(r.passed for r in results)
    with pytest.raises(ValueError):
        run_suite("medium")
