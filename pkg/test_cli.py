import json
from fractions import Fraction
from pathlib import Path

import pytest

import main as cli
from main import main
from systems import load_coalgebra

FIXTURES = Path(__file__).parent / "fixtures"


def fixture(name):
    return str(FIXTURES / f"{name}.json")


@pytest.fixture(autouse=True)
def no_cache(monkeypatch):
    monkeypatch.setenv("QHM_CACHE_ENABLED", "false")


def run(capsys, *argv):
    code = main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


def test_bd_json(capsys):
    code, out, _ = run(capsys, "bd", "--in", fixture("metric_ts"))
    assert code == 0
    document = json.loads(out)
    assert document["provenance"] == "bd"
    assert document["states"] == ["p", "q", "r", "s"]
    assert document["matrix"][0][2] == "3/4"


def test_bd_on_fig1_template_uses_epsilon(capsys):
    code, out, _ = run(capsys, "bd", "--in", fixture("fig1"), "--epsilon", "1/4")
    assert code == 0
    assert json.loads(out)["matrix"][0][1] == "1/4"


def test_bd_csv_to_file(capsys, tmp_path):
    target = tmp_path / "bd.csv"
    code, out, _ = run(capsys, "bd", "--in", fixture("signed_weighted"), "--format", "csv", "--out", str(target))
    assert code == 0
    assert out == ""
    lines = target.read_text().splitlines()
    assert lines[0] == ",s,t,u"
    assert lines[2] == "t,1/4,0,1/32"


def test_ld_lists_basis(capsys):
    code, out, _ = run(capsys, "ld", "--in", fixture("lts_small"), "--depth", "1")
    assert code == 0
    result = json.loads(out)
    assert result["basis"][0] == "(top)"
    assert "(m dia a (top))" in result["basis"]
    assert result["matrix"]["provenance"] == "ld(1)"


def test_distinguish(capsys):
    code, out, _ = run(capsys, "distinguish", "--in", fixture("lts_small"), "--pair", "p0", "q0", "--depth", "3")
    assert code == 0
    result = json.loads(out)
    assert result["gap"] == "bot"
    assert result["states"] == ["p0", "q0"]


def test_eval(capsys):
    code, out, _ = run(capsys, "eval", "--in", fixture("paraconsistent"), "--formula", "(m box_sup (top))")
    assert code == 0
    result = json.loads(out)
    assert result["values"] == {"x": "top", "y": "top", "z": "top", "w": "top"}
    assert result["nonexpansive"] is True


def test_bisim(capsys):
    code, out, _ = run(capsys, "bisim", "--in", fixture("lts_small"))
    assert code == 0
    assert json.loads(out)["classes"][2] == ["p2", "p3", "q3", "q4"]


def test_validate_named_quantale(capsys):
    code, out, _ = run(capsys, "validate", "--quantale", "diamond4")
    assert code == 0
    result = json.loads(out)
    assert result["passed"]
    assert result["k_decomposition"]["holds"]


def test_validate_reports_invalid_coalgebra(capsys, tmp_path):
    raw = json.loads(Path(fixture("signed_weighted")).read_text())
    raw["transitions"]["s"] = {"a": {"u": "3/4", "t": "1/2"}}
    path = tmp_path / "bad.json"
    path.write_text(json.dumps(raw))
    code, out, _ = run(capsys, "validate", "--in", str(path))
    assert code == 1
    assert json.loads(out)["violations"][0]["law"] == "weights.subset_sums"


def test_gen_output_loads(capsys):
    code, out, _ = run(capsys, "gen", "--functor", "dist_maybe", "--states", "3", "--seed", "4")
    assert code == 0
    assert load_coalgebra(json.loads(out)).size == 3


def test_check_fig1(capsys):
    code, out, _ = run(capsys, "check", "fig1")
    assert code == 0
    assert json.loads(out)["suite"] == "fig1"


@pytest.mark.parametrize("argv", [
    ["bd"],
    ["distinguish", "--in", fixture("lts_small")],
    ["check"],
    ["gen", "--functor", "lts", "--states", "0"],
    ["bd", "--in", fixture("lts_small"), "--eps", "abc"],
    ["bd", "--in", fixture("lts_small"), "--grid", "2/5"],
    ["ld", "--in", fixture("lts_small"), "--formula-grid", "3/4"],
])
def test_configuration_errors_exit_2(capsys, argv):
    code, _, err = run(capsys, *argv)
    assert code == 2
    assert json.loads(err.strip().splitlines()[-1])["error"] == "ConfigError"


def test_domain_errors_exit_1(capsys, tmp_path):
    code, _, err = run(capsys, "bd", "--in", str(tmp_path / "missing.json"))
    assert code == 1
    assert json.loads(err.strip().splitlines()[-1])["error"] == "InputError"

    code, _, err = run(capsys, "eval", "--in", fixture("lts_small"), "--formula", "(m dia (top))")
    assert code == 1

    code, _, err = run(capsys, "bisim", "--in", fixture("metric_ts"))
    assert code == 1
    assert json.loads(err.strip().splitlines()[-1])["error"] == "UnsupportedOperation"


def test_formula_grid_reaches_ld_and_distinguish(capsys, monkeypatch):
    seen = []

    def spy(real):
        def wrapped(*args, **kwargs):
            seen.append(kwargs["grid"])
            return real(*args, **kwargs)
        return wrapped

    monkeypatch.setattr(cli, "logical_distance", spy(cli.logical_distance))
    monkeypatch.setattr(cli, "distinguishing_formula", spy(cli.distinguishing_formula))
    code, _, _ = run(capsys, "ld", "--in", fixture("fig1"), "--depth", "1", "--formula-grid", "1/4")
    assert code == 0
    code, _, _ = run(capsys, "distinguish", "--in", fixture("fig1"), "--pair", "root_left", "root_right",
                     "--depth", "1", "--formula-grid", "1/2")
    assert code == 0
    assert seen == [Fraction(1, 4), Fraction(1, 2)]


def test_formula_grid_defaults_to_eighths(capsys, monkeypatch):
    seen = []
    real = cli.logical_distance
    monkeypatch.setattr(cli, "logical_distance", lambda *a, **kw: seen.append(kw["grid"]) or real(*a, **kw))
    run(capsys, "ld", "--in", fixture("lts_small"), "--depth", "0")
    assert seen == [Fraction(1, 8)]
