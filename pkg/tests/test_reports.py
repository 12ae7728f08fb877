import json
from pathlib import Path

import pytest

from app import __version__
from app.cli import EXIT_BAD_INPUT, EXIT_OK, main
from app.services import PremError
from app.services.reports import (
    CRITERIA,
    REFERENCES,
    cmd_braid,
    cmd_foldmap,
    cmd_theta,
    cmd_verdict,
    digest_inputs,
    parse_permutation,
    selftest,
    summary_lines,
)
from app.services.towers import TORSION_REF


FIXTURES = Path(__file__).resolve().parent.parent / "fixtures"


def load(name):
    return json.loads((FIXTURES / name).read_text())


def test_braid_report():
    report = cmd_braid([1, 2, -1, -2], level=3)
    assert report.command == "braid"
    assert report.version == __version__
    assert report.results["braid"] == {"strands": 3, "word": [1, 2, -1, -2]}
    assert report.results["permutation"]["order"] == 3
    assert report.results["trivial"]["trivial"] is False
    assert report.results["humphries"]["verdict"] == "INFINITE_ORDER"
    assert "pure braid" in report.errors["linking"]
    assert report.results["level"]["kernel_degree"] == 2
    assert report.notes


def test_braid_report_selected_analyses():
    report = cmd_braid([1, 1], strands=3, analyses=["linking"])
    assert set(report.results) == {"braid", "linking"}
    assert report.results["linking"] == [[0, 1, 0], [1, 0, 0], [0, 0, 0]]
    assert not report.notes


def test_braid_report_rejects_bad_caps():
    with pytest.raises(ValueError, match="cap"):
        cmd_braid([1], cap=99)
    report = cmd_braid([1, 1], level=1)
    assert "level" in report.errors


def test_foldmap_report_on_standard_model():
    report = cmd_foldmap(load("standard2.json"), load("standard2_loops.json"))
    assert report.results["arrangement"]["base_fiber"] == ["A", "C"]
    first, trivial, _ = report.results["loops"]
    assert first["monodromy"]["cycles"] == "(1 2)"
    assert first["winding"]["winding"] == 1
    assert first["winding"]["simplicial_class"] == [1]
    assert trivial["monodromy"]["cycles"] == "()"
    assert trivial["alternation"]["verdict"] == "INCONCLUSIVE"


def test_foldmap_report_on_two_component():
    report = cmd_foldmap(load("two_component.json"), [load("two_component_loop.json")], ["alternation", "pullback"])
    loop = report.results["loops"][0]
    assert loop["alternation"]["verdict"] == "OBSTRUCTED"
    assert loop["alternation"]["criterion"] == CRITERIA["alternation"]
    assert len(loop["pullback"]["closed_components"]) == 2
    assert "foldmap: loop 0 alternation -> OBSTRUCTED" in summary_lines(report)


def test_foldmap_report_collects_loop_errors():
    bad_loop = {"base": "ext", "crossings": [{"circle": 1, "direction": "in"}]}
    report = cmd_foldmap(load("three_component.json"), [bad_loop], ["monodromy"])
    assert "loops[0].loop" in report.errors


def test_winding_of_crossing_word_loop_is_an_error():
    report = cmd_foldmap(load("three_component.json"), load("three_component_loops.json")[:1], ["winding"])
    assert "winding" not in report.results["loops"][0]
    assert "region word" in report.errors["loops[0].winding"]


def test_every_verdict_carries_a_reference():
    braid = cmd_braid([1, 2, -1, -2])
    for name in ("trivial", "hb_trivial", "humphries"):
        assert braid.results[name]["paper_ref"] == REFERENCES[name]
        assert braid.results[name]["criterion"] == CRITERIA[name]
    loops = cmd_foldmap(load("standard2.json"), load("standard2_loops.json")).results["loops"]
    for name in ("monodromy", "winding"):
        assert loops[0][name]["paper_ref"] == REFERENCES[name]
    two = cmd_foldmap(load("two_component.json"), [load("two_component_loop.json")], ["alternation"])
    assert two.results["loops"][0]["alternation"]["paper_ref"] == REFERENCES["alternation"]
    assert cmd_theta(load("theta_paired.json")).results["theta"]["paper_ref"] == REFERENCES["theta"]
    assert cmd_verdict(3, "(1 2 3 4 5 6 7)").results["verdict"]["paper_ref"] == TORSION_REF


def test_theta_reports():
    zero = cmd_theta(load("theta_paired.json"))
    assert zero.results["theta"]["zero"] is True
    assert zero.results["theta"]["survivors"] == []
    survivor = cmd_theta(load("theta_survivor.json"))
    assert survivor.results["theta"]["zero"] is False
    assert sorted(s["representative"] for s in survivor.results["theta"]["survivors"]) == [[], [2]]
    assert survivor.results["theta"]["search_bound"] is None


def test_verdict_reports():
    report = cmd_verdict(2, "(1 2)")
    assert report.results["verdict"]["verdict"] == "NOT_2PREM"
    assert report.results["verdict"]["paper_ref"] == TORSION_REF
    assert any(CRITERIA["degree_scope"] in note and REFERENCES["degree_scope"] in note for note in report.notes)
    seven = cmd_verdict(3, "(1 2 3 4 5 6 7)")
    assert seven.results["verdict"]["verdict"] == "NO_CONCLUSION"
    assert not seven.notes
    with pytest.raises(PremError):
        cmd_verdict(1, [2, 1])


def test_parse_permutation_formats():
    assert parse_permutation("[2, 1, 3]").to_json() == [2, 1, 3]
    assert parse_permutation("(1 3)", degree=4).to_json() == [3, 2, 1, 4]
    assert parse_permutation([1, 2]).is_identity()
    with pytest.raises(PremError):
        parse_permutation("[2, 2]")


def test_reports_are_deterministic():
    first = cmd_foldmap(load("three_component.json"), load("three_component_loops.json")).render()
    second = cmd_foldmap(load("three_component.json"), load("three_component_loops.json")).render()
    assert first == second
    assert json.loads(first)["command"] == "foldmap"
    assert digest_inputs({"a": 1, "b": 2}) == digest_inputs({"b": 2, "a": 1})


def test_selftest_passes():
    report = selftest()
    assert report.results["passed"] is True
    assert not report.errors


# ============ command line ============

def test_cli_verdict(capsys):
    assert main(["verdict", "2", "(1 2)"]) == EXIT_OK
    out, err = capsys.readouterr()
    assert json.loads(out)["results"]["verdict"]["verdict"] == "NOT_2PREM"
    assert "verdict: verdict -> NOT_2PREM" in err


def test_cli_braid_and_theta(capsys):
    assert main(["braid", "[1,2,-1,-2]", "--permutation", "--humphries"]) == EXIT_OK
    out, _ = capsys.readouterr()
    assert set(json.loads(out)["results"]) == {"braid", "permutation", "humphries"}
    assert main(["theta", str(FIXTURES / "theta_paired.json")]) == EXIT_OK
    out, err = capsys.readouterr()
    assert json.loads(out)["results"]["theta"]["zero"] is True
    assert "theta -> zero" in err


def test_cli_foldmap(capsys):
    argv = ["foldmap", str(FIXTURES / "standard2.json"), str(FIXTURES / "standard2_loops.json"), "--monodromy"]
    assert main(argv) == EXIT_OK
    out, err = capsys.readouterr()
    loops = json.loads(out)["results"]["loops"]
    assert [loop["monodromy"]["cycles"] for loop in loops[:2]] == ["(1 2)", "()"]
    assert "foldmap: loop 0 monodromy -> (1 2)" in err


@pytest.mark.parametrize("argv", [
    ["theta", "{not json"],
    ["verdict", "1", "[2,1]"],
    ["braid", "[1,0]"],
    ["foldmap", "{\"kind\": \"SQUARE\"}", "[]"],
])
def test_cli_bad_input_exits_2(argv, capsys):
    assert main(argv) == EXIT_BAD_INPUT
    _, err = capsys.readouterr()
    assert f"premcheck {argv[0]}:" in err
