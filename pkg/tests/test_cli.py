import json
import subprocess
import sys

import pytest
from conftest import FIXTURE, GOLDEN

from unclone import cli

PAIR = ["--a", "Report.adults", "--b", "Report.children"]
LITERAL = "class C {\n    int f(int x) {\n        return x * 3;\n    }\n\n    int g(int x) {\n        return x * 4;\n    }\n}\n"


def call(capsys, *argv):
    code = cli.main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_parse_prints_ast(capsys):
    code, out, _ = call(capsys, "parse", str(FIXTURE))
    assert code == 0
    assert json.loads(out) == json.loads((GOLDEN / "report_ast.json").read_text())


def test_pdg_dot_and_json(capsys):
    code, out, _ = call(capsys, "pdg", str(FIXTURE), "--method", "Report.adults")
    assert code == 0 and out == (GOLDEN / "adults.dot").read_text()
    code, out, _ = call(capsys, "pdg", str(FIXTURE), "--method", "Report.adults", "--json")
    assert json.loads(out)["method"] == "Report.adults"


def test_unify_report(capsys):
    code, out, _ = call(capsys, "unify", str(FIXTURE), *PAIR)
    assert code == 0
    assert json.loads(out)["renames"]["children"] == "adults"


def test_plan_text_and_json(capsys):
    code, out, _ = call(capsys, "plan", str(FIXTURE), *PAIR)
    assert code == 0 and "cost [2, 0, 2, 8]" in out
    code, out, _ = call(capsys, "plan", str(FIXTURE), *PAIR, "--json")
    d = json.loads(out)
    assert d["cost"] == [2, 0, 2, 8] and d["listing"].startswith("plan for")


def test_apply_verify_and_trace(capsys, tmp_path):
    out_file = tmp_path / "out.minij"
    trace = tmp_path / "steps"
    code, _, err = call(capsys, "apply", str(FIXTURE), *PAIR, "-o", str(out_file), "--verify",
                        "--emit-trace", str(trace), "--seed", "42")
    assert code == 0, err
    assert out_file.read_text() == (GOLDEN / "report_refactored.minij").read_text()
    assert sorted(x.name for x in trace.iterdir())[0] == "00-original.minij"
    assert len(list(trace.iterdir())) == 9


def test_apply_to_stdout(capsys):
    code, out, _ = call(capsys, "apply", str(FIXTURE), *PAIR, "-o", "-")
    assert code == 0 and out == (GOLDEN / "report_refactored.minij").read_text()


def test_syntax_error_exit_code(capsys, tmp_path):
    bad = tmp_path / "bad.minij"
    bad.write_text("class A { int f( { }")
    code, _, err = call(capsys, "parse", str(bad))
    assert code == 1 and "1:18" in err


def test_missing_file_and_bad_reference(capsys, tmp_path):
    assert call(capsys, "parse", str(tmp_path / "none.minij"))[0] == 1
    assert call(capsys, "pdg", str(FIXTURE), "--method", "adults")[0] == 1
    assert call(capsys, "pdg", str(FIXTURE), "--method", "Report.nothing")[0] == 1


def test_not_removable_exit_code(capsys, tmp_path):
    src = tmp_path / "lit.minij"
    src.write_text(LITERAL)
    pair = ["--a", "C.f", "--b", "C.g"]
    assert call(capsys, "plan", str(src), *pair)[0] == 0
    code, out, _ = call(capsys, "plan", str(src), *pair, "--refactorings", "rename")
    assert code == 3 and "not removable" in out
    code, _, err = call(capsys, "apply", str(src), *pair, "--refactorings", "rename", "-o", "-")
    assert code == 3 and "not removable" in err


def test_unknown_refactoring_and_bad_budget(capsys):
    assert call(capsys, "plan", str(FIXTURE), *PAIR, "--refactorings", "inline")[0] == 1
    assert call(capsys, "plan", str(FIXTURE), *PAIR, "--budget", "0")[0] == 1


def test_verify_failure_exit_code(capsys, monkeypatch, tmp_path):
    from unclone.interp import Verdict

    monkeypatch.setattr(cli, "equivalent", lambda *a, **k: Verdict(False, 1, {"args": []}))
    code, _, err = call(capsys, "apply", str(FIXTURE), *PAIR, "-o", str(tmp_path / "x.minij"), "--verify")
    assert code == 4 and "verification failed" in err


def test_precondition_exit_code(capsys, monkeypatch, tmp_path):
    from unclone.errors import PreconditionViolated

    def broken(p, plan):
        raise PreconditionViolated(plan.steps[0], "stale plan", 0)
    monkeypatch.setattr(cli, "apply_plan", broken)
    code, _, err = call(capsys, "apply", str(FIXTURE), *PAIR, "-o", str(tmp_path / "x.minij"))
    assert code == 2 and "stale plan" in err


def test_run_prints_trace(capsys):
    code, out, _ = call(capsys, "run", str(FIXTURE), "--entry", "Report.adults",
                        "--args", '[[{"age": 10}, {"age": 20}, {"age": 18}]]')
    assert code == 0
    d = json.loads(out)
    assert d["outputs"] == ["filtering"]
    assert d["result"] == "[Person{age=20}, Person{age=18}]"


def test_seed_from_environment(monkeypatch):
    monkeypatch.setenv("UNCLONE_SEED", "17")
    args = cli.build_parser().parse_args(["plan", str(FIXTURE), *PAIR])
    assert cli._config(args).seed == 17


def test_config_validation():
    with pytest.raises(ValueError):
        cli.Config(budget=0)
    with pytest.raises(ValueError):
        cli.Config(trials=0)


def test_console_script_module():
    res = subprocess.run([sys.executable, "-m", "unclone.cli", "--version"], capture_output=True, text=True)
    assert res.returncode == 0 and "minij" in res.stdout
