import json

import pytest
from conftest import ADULTS, CHILDREN, FIXTURE

from unclone.interp import equivalent
from unclone.plan import (TEMPLATE_NOTE, ConsolidationTarget, FailureReport, Plan, advisories, choose_target,
                          synthesize_plan)
from unclone.rewrite import apply_plan
from unclone.syntax import parse_program
from unclone.syntax.ast import MethodRef
from unclone.syntax.binding import check_program
from unclone.unify import RefactoringSet


def kinds(plan):
    return [s.kind for s in plan.steps]


def test_fixture_plan_shape(program):
    plan = synthesize_plan(program, ADULTS, CHILDREN)
    assert isinstance(plan, Plan)
    assert kinds(plan) == ["rename-local", "rename-local", "move-statement", "extract-lambda", "extract-lambda",
                           "extract-method", "redirect-call", "redirect-call"]
    move = plan.steps[2]
    assert (move.node, move.new_index) == (3, 0)
    assert plan.target == ConsolidationTarget("same-class", "Report")
    assert plan.cost == (2, 0, 2, 8)
    assert plan.advisories == []


def test_fixture_plan_listing(program):
    listing = synthesize_plan(program, ADULTS, CHILDREN).listing()
    assert listing.splitlines()[0] == \
        "plan for Report.adults and Report.children into same-class(Report), cost [2, 0, 2, 8]"
    assert " 3. move statement 3 to position 0 in Report.adults" in listing
    assert "extract method List<Person> Report.adultsShared(List<Person> persons, " \
           "Fun<Person, boolean> accept)" in listing


def test_plan_json(program):
    d = json.loads(synthesize_plan(program, ADULTS, CHILDREN).to_json())
    assert d["cost"] == [2, 0, 2, 8]
    assert [s["kind"] for s in d["steps"]][:2] == ["rename-local", "rename-local"]
    assert [6, 15] in d["pairs"]


def test_plan_is_deterministic(program):
    one = synthesize_plan(program, ADULTS, CHILDREN).to_json()
    two = synthesize_plan(parse_program(FIXTURE.read_text()), ADULTS, CHILDREN).to_json()
    assert one == two


def test_fixture_plan_preserves_behaviour(program):
    plan = synthesize_plan(program, ADULTS, CHILDREN)
    out = apply_plan(program, plan).program
    for ref in (ADULTS, CHILDREN):
        assert equivalent(program, out, ref, n=100, seed=42).equivalent


HIERARCHY = """class Shape {
    int size;
}

class Square extends Shape {
    int area(int k) {
        int s = this.size * k;
        print(s);
        return s * s;
    }
}

class Circle extends Shape {
    int peek(int k) {
        return this.size * k;
    }

    int area(int k) {
        int s = this.size * k;
        print(s);
        return s * s * 3;
    }
}

class Other {
    int size;

    int peek(int k) {
        return this.size * k;
    }

    int area(int k) {
        int s = this.size * k;
        print(s);
        return s * s;
    }
}

class Loose {
    int twice(int k) {
        int s = k + k;
        print(s);
        return s;
    }
}

class Tight {
    int twice(int j) {
        int s = j + j;
        print(s);
        return s;
    }
}
"""


@pytest.fixture
def shapes():
    return parse_program(HIERARCHY)


def test_choose_target(shapes):
    t = check_program(shapes)
    assert choose_target("Square", "Square", t) == ConsolidationTarget("same-class", "Square")
    assert choose_target("Square", "Circle", t) == ConsolidationTarget("common-ancestor", "Shape")
    assert choose_target("Square", "Other", t) == ConsolidationTarget("utility-class", "CloneSupport")
    assert choose_target("Square", "Other", t, "Helpers").cls == "Helpers"


def test_advisories():
    assert advisories(ConsolidationTarget("common-ancestor", "Shape"), [1]) == [TEMPLATE_NOTE]
    assert advisories(ConsolidationTarget("same-class", "C"), [1, 1]) == []
    assert len(advisories(ConsolidationTarget("same-class", "C"), [1, 1, 1])) == 1
    assert len(advisories(ConsolidationTarget("same-class", "C"), [4])) == 1


def test_siblings_form_template_method(shapes):
    sq, ci = MethodRef("Square", "area"), MethodRef("Circle", "area")
    plan = synthesize_plan(shapes, sq, ci)
    assert isinstance(plan, Plan)
    assert "pull-up-method" in kinds(plan)
    assert plan.advisories == [TEMPLATE_NOTE]
    out = apply_plan(shapes, plan).program
    assert out.cls("Shape").method("areaTemplate") is not None
    for ref in (sq, ci):
        assert equivalent(shapes, out, ref, n=50, seed=1).equivalent


def test_utility_class_cannot_use_this(shapes):
    report = synthesize_plan(shapes, MethodRef("Circle", "peek"), MethodRef("Other", "peek"))
    assert isinstance(report, FailureReport)
    assert report.stage == "extraction" and "this" in report.reason


def test_utility_plan_keeps_this_in_the_callers(shapes):
    a, b = MethodRef("Square", "area"), MethodRef("Other", "area")
    plan = synthesize_plan(shapes, a, b)
    out = apply_plan(shapes, plan).program
    shared = out.cls("CloneSupport").methods[0]
    assert "this" not in repr(shared.body)
    for ref in (a, b):
        assert equivalent(shapes, out, ref, n=50).equivalent


def test_utility_class_for_unrelated_clones(shapes):
    a, b = MethodRef("Loose", "twice"), MethodRef("Tight", "twice")
    plan = synthesize_plan(shapes, a, b, utility="Helpers")
    assert plan.target == ConsolidationTarget("utility-class", "Helpers")
    out = apply_plan(shapes, plan).program
    assert out.cls("Helpers") is not None
    for ref in (a, b):
        assert equivalent(shapes, out, ref, n=50).equivalent


LITERALS = """class C {
    int f(int x) {
        int y = x * 3;
        print(y + 1);
        return y;
    }

    int g(int x) {
        int y = x * 4;
        print(y + 1);
        return y;
    }
}
"""


def test_literal_difference_with_and_without_parameters():
    p = parse_program(LITERALS)
    f, g = MethodRef("C", "f"), MethodRef("C", "g")
    plan = synthesize_plan(p, f, g)
    assert "introduce-parameter" in kinds(plan)
    assert plan.cost[1] == 1
    out = apply_plan(p, plan).program
    assert equivalent(p, out, f, n=30).equivalent and equivalent(p, out, g, n=30).equivalent


def test_rename_only_cannot_abstract_a_returned_literal():
    p = parse_program("class C {\n    int f(int x) {\n        return x * 3;\n    }\n\n"
                      "    int g(int x) {\n        return x * 4;\n    }\n}\n")
    assert isinstance(synthesize_plan(p, "C.f", "C.g"), Plan)
    narrow = synthesize_plan(p, "C.f", "C.g", RefactoringSet.only("rename"))
    assert isinstance(narrow, FailureReport)


def test_failure_reports():
    p = parse_program(LITERALS)
    same = synthesize_plan(p, "C.f", "C.f")
    assert isinstance(same, FailureReport) and same.stage == "input"
    q = parse_program("class C {\n    int f(int x) {\n        return x;\n    }\n\n"
                      "    int g() {\n        return 1;\n    }\n}\n")
    sig = synthesize_plan(q, "C.f", "C.g")
    assert isinstance(sig, FailureReport) and sig.stage == "signature"
    assert json.loads(sig.to_json())["failure"] == "signature"
    with pytest.raises(ValueError):
        synthesize_plan(p, "C.f", "C.g", budget=0)


def test_unresolvable_statements_are_listed():
    p = parse_program("class C {\n    void f(int x) {\n        print(x);\n    }\n\n"
                      "    void g(int x) {\n        int y = x;\n    }\n}\n")
    report = synthesize_plan(p, "C.f", "C.g")
    assert isinstance(report, FailureReport)
    assert report.candidates_tried >= 1
    assert "not removable" in report.listing()
