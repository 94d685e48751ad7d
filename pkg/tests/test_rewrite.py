import os

import pytest
from conftest import ADULTS, CHILDREN, GOLDEN

from unclone.errors import PreconditionViolated
from unclone.interp import equivalent
from unclone.plan import synthesize_plan
from unclone.rewrite import apply_plan, apply_step, validate, write_trace
from unclone.steps import (ExtractLambda, ExtractMethod, GeneralizeType, IntroduceParameter,
                           IntroduceTypeParameter, MoveStatement, PullUpMethod, RedirectCall, RenameLocal,
                           ReorderParameters)
from unclone.syntax import ast as A
from unclone.syntax import parse_program, print_canonical
from unclone.syntax.ast import MethodRef

PERSON = A.TypeRef("Person")


def body_text(p, ref):
    m = p.method(ref)
    return [line.strip() for line in print_canonical(A.Program((A.ClassDecl("X", None, (), (m,)),))).splitlines()
            if line.startswith("        ")]


def test_rename_local(program):
    out = apply_step(program, RenameLocal(CHILDREN, "children", "adults"))
    text = "\n".join(body_text(out, CHILDREN))
    assert "children" not in text and "adults.add(p);" in text


def test_rename_preconditions(program):
    with pytest.raises(PreconditionViolated, match="not a local"):
        apply_step(program, RenameLocal(CHILDREN, "nobody", "x"))
    with pytest.raises(PreconditionViolated, match="already names"):
        apply_step(program, RenameLocal(ADULTS, "adults", "persons"))


def test_move_statement(program):
    out = apply_step(program, MoveStatement(ADULTS, 3, 0))
    assert body_text(out, ADULTS)[0] == 'print("filtering");'
    with pytest.raises(PreconditionViolated):
        apply_step(program, MoveStatement(ADULTS, 9, 0))


def test_extract_lambda_from_predicate(program):
    step = ExtractLambda(ADULTS, 5, "accept", A.fun_of([PERSON], A.BOOLEAN), (A.Param(PERSON, "p"),), "decl",
                         "isAdult", A.BOOLEAN)
    out = apply_step(program, step)
    lines = body_text(out, ADULTS)
    assert lines[0] == "Fun<Person, boolean> accept = (Person p) -> p.getAge() >= 18;"
    assert "boolean isAdult = accept.apply(p);" in lines
    assert equivalent(program, out, ADULTS, n=40, seed=5).equivalent


def test_extract_lambda_rejects_unextractable(program):
    step = ExtractLambda(ADULTS, 9, "h", A.fun_of([], A.BOOLEAN), (), "effect")
    with pytest.raises(PreconditionViolated, match="return"):
        apply_step(program, step)


SMALL = """class Base {
}

class Left extends Base {
    int f(int a, int b) {
        int k = a + 1;
        print(k - b);
        return k;
    }
}
"""


@pytest.fixture
def small():
    return parse_program(SMALL)


F = MethodRef("Left", "f")


def test_introduce_parameter(small):
    out = apply_step(small, IntroduceParameter(F, "p0", A.INT, 1, ((6, 0),)))
    assert body_text(out, F)[:2] == ["int p0 = 1;", "int k = a + p0;"]
    assert equivalent(small, out, F, n=20).equivalent


def test_introduce_parameter_checks_the_literal(small):
    with pytest.raises(PreconditionViolated):
        apply_step(small, IntroduceParameter(F, "p0", A.INT, 7, ((6, 0),)))


def test_reorder_parameters(small):
    out = apply_step(small, ReorderParameters(F, (2, 1)))
    assert [q.name for q in out.method(F).params] == ["b", "a"]
    assert equivalent(small, out, F, n=20, permutation=(2, 1)).equivalent


def test_generalize_and_type_parameter():
    src = "class C {\n    int f(int a) {\n        int k = a;\n        return k;\n    }\n}\n"
    p = parse_program(src)
    ref = MethodRef("C", "f")
    out = apply_step(p, IntroduceTypeParameter(ref, "T0"))
    assert out.method(ref).type_params == ("T0",)
    with pytest.raises(PreconditionViolated):
        apply_step(p, GeneralizeType(ref, 3, A.BOOLEAN, A.INT))


def test_extract_method_pull_up_and_redirect(small):
    params = (A.Param(A.INT, "a"), A.Param(A.INT, "b"))
    steps = [ExtractMethod("Left", "fShared", params, F, 6, 8, A.INT),
             PullUpMethod("Left", "Base", "fShared"),
             RedirectCall(F, "Base", "fShared", ("a", "b"), 6, 8)]
    res = apply_plan(small, steps)
    assert body_text(res.program, F) == ["return fShared(a, b);"]
    assert res.program.cls("Base").method("fShared") is not None
    assert equivalent(small, res.program, F, n=20).equivalent


def test_redirect_requires_identical_span(small):
    params = (A.Param(A.INT, "a"), A.Param(A.INT, "b"))
    steps = [ExtractMethod("Left", "fShared", params, F, 6, 8, A.INT),
             RedirectCall(F, "Left", "fShared", ("a", "b"), 7, 8)]
    with pytest.raises(PreconditionViolated, match="differ") as info:
        apply_plan(small, steps)
    assert info.value.index == 1


def test_redirect_rebinds_a_returned_variable(small):
    params = (A.Param(A.INT, "a"), A.Param(A.INT, "b"))
    steps = [ExtractMethod("Left", "fShared", params, F, 6, 7, A.INT, "k"),
             RedirectCall(F, "Left", "fShared", ("a", "b"), 6, 7)]
    res = apply_plan(small, steps)
    assert body_text(res.program, F) == ["int k = fShared(a, b);", "return k;"]
    assert equivalent(small, res.program, F, n=20).equivalent


def test_pull_up_needs_a_superclass(small):
    params = (A.Param(A.INT, "a"), A.Param(A.INT, "b"))
    steps = [ExtractMethod("Left", "g", params, F, 6, 8, A.INT), PullUpMethod("Left", "Left", "g")]
    with pytest.raises(PreconditionViolated, match="superclass"):
        apply_plan(small, steps)


def test_failed_step_leaves_input_untouched(program):
    before = print_canonical(program)
    with pytest.raises(PreconditionViolated):
        apply_step(program, MoveStatement(ADULTS, 9, 0))
    assert print_canonical(program) == before


def test_validate_rejects_unbound_programs(program):
    m = program.method(ADULTS)
    broken = program.replace_method(ADULTS, A.MethodDecl(m.return_type, m.name, m.params,
                                                         (A.Return(A.Var("ghost"), line=2),), line=1))
    with pytest.raises(PreconditionViolated, match="not well-formed"):
        validate(broken)


def test_fixture_plan_produces_golden(program):
    plan = synthesize_plan(program, ADULTS, CHILDREN)
    res = apply_plan(program, plan)
    assert print_canonical(res.program) == (GOLDEN / "report_refactored.minij").read_text()
    assert len(res.trace) == len(plan.steps) + 1


def test_intermediate_state_after_lambdas(program):
    plan = synthesize_plan(program, ADULTS, CHILDREN)
    res = apply_plan(program, plan)
    kinds = [None if s is None else s.kind for s, _ in res.trace]
    after = res.trace[max(k for k, kd in enumerate(kinds) if kd == "extract-lambda")][1]
    q = parse_program(after)
    a = "\n".join(body_text(q, ADULTS))
    c = "\n".join(body_text(q, CHILDREN))
    # both clones now differ only in their hook declarations
    assert a.split("\n", 1)[1].replace('print("filtering");\n', "") == c.split("\n", 1)[1]


def test_write_trace(tmp_path, program):
    plan = synthesize_plan(program, ADULTS, CHILDREN)
    paths = write_trace(apply_plan(program, plan), str(tmp_path))
    names = [os.path.basename(x) for x in paths]
    assert names[0] == "00-original.minij"
    assert names[1] == "01-rename-local.minij"
    assert names[-1] == f"{len(plan.steps):02d}-redirect-call.minij"
