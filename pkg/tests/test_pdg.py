import json
import time

from conftest import ADULTS, GOLDEN
from oracles import control_flow, path_dependences, pdg_dependences

from unclone.pdg import ANTI, CONTROL, DATA, EXIT, THIS, build_cfg, build_pdg, to_dot, to_json
from unclone.syntax import parse_program
from unclone.syntax.ast import MethodRef


def data_edges(g):
    return {(e.src, e.dst, e.var) for e in g.edges_of(DATA)}


def test_fixture_dependences(adults_pdg):
    t0 = time.perf_counter()
    g = adults_pdg
    data = data_edges(g)
    assert (7, 9, "adults") in data
    assert (2, 9, "adults") in data  # the loop body may never run
    assert not any(s == 5 and d == 7 for s, d, _ in data)
    assert not any(3 in (e.src, e.dst) for e in g.dependence_edges())
    assert time.perf_counter() - t0 < 1


def test_control_edges_follow_nesting(adults_pdg):
    control = {(e.src, e.dst) for e in adults_pdg.edges_of(CONTROL)}
    assert control == {(1, 2), (1, 3), (1, 4), (1, 9), (4, 5), (4, 6), (6, 7)}
    assert adults_pdg.children(1) == [2, 3, 4, 9]
    assert adults_pdg.subtree(4) == {4, 5, 6, 7}


def test_entry_defines_parameters_and_this(adults_pdg):
    assert adults_pdg.defuse[1].defs == {"persons", THIS}
    assert (1, 4, "persons") in data_edges(adults_pdg)


def test_anti_dependences(adults_pdg):
    anti = {(e.src, e.dst, e.var) for e in adults_pdg.edges_of(ANTI)}
    assert (5, 4, "p") in anti
    assert (6, 5, "isAdult") in anti
    assert (7, 7, "adults") in anti


def test_golden_dot(adults_pdg):
    assert to_dot(adults_pdg) == (GOLDEN / "adults.dot").read_text()


def test_golden_cfg(program):
    cfg = build_cfg(program.method(ADULTS))
    lines = []
    for n in sorted(cfg.succ, key=lambda x: (x == EXIT, x)):
        if n != EXIT:
            lines.append(f"{n} " + " ".join("exit" if s == EXIT else str(s) for s in cfg.successors(n)))
    assert "\n".join(lines) + "\n" == (GOLDEN / "adults_cfg.txt").read_text()


def test_cfg_agrees_with_independent_builder(program):
    m = program.method(ADULTS)
    mine = {n: {"exit" if s == EXIT else s for s in ss} for n, ss in build_cfg(m).succ.items() if n != EXIT}
    theirs = {n: ss for n, ss in control_flow(m).items() if n != "exit"}
    assert mine == theirs


def test_json_export(adults_pdg):
    d = json.loads(to_json(adults_pdg))
    assert d["method"] == "Report.adults"
    assert [n["id"] for n in d["nodes"]] == [1, 2, 3, 4, 5, 6, 7, 9]
    assert {"from": 7, "to": 9, "kind": "data", "var": "adults"} in d["edges"]


def test_fixture_matches_path_oracle(program, typer, adults_pdg, children_pdg):
    assert pdg_dependences(adults_pdg) == path_dependences(program, ADULTS, typer)
    assert pdg_dependences(children_pdg) == path_dependences(program, MethodRef("Report", "children"), typer)


SRC = """class Box {
    int n;

    pure int get() {
        return this.n;
    }

    void bump() {
        this.n = this.n + 1;
    }
}

class C {
    int f(Box b) {
        int x = b.get();
        b.bump();
        int y = b.get();
        return x + y;
    }

    void g(int k) {
        int i = 0;
        while (i < k) {
            i = i + 1;
        }
        print(i);
    }
}
"""


def test_pure_call_reads_impure_call_writes_receiver():
    p = parse_program(SRC)
    g = build_pdg(p, MethodRef("C", "f"))
    first, bump, second = 15, 16, 17
    assert g.defuse[first].defs == {"x"} and "b" in g.defuse[first].uses
    assert "b" in g.defuse[bump].defs
    data = data_edges(g)
    assert (bump, second, "b") in data
    assert (14, second, "b") not in data  # the bump kills the entry definition
    assert (first, bump, "b") in {(e.src, e.dst, e.var) for e in g.edges_of(ANTI)}


def test_loop_carried_dependence():
    p = parse_program(SRC)
    g = build_pdg(p, MethodRef("C", "g"))
    data = data_edges(g)
    assert (24, 24, "i") in data
    assert (24, 23, "i") in data
    assert (22, 26, "i") in data
    assert (24, 26, "i") in data
