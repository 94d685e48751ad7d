"""Statement unification and backtracking PDG matching.

Clone B is unified *into* clone A: B's local and parameter names are renamed
to A's names.  Field and method names are never renamed.
"""
from __future__ import annotations

import itertools
import re
import json
from dataclasses import dataclass, field, replace
from typing import Optional

from .pdg import Pdg
from .syntax import ast as A
from .syntax.binding import Typer
from .syntax.printer import print_expr, stmt_header

MAX_REORDER_ARITY = 8
# parameter alignments whose statement mappings are compared
MAX_SIGNATURES = 24
_TVAR = "T"


def _is_tvar(name: str, typer) -> bool:
    return re.fullmatch(_TVAR + r"\d+", name) is not None and not (typer and typer.is_class(name))


def _type_names(t: A.TypeRef):
    yield t.name
    for a in t.args:
        yield from _type_names(a)


@dataclass(frozen=True)
class RefactoringSet:
    introduce_parameter: bool = True
    generalize_type: bool = True
    introduce_type_parameter: bool = True
    reorder_parameters: bool = True

    # rename is always available
    rename = True

    FLAGS = ("rename", "introduce_parameter", "generalize_type",
             "introduce_type_parameter", "reorder_parameters")

    @classmethod
    def only(cls, *names) -> RefactoringSet:
        unknown = set(names) - set(cls.FLAGS)
        if unknown:
            raise ValueError(f"unknown refactorings: {', '.join(sorted(unknown))}")
        return cls(**{f: f in names for f in cls.FLAGS if f != "rename"})

    @classmethod
    def all_combinations(cls):
        for bits in itertools.product((False, True), repeat=4):
            yield cls(*bits)

    def active(self) -> list[str]:
        return [f for f in self.FLAGS if getattr(self, f)]


@dataclass(frozen=True)
class LiteralParam:
    name: str
    type: A.TypeRef
    value_a: object
    value_b: object


@dataclass(frozen=True)
class Substitution:
    """Renamings and abstractions under which B's statements equal A's."""
    renames: tuple = ()  # sorted (b_name, a_name) pairs, identity included
    literal_params: tuple = ()  # LiteralParam, in creation order
    # (param name, A line, A literal index, B line, B literal index)
    literal_sites: tuple = ()
    type_gen: tuple = ()  # ((type_a, type_b), unified) pairs
    # (A line or signature slot, B line or slot, type_a, type_b)
    type_sites: tuple = ()
    type_vars: tuple = ()  # fresh type parameter names, in creation order
    reserved: frozenset = frozenset()

    @property
    def rename_map(self) -> dict:
        return dict(self.renames)

    def real_renames(self) -> dict:
        return {b: a for b, a in self.renames if a != b}

    def type_map(self) -> dict:
        return dict(self.type_gen)

    def fresh_name(self, prefix: str) -> str:
        taken = set(self.reserved) | {p.name for p in self.literal_params}
        taken |= {a for _, a in self.renames}
        i = 0
        while f"{prefix}{i}" in taken:
            i += 1
        return f"{prefix}{i}"

    def with_rename(self, b: str, a: str) -> Substitution:
        m = self.rename_map
        if b in m:
            if m[b] != a:
                raise UnificationFailure(A.Var(a), A.Var(b), f"{b} already renamed to {m[b]}")
            return self
        if a in m.values():
            raise UnificationFailure(A.Var(a), A.Var(b), f"{a} is already the image of another name")
        return replace(self, renames=tuple(sorted(self.renames + ((b, a),))))


class UnificationFailure(Exception):
    """Carries the first mismatching pair of sub-terms."""

    def __init__(self, left, right, reason: str):
        self.left = left
        self.right = right
        self.reason = reason
        super().__init__(f"{_show(left)} vs {_show(right)}: {reason}")


def _show(x) -> str:
    if x is None:
        return "<none>"
    if isinstance(x, A.TypeRef):
        return str(x)
    if isinstance(x, str):
        return x
    try:
        return print_expr(x)
    except TypeError:
        try:
            return stmt_header(x)
        except TypeError:
            return repr(x)


class _Unifier:
    def __init__(self, rs: RefactoringSet, sigma: Substitution, typer: Optional[Typer],
                 line_a: int = 0, line_b: int = 0):
        self.rs = rs
        self.sigma = sigma
        self.typer = typer
        self.line_a, self.line_b = line_a, line_b
        self.lit_a = self.lit_b = 0

    # -- names and types

    def name(self, a: str, b: str) -> None:
        self.sigma = self.sigma.with_rename(b, a)

    def type(self, ta: A.TypeRef, tb: A.TypeRef, slot: Optional[tuple] = None, left=None, right=None):
        if ta == tb:
            return
        unified = self._unify_types(ta, tb)
        if unified is None:
            raise UnificationFailure(left if left is not None else ta,
                                     right if right is not None else tb,
                                     f"types {ta} and {tb} differ")
        if slot is None:
            raise UnificationFailure(ta, tb, "type difference at a position that cannot be generalized")
        tg = self.sigma.type_map()
        if (ta, tb) not in tg:
            fresh = tuple(n for n in _type_names(unified) if _is_tvar(n, self.typer)
                          and n not in self.sigma.type_vars)
            self.sigma = replace(self.sigma, type_gen=self.sigma.type_gen + (((ta, tb), unified),),
                                 type_vars=self.sigma.type_vars + fresh)
        self.sigma = replace(self.sigma, type_sites=self.sigma.type_sites + ((slot[0], slot[1], ta, tb),))

    def _unify_types(self, ta: A.TypeRef, tb: A.TypeRef) -> Optional[A.TypeRef]:
        known = self.sigma.type_map().get((ta, tb))
        if known is not None:
            return known
        if ta.name == tb.name and len(ta.args) == len(tb.args) and ta.args:
            args = []
            for x, y in zip(ta.args, tb.args):
                if x == y:
                    args.append(x)
                    continue
                u = self._unify_types(x, y)
                if u is None:
                    return None
                args.append(u)
            return A.TypeRef(ta.name, tuple(args))
        if self.rs.generalize_type and self.typer is not None:
            if self.typer.is_class(ta.name) and self.typer.is_class(tb.name) and not ta.args:
                lca = self.typer.common_ancestor(ta.name, tb.name)
                if lca is not None:
                    return A.TypeRef(lca)
        if self.rs.introduce_type_parameter and ta.name not in ("void",) and tb.name != "void":
            i = len(self.sigma.type_vars)
            while f"{_TVAR}{i}" in self.sigma.reserved:
                i += 1
            return A.TypeRef(f"{_TVAR}{i}")
        return None

    # -- expressions

    def literal(self, a, b) -> None:
        la, lb = self.lit_a, self.lit_b
        self.lit_a += 1
        self.lit_b += 1
        if a == b:
            return
        if type(a) is not type(b):
            raise UnificationFailure(a, b, "literals of different types")
        if not self.rs.introduce_parameter:
            raise UnificationFailure(a, b, "literals differ and introduce parameter is disabled")
        t = {A.IntLit: A.INT, A.BoolLit: A.BOOLEAN, A.StrLit: A.STRING}[type(a)]
        param = None
        for lp in self.sigma.literal_params:
            if lp.type == t and lp.value_a == a.value and lp.value_b == b.value:
                param = lp
        if param is None:
            param = LiteralParam(self.sigma.fresh_name("p"), t, a.value, b.value)
            self.sigma = replace(self.sigma, literal_params=self.sigma.literal_params + (param,))
        site = (param.name, self.line_a, la, self.line_b, lb)
        self.sigma = replace(self.sigma, literal_sites=self.sigma.literal_sites + (site,))

    def expr(self, a, b) -> None:
        if isinstance(a, A.NullLit) and isinstance(b, A.NullLit):
            return
        if isinstance(a, (A.IntLit, A.BoolLit, A.StrLit)) and isinstance(b, (A.IntLit, A.BoolLit, A.StrLit)):
            self.literal(a, b)
            return
        if type(a) is not type(b):
            raise UnificationFailure(a, b, "different expression kinds")
        if isinstance(a, A.This):
            return
        if isinstance(a, A.Var):
            self.name(a.name, b.name)
        elif isinstance(a, A.FieldAccess):
            if a.field != b.field:
                raise UnificationFailure(a, b, f"fields {a.field} and {b.field} differ")
            self.expr(a.receiver, b.receiver)
        elif isinstance(a, A.Call):
            if a.method != b.method or len(a.args) != len(b.args):
                raise UnificationFailure(a, b, f"calls to {a.method} and {b.method} differ")
            if (a.receiver is None) != (b.receiver is None):
                raise UnificationFailure(a, b, "receiver present in only one call")
            if a.receiver is not None:
                self.expr(a.receiver, b.receiver)
            for x, y in zip(a.args, b.args):
                self.expr(x, y)
        elif isinstance(a, A.New):
            if a.type != b.type or len(a.args) != len(b.args):
                raise UnificationFailure(a, b, "different instantiations")
            for x, y in zip(a.args, b.args):
                self.expr(x, y)
        elif isinstance(a, A.Unary):
            if a.op != b.op:
                raise UnificationFailure(a, b, f"operators {a.op} and {b.op} differ")
            self.expr(a.operand, b.operand)
        elif isinstance(a, A.Binary):
            if a.op != b.op:
                raise UnificationFailure(a, b, f"operators {a.op} and {b.op} differ")
            self.expr(a.left, b.left)
            self.expr(a.right, b.right)
        elif isinstance(a, A.Lambda):
            if len(a.params) != len(b.params):
                raise UnificationFailure(a, b, "lambda arity differs")
            for pa, pb in zip(a.params, b.params):
                if pa.type != pb.type:
                    raise UnificationFailure(pa.type, pb.type, "lambda parameter types differ")
                self.name(pa.name, pb.name)
            if isinstance(a.body, tuple) != isinstance(b.body, tuple):
                raise UnificationFailure(a, b, "lambda body shapes differ")
            if isinstance(a.body, tuple):
                self.block(a.body, b.body)
            else:
                self.expr(a.body, b.body)
        else:
            raise UnificationFailure(a, b, "unsupported expression")

    def block(self, ba, bb) -> None:
        if len(ba) != len(bb):
            raise UnificationFailure(ba, bb, "lambda blocks differ in length")
        for x, y in zip(ba, bb):
            self.stmt(x, y, nested=True)

    # -- statements

    def stmt(self, a, b, nested: bool = False) -> None:
        if type(a) is not type(b):
            raise UnificationFailure(a, b, "different statement kinds")
        slot = None if nested else (self.line_a, self.line_b)
        if isinstance(a, A.VarDecl):
            self.type(a.type, b.type, slot)
            self.name(a.name, b.name)
            self.expr(a.init, b.init)
        elif isinstance(a, A.Assign):
            self.expr(a.target, b.target)
            self.expr(a.value, b.value)
        elif isinstance(a, A.ExprStmt):
            self.expr(a.expr, b.expr)
        elif isinstance(a, A.If):
            if (a.orelse is None) != (b.orelse is None):
                raise UnificationFailure(a, b, "else branch present in only one statement")
            self.expr(a.cond, b.cond)
        elif isinstance(a, A.While):
            self.expr(a.cond, b.cond)
        elif isinstance(a, A.ForEach):
            self.type(a.type, b.type, slot)
            self.name(a.var, b.var)
            self.expr(a.iterable, b.iterable)
        elif isinstance(a, A.Return):
            if (a.value is None) != (b.value is None):
                raise UnificationFailure(a, b, "return value present in only one statement")
            if a.value is not None:
                self.expr(a.value, b.value)
        if nested:
            for (la, xa), (lb, xb) in zip(A.child_blocks(a), A.child_blocks(b)):
                if la != lb:
                    raise UnificationFailure(a, b, "block structure differs")
                self.block(xa, xb)


def unify_statements(a, b, rs: RefactoringSet = RefactoringSet(), sigma: Optional[Substitution] = None,
                     typer: Optional[Typer] = None) -> Substitution:
    """Extend ``sigma`` so that statement ``b`` becomes ``a``; raises UnificationFailure.

    Only the statement header is compared: nested blocks of control
    statements are separate PDG nodes and are matched on their own.
    """
    u = _Unifier(rs, sigma or Substitution(), typer, a.line, b.line)
    u.stmt(a, b)
    return u.sigma


@dataclass(frozen=True)
class SignatureMatch:
    sigma: Substitution
    # permutation[i] is the 1-based position in B of A's i-th parameter
    permutation: tuple


def signature_matches(ma: A.MethodDecl, mb: A.MethodDecl, rs: RefactoringSet = RefactoringSet(),
                      typer: Optional[Typer] = None, reserved=frozenset(), limit: int = MAX_SIGNATURES) -> list:
    """Up to ``limit`` parameter alignments, fewest type changes first (identity first on ties)."""
    if len(ma.params) != len(mb.params):
        raise SignatureFailure(min(len(ma.params), len(mb.params)) + 1, "parameter counts differ")
    base = Substitution(reserved=frozenset(reserved))
    n = len(ma.params)
    identity = tuple(range(n))
    orders = [identity]
    if rs.reorder_parameters and n <= MAX_REORDER_ARITY:
        orders = itertools.chain(orders, (p for p in itertools.permutations(range(n)) if p != identity))
    first_error = None
    found = []
    for order in orders:
        u = _Unifier(rs, base, typer, ma.line, mb.line)
        try:
            for i, j in enumerate(order):
                pa, pb = ma.params[i], mb.params[j]
                try:
                    u.type(pa.type, pb.type, (f"param:{i}", f"param:{j}"))
                    u.name(pa.name, pb.name)
                except UnificationFailure as e:
                    raise SignatureFailure(i + 1, e.reason) from e
            try:
                u.type(ma.return_type, mb.return_type, ("return", "return"))
            except UnificationFailure as e:
                raise SignatureFailure(0, f"return types: {e.reason}") from e
        except SignatureFailure as e:
            if first_error is None:
                first_error = e
            continue
        found.append(SignatureMatch(u.sigma, tuple(j + 1 for j in order)))
        if len(found) >= limit:
            break
    if not found:
        raise first_error
    return sorted(found, key=lambda sm: len(sm.sigma.type_gen) + len(sm.sigma.type_vars))


def unify_signatures(ma: A.MethodDecl, mb: A.MethodDecl, rs: RefactoringSet = RefactoringSet(),
                     typer: Optional[Typer] = None, reserved=frozenset()) -> SignatureMatch:
    return signature_matches(ma, mb, rs, typer, reserved)[0]


class SignatureFailure(Exception):
    """``position`` is the 1-based blocking parameter (0 for the return type)."""

    def __init__(self, position: int, reason: str):
        self.position = position
        self.reason = reason
        super().__init__(f"parameter {position}: {reason}")


# -- PDG matching ----------------------------------------------------------


@dataclass(frozen=True)
class NodeMapping:
    pairs: frozenset
    substitution: Substitution
    entry: tuple = (0, 0)

    def a_to_b(self) -> dict:
        return dict(self.pairs)

    def b_to_a(self) -> dict:
        return {b: a for a, b in self.pairs}

    def non_entry_pairs(self) -> list:
        return sorted(p for p in self.pairs if p != self.entry)


def mapping_cost(pairs, sigma: Substitution, entry) -> tuple:
    """Smaller is better."""
    non_entry = sorted(p for p in pairs if p != entry)
    return (-len(non_entry), len(sigma.literal_params), len(sigma.real_renames()),
            len(sigma.type_gen), tuple(non_entry))


def candidate_ok(ga: Pdg, gb: Pdg, a: int, b: int, mapped: dict) -> bool:
    """Kind, branch and control-parent constraints for pairing ``a`` with ``b``."""
    na, nb = ga.nodes[a], gb.nodes[b]
    if na.kind != nb.kind or na.branch != nb.branch:
        return False
    return mapped.get(na.parent) == nb.parent


def match_pdgs(ga: Pdg, gb: Pdg, rs: RefactoringSet = RefactoringSet(),
               sigma: Optional[Substitution] = None, typer: Optional[Typer] = None,
               excluded=frozenset()) -> NodeMapping:
    """Best injective, control-parent-preserving mapping by backtracking.

    A nodes are decided in ascending id order (a control parent always has a
    smaller line than its children); each is tried against B candidates in
    ascending order and finally left unmapped.  ``excluded`` pairs are never
    used.
    """
    sigma = sigma or Substitution()
    entry = (ga.entry, gb.entry)
    a_ids = sorted(n for n in ga.nodes if n != ga.entry)
    b_ids = sorted(n for n in gb.nodes if n != gb.entry)
    kinds_b = {}
    for b in b_ids:
        kinds_b.setdefault(gb.nodes[b].kind, []).append(b)

    best = [None, None]  # cost, mapping

    def search(i, mapped, used_b, sig, count):
        if best[0] is not None:
            # remaining A nodes bound how many more pairs are possible
            if -(count + len(a_ids) - i) > best[0][0]:
                return
        if i == len(a_ids):
            cost = mapping_cost(mapped.items(), sig, entry)
            if best[0] is None or cost < best[0]:
                best[0] = cost
                best[1] = NodeMapping(frozenset(mapped.items()), sig, entry)
            return
        a = a_ids[i]
        for b in kinds_b.get(ga.nodes[a].kind, ()):
            if b in used_b or (a, b) in excluded or not candidate_ok(ga, gb, a, b, mapped):
                continue
            try:
                sig2 = unify_statements(ga.nodes[a].stmt, gb.nodes[b].stmt, rs, sig, typer)
            except UnificationFailure:
                continue
            mapped[a] = b
            used_b.add(b)
            search(i + 1, mapped, used_b, sig2, count + 1)
            del mapped[a]
            used_b.discard(b)
        search(i + 1, mapped, used_b, sig, count)

    search(0, {ga.entry: gb.entry}, set(), sigma, 0)
    return best[1]


def unmapped_reasons(ga: Pdg, gb: Pdg, m: NodeMapping, rs: RefactoringSet,
                     typer: Optional[Typer] = None) -> dict:
    """For each unmapped A node, why it matched no B node."""
    reasons = {}
    a2b = m.a_to_b()
    used = set(a2b.values())
    for a in sorted(ga.nodes):
        if a in a2b:
            continue
        na = ga.nodes[a]
        if na.parent not in a2b:
            reasons[a] = "control parent is not mapped"
            continue
        same = [b for b in sorted(gb.nodes) if b not in used and gb.nodes[b].kind == na.kind
                and gb.nodes[b].parent == a2b[na.parent] and gb.nodes[b].branch == na.branch]
        if not same:
            reasons[a] = "no unmapped statement of the same kind under the mapped parent"
            continue
        msgs = []
        for b in same:
            try:
                unify_statements(na.stmt, gb.nodes[b].stmt, rs, m.substitution, typer)
                msgs.append(f"{b}: unifiable but not part of the best mapping")
            except UnificationFailure as e:
                msgs.append(f"{b}: {e}")
        reasons[a] = "; ".join(msgs)
    return reasons


def mapping_report(ga: Pdg, gb: Pdg, m: NodeMapping, rs: RefactoringSet,
                   typer: Optional[Typer] = None, permutation=None) -> dict:
    s = m.substitution
    report = {
        "a": str(ga.method),
        "b": str(gb.method),
        "refactorings": rs.active(),
        "pairs": [list(p) for p in sorted(m.pairs)],
        "renames": {b: a for b, a in s.renames if a != b},
        "literal_parameters": [
            {"name": lp.name, "type": str(lp.type), "a": lp.value_a, "b": lp.value_b}
            for lp in s.literal_params],
        "type_generalizations": [
            {"a": str(ta), "b": str(tb), "unified": str(t)} for (ta, tb), t in s.type_gen],
        "unmapped_a": {str(k): v for k, v in unmapped_reasons(ga, gb, m, rs, typer).items()},
        "unmapped_b": sorted(n for n in gb.nodes if n not in m.b_to_a()),
    }
    if permutation is not None:
        report["parameter_permutation"] = list(permutation)
    return report


def report_json(report: dict) -> str:
    return json.dumps(report, indent=2, sort_keys=False)


def best_alignment(ga: Pdg, gb: Pdg, rs: RefactoringSet = RefactoringSet(), typer: Optional[Typer] = None,
                   reserved=frozenset()):
    """(SignatureMatch, NodeMapping) with the cheapest statement mapping over the parameter alignments."""
    best = None
    for sm in signature_matches(ga.decl, gb.decl, rs, typer, reserved):
        m = match_pdgs(ga, gb, rs, sm.sigma, typer)
        key = mapping_cost(m.pairs, m.substitution, m.entry)[:4] + (len(sm.sigma.type_gen) + len(sm.sigma.type_vars),)
        if best is None or key < best[0]:
            best = (key, sm, m)
    return best[1], best[2]
