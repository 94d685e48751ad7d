"""Reference interpreter for MiniJ, used as the behaviour oracle.

Integers are 32-bit and wrap like Java's; division truncates toward zero.
Objects, lists and closures compare by identity under ``==``, strings by
value.  A run never raises: runtime failures end up in the trace as an
error marker (``null-deref``, ``index``, ``arity``, ``type`` or ``fuel``).
"""
from __future__ import annotations

import copy
import dataclasses
import random
from dataclasses import dataclass, field
from typing import Optional

from .syntax import ast as A
from .syntax.ast import MethodRef, Program
from .syntax.binding import Typer, check_program

DEFAULT_FUEL = 10 ** 6
MAX_DEPTH = 300
BOUNDARY_INTS = (0, 1, -1, 18, 21)

ERROR_KINDS = ("null-deref", "index", "arity", "type", "fuel")


class MiniJRuntimeError(Exception):
    def __init__(self, kind: str, detail: str = ""):
        assert kind in ERROR_KINDS, kind
        self.kind = kind
        self.detail = detail
        super().__init__(f"{kind}: {detail}" if detail else kind)


class ListVal:
    __slots__ = ("elements",)

    def __init__(self, elements=None):
        self.elements = list(elements or [])

    def __repr__(self):
        return f"ListVal({self.elements!r})"


class ObjectVal:
    __slots__ = ("cls", "fields")

    def __init__(self, cls: str, fields: dict):
        self.cls = cls
        self.fields = fields

    def __repr__(self):
        return f"ObjectVal({self.cls}, {self.fields!r})"


@dataclass(eq=False)
class FunVal:
    params: tuple
    body: object  # Expr or tuple of Stmt
    env: dict
    this: object
    cls: str


def render(v, top: bool = True, _seen=None) -> str:
    """Structural rendering; identity is not observable."""
    if v is None:
        return "null"
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, int):
        return str(v)
    if isinstance(v, str):
        return v if top else '"' + v.replace("\\", "\\\\").replace('"', '\\"') + '"'
    if isinstance(v, FunVal):
        return f"<fun/{len(v.params)}>"
    seen = _seen or set()
    if id(v) in seen:
        return "<cycle>"
    seen = seen | {id(v)}
    if isinstance(v, ListVal):
        return "[" + ", ".join(render(x, False, seen) for x in v.elements) + "]"
    if isinstance(v, ObjectVal):
        inner = ", ".join(f"{k}={render(x, False, seen)}" for k, x in v.fields.items())
        return f"{v.cls}{{{inner}}}"
    raise TypeError(v)


@dataclass(frozen=True)
class Trace:
    """What a run makes observable.

    ``state`` renders the receiver and the arguments after the call, so that
    effects on caller-visible objects are compared as well as output.
    """
    outputs: tuple
    result: Optional[str] = None
    error: Optional[str] = None
    state: tuple = ()

    def to_dict(self) -> dict:
        d = {"outputs": list(self.outputs)}
        if self.error is not None:
            d["error"] = self.error
        else:
            d["result"] = self.result
        d["state"] = list(self.state)
        return d


class _Returned(Exception):
    pass


def _wrap(n: int) -> int:
    n &= 0xFFFFFFFF
    return n - (1 << 32) if n & 0x80000000 else n


class Interpreter:
    def __init__(self, program: Program, typer: Optional[Typer] = None, fuel: int = DEFAULT_FUEL):
        self.program = program
        self.typer = typer or check_program(program)
        self.fuel = fuel
        self.outputs = []
        self.depth = 0

    def tick(self):
        self.fuel -= 1
        if self.fuel < 0:
            raise MiniJRuntimeError("fuel")

    # -- method calls

    def invoke(self, this: ObjectVal, name: str, args: list):
        found = self.typer.lookup_method(this.cls, name)
        if found is None:
            raise MiniJRuntimeError("type", f"no method {name} on {this.cls}")
        owner, m = found
        if len(args) != len(m.params):
            raise MiniJRuntimeError("arity", f"{owner}.{name}")
        env = {p.name: v for p, v in zip(m.params, args)}
        return self.call_body(m.body, env, this, owner)

    def call_body(self, body, env, this, cls):
        self.tick()
        self.depth += 1
        if self.depth > MAX_DEPTH:
            raise MiniJRuntimeError("fuel", "call depth")
        try:
            self.exec_block(body, env, this, cls)
            return None
        except _Returned as r:
            return r.args[0]
        finally:
            self.depth -= 1

    def apply(self, f, args):
        if f is None:
            raise MiniJRuntimeError("null-deref", "apply on null")
        if not isinstance(f, FunVal):
            raise MiniJRuntimeError("type", "apply on non-function")
        if len(args) != len(f.params):
            raise MiniJRuntimeError("arity", "lambda")
        env = dict(f.env)
        env.update({p.name: v for p, v in zip(f.params, args)})
        if isinstance(f.body, tuple):
            return self.call_body(f.body, env, f.this, f.cls)
        self.tick()
        return self.eval(f.body, env, f.this, f.cls)

    # -- statements

    def exec_block(self, block, env, this, cls):
        for s in block:
            self.exec(s, env, this, cls)

    def truth(self, v) -> bool:
        if not isinstance(v, bool):
            raise MiniJRuntimeError("null-deref" if v is None else "type", "condition")
        return v

    def exec(self, s, env, this, cls):
        self.tick()
        if isinstance(s, A.VarDecl):
            env[s.name] = self.eval(s.init, env, this, cls)
        elif isinstance(s, A.Assign):
            value = self.eval(s.value, env, this, cls)
            if isinstance(s.target, A.Var):
                env[s.target.name] = value
            else:
                obj = self.eval(s.target.receiver, env, this, cls)
                self.object(obj).fields[s.target.field] = value
        elif isinstance(s, A.ExprStmt):
            self.eval(s.expr, env, this, cls)
        elif isinstance(s, A.If):
            if self.truth(self.eval(s.cond, env, this, cls)):
                self.exec_block(s.then, env, this, cls)
            elif s.orelse is not None:
                self.exec_block(s.orelse, env, this, cls)
        elif isinstance(s, A.While):
            while self.truth(self.eval(s.cond, env, this, cls)):
                self.exec_block(s.body, env, this, cls)
                self.tick()
        elif isinstance(s, A.ForEach):
            lst = self.eval(s.iterable, env, this, cls)
            if lst is None:
                raise MiniJRuntimeError("null-deref", "for-each over null")
            if not isinstance(lst, ListVal):
                raise MiniJRuntimeError("type", "for-each over non-list")
            i = 0
            # the list may grow while iterating; read its current length each time
            while i < len(lst.elements):
                env[s.var] = lst.elements[i]
                self.exec_block(s.body, env, this, cls)
                i += 1
                self.tick()
        elif isinstance(s, A.Return):
            raise _Returned(None if s.value is None else self.eval(s.value, env, this, cls))
        else:
            raise TypeError(s)

    # -- expressions

    def object(self, v) -> ObjectVal:
        if v is None:
            raise MiniJRuntimeError("null-deref")
        if not isinstance(v, ObjectVal):
            raise MiniJRuntimeError("type", "not an object")
        return v

    def int_(self, v) -> int:
        if v is None:
            raise MiniJRuntimeError("null-deref", "arithmetic on null")
        if isinstance(v, bool) or not isinstance(v, int):
            raise MiniJRuntimeError("type", "arithmetic on non-int")
        return v

    def eval(self, e, env, this, cls):
        if isinstance(e, (A.IntLit, A.BoolLit, A.StrLit)):
            return e.value
        if isinstance(e, A.NullLit):
            return None
        if isinstance(e, A.This):
            return this
        if isinstance(e, A.Var):
            if e.name not in env:
                raise MiniJRuntimeError("type", f"unbound {e.name}")
            return env[e.name]
        if isinstance(e, A.FieldAccess):
            obj = self.object(self.eval(e.receiver, env, this, cls))
            if e.field not in obj.fields:
                raise MiniJRuntimeError("type", f"no field {e.field}")
            return obj.fields[e.field]
        if isinstance(e, A.Call):
            return self.call(e, env, this, cls)
        if isinstance(e, A.New):
            args = [self.eval(a, env, this, cls) for a in e.args]
            if e.type.name == "List":
                return ListVal()
            return self.construct(e.type.name, args)
        if isinstance(e, A.Unary):
            v = self.eval(e.operand, env, this, cls)
            if e.op == "!":
                return not self.truth(v)
            return _wrap(-self.int_(v))
        if isinstance(e, A.Binary):
            return self.binary(e, env, this, cls)
        if isinstance(e, A.Lambda):
            return FunVal(e.params, e.body, dict(env), this, cls)
        raise TypeError(e)

    def construct(self, cls: str, args: list) -> ObjectVal:
        fields = {}
        decls = self.typer.all_fields(cls)
        if len(args) > len(decls):
            raise MiniJRuntimeError("arity", f"new {cls}")
        for i, f in enumerate(decls):
            fields[f.name] = args[i] if i < len(args) else default_value(f.type)
        return ObjectVal(cls, fields)

    def binary(self, e, env, this, cls):
        op = e.op
        if op in ("&&", "||"):
            left = self.truth(self.eval(e.left, env, this, cls))
            if op == "&&" and not left:
                return False
            if op == "||" and left:
                return True
            return self.truth(self.eval(e.right, env, this, cls))
        a = self.eval(e.left, env, this, cls)
        b = self.eval(e.right, env, this, cls)
        if op in ("==", "!="):
            same = _equal(a, b)
            return same if op == "==" else not same
        if op == "+" and (isinstance(a, str) or isinstance(b, str)):
            return render(a) + render(b)
        x, y = self.int_(a), self.int_(b)
        if op == "+":
            return _wrap(x + y)
        if op == "-":
            return _wrap(x - y)
        if op == "*":
            return _wrap(x * y)
        if op in ("/", "%"):
            if y == 0:
                raise MiniJRuntimeError("type", "division by zero")
            q = abs(x) // abs(y)
            if (x < 0) != (y < 0):
                q = -q
            return _wrap(q) if op == "/" else _wrap(x - q * y)
        if op == "<":
            return x < y
        if op == "<=":
            return x <= y
        if op == ">":
            return x > y
        if op == ">=":
            return x >= y
        raise TypeError(op)

    def call(self, e: A.Call, env, this, cls):
        if e.receiver is None:
            args = [self.eval(a, env, this, cls) for a in e.args]
            if e.method == "print":
                self.outputs.append(render(args[0]))
                return None
            return self.invoke(self.object(this), e.method, args)
        recv = self.eval(e.receiver, env, this, cls)
        args = [self.eval(a, env, this, cls) for a in e.args]
        if recv is None:
            raise MiniJRuntimeError("null-deref", f"call {e.method} on null")
        if isinstance(recv, ListVal):
            return self.list_call(recv, e.method, args)
        if isinstance(recv, FunVal):
            if e.method != "apply":
                raise MiniJRuntimeError("type", e.method)
            return self.apply(recv, args)
        if isinstance(recv, ObjectVal):
            return self.invoke(recv, e.method, args)
        raise MiniJRuntimeError("type", f"call {e.method} on a primitive")

    def list_call(self, lst: ListVal, name: str, args):
        if name == "add" and len(args) == 1:
            lst.elements.append(args[0])
            return None
        if name == "get" and len(args) == 1:
            i = self.int_(args[0])
            if not 0 <= i < len(lst.elements):
                raise MiniJRuntimeError("index", str(i))
            return lst.elements[i]
        if name == "size" and not args:
            return len(lst.elements)
        if name == "isEmpty" and not args:
            return not lst.elements
        raise MiniJRuntimeError("arity" if name in ("add", "get", "size", "isEmpty") else "type", name)


def _equal(a, b) -> bool:
    if a is None or b is None:
        return a is b
    if isinstance(a, (bool, int, str)) and isinstance(b, (bool, int, str)):
        return type(a) is type(b) and a == b
    return a is b


def default_value(t: A.TypeRef):
    if t == A.INT:
        return 0
    if t == A.BOOLEAN:
        return False
    return None


def run(program: Program, entry, args: list, fuel: int = DEFAULT_FUEL, this=None,
        typer: Optional[Typer] = None) -> Trace:
    """Run ``entry`` on ``args``; ``this`` defaults to a fresh object of the entry class."""
    ref = entry if isinstance(entry, MethodRef) else MethodRef.parse(entry)
    interp = Interpreter(program, typer, fuel)
    if this is None:
        this = interp.construct(ref.cls, [])
    try:
        m = program.method(ref)
        if len(args) != len(m.params):
            raise MiniJRuntimeError("arity", str(ref))
        value = interp.invoke(this, ref.name, list(args))
        result, error = render(value, top=False), None
    except MiniJRuntimeError as err:
        result, error = None, err.kind
    except RecursionError:
        result, error = None, "fuel"
    state = (render(this, top=False),) + tuple(render(a, top=False) for a in args)
    return Trace(tuple(interp.outputs), result, error, state)


# -- input generation ------------------------------------------------------

_STRINGS = ("", "a", "filtering", "x y", "18")


class ValueGenerator:
    """Type-driven random values; the first trials use the boundary integers."""

    def __init__(self, typer: Typer, rng: random.Random, forced_int: Optional[int] = None,
                 max_depth: int = 2):
        self.typer = typer
        self.rng = rng
        self.forced_int = forced_int
        self.max_depth = max_depth

    def int_(self) -> int:
        if self.forced_int is not None:
            return self.forced_int
        if self.rng.random() < 0.3:
            return self.rng.choice(BOUNDARY_INTS)
        return self.rng.randint(-100, 100)

    def value(self, t: Optional[A.TypeRef], depth: int = 0):
        if t is None:
            return None
        if t == A.INT:
            return self.int_()
        if t == A.BOOLEAN:
            return self.rng.random() < 0.5
        if t == A.STRING:
            return self.rng.choice(_STRINGS)
        if t.name == "List":
            if depth > self.max_depth:
                return ListVal()
            elem = t.args[0] if t.args else None
            return ListVal(self.value(elem, depth + 1) for _ in range(self.rng.randint(0, 10)))
        if self.typer.is_class(t.name):
            if depth > self.max_depth:
                return None
            return self.object(t.name, depth)
        if t.name == "Fun" or t.name == "Object":
            return None
        # type variables get integers
        return self.int_()

    def object(self, cls: str, depth: int = 0) -> ObjectVal:
        return ObjectVal(cls, {f.name: self.value(f.type, depth + 1) for f in self.typer.all_fields(cls)})


def generate_inputs(program: Program, entry, n: int, seed: int, typer: Optional[Typer] = None):
    """``n`` deterministic (this, args) vectors for ``entry``."""
    ref = entry if isinstance(entry, MethodRef) else MethodRef.parse(entry)
    typer = typer or check_program(program)
    m = program.method(ref)
    rng = random.Random(seed)
    out = []
    for i in range(n):
        forced = BOUNDARY_INTS[i] if i < len(BOUNDARY_INTS) else None
        gen = ValueGenerator(typer, rng, forced)
        this = gen.object(ref.cls)
        args = [gen.value(p.type) for p in m.params]
        out.append((this, args))
    return out


@dataclass
class Verdict:
    equivalent: bool
    trials: int
    counterexample: Optional[dict] = None

    def to_dict(self) -> dict:
        return {"equivalent": self.equivalent, "trials": self.trials, "counterexample": self.counterexample}


def same_behaviour(t1: Trace, t2: Trace) -> bool:
    """Trace equality; two runs that both exhaust fuel agree if one output list prefixes the other."""
    if t1.error == "fuel" and t2.error == "fuel":
        k = min(len(t1.outputs), len(t2.outputs))
        return t1.outputs[:k] == t2.outputs[:k]
    return t1 == t2


def equivalent(p1: Program, p2: Program, entry, n: int = 100, seed: int = 0,
               fuel: int = DEFAULT_FUEL, permutation=None) -> Verdict:
    """Compare traces of ``entry`` in both programs on ``n`` generated inputs.

    ``permutation`` (1-based, as in a parameter reordering) says which
    original argument the i-th parameter of ``entry`` in ``p2`` receives.
    """
    ref = entry if isinstance(entry, MethodRef) else MethodRef.parse(entry)
    t1, t2 = check_program(p1), check_program(p2)
    for i, (this, args) in enumerate(generate_inputs(p1, ref, n, seed, t1)):
        this2, args2 = copy.deepcopy((this, args))
        shown = [render(a, top=False) for a in args]
        shown_this = render(this, top=False)
        r1 = run(p1, ref, args, fuel, this=this, typer=t1)
        if permutation:
            args2 = [args2[k - 1] for k in permutation]
        r2 = run(p2, ref, args2, fuel, this=this2, typer=t2)
        if permutation:
            # report argument state in the original order
            old = list(r2.state[1:])
            restored = [None] * len(old)
            for i, k in enumerate(permutation):
                restored[k - 1] = old[i]
            r2 = dataclasses.replace(r2, state=r2.state[:1] + tuple(restored))
        if not same_behaviour(r1, r2):
            return Verdict(False, i + 1, {"this": shown_this, "args": shown,
                                         "left": r1.to_dict(), "right": r2.to_dict()})
    return Verdict(True, n)


# -- JSON argument values ----------------------------------------------------

def from_json(value, t: Optional[A.TypeRef], typer: Typer):
    """Build a runtime value of type ``t`` from decoded JSON.

    Objects are given as ``{"field": value, ...}`` (optionally with ``"class"``).
    """
    if value is None or t is None:
        return value
    if t.name == "List":
        elem = t.args[0] if t.args else None
        return ListVal(from_json(v, elem, typer) for v in value)
    if typer.is_class(t.name) and isinstance(value, dict):
        cls = value.get("class", t.name)
        fields = {}
        for f in typer.all_fields(cls):
            fields[f.name] = from_json(value.get(f.name), f.type, typer) if f.name in value \
                else default_value(f.type)
        return ObjectVal(cls, fields)
    return value
