"""Reference interpreter; the ground truth for injected faults."""

from __future__ import annotations

from dataclasses import dataclass, field

from .ast import (Assign, BinOp, CallExpr, CallStmt, Cast, Compare, Decl, FieldGet, FieldSet, If, IndexGet, IndexSet,
                  InstanceOf, IntLit, Length, NewArray, NewObj, NullLit, Program, Return, Var, While)
from .classes import ClassTable

NULL_DEREF, INDEX_OOB, BAD_CAST = "NullDeref", "IndexOob", "BadCast"
FAULT_KINDS = (NULL_DEREF, INDEX_OOB, BAD_CAST)
MAX_CALL_DEPTH = 32
MAX_ARRAY = 10_000


def wrap32(v: int) -> int:
    """Two's-complement 32-bit overflow, as for Java ints."""
    return (v + 2 ** 31) % 2 ** 32 - 2 ** 31


class Timeout(RuntimeError):
    pass


@dataclass(eq=False)
class Obj:
    cls: str
    fields: dict[str, int] = field(default_factory=dict)

    def __repr__(self) -> str:
        return f"{self.cls}{self.fields}"


@dataclass(frozen=True)
class Ok:
    value: object = None


@dataclass(frozen=True)
class Fault:
    kind: str
    line: int
    method: str = ""


class _Fault(Exception):
    def __init__(self, kind: str, line: int, method: str):
        self.fault = Fault(kind, line, method)


class _Return(Exception):
    def __init__(self, value):
        self.value = value


def new_object(classes: ClassTable, cls: str, **values: int) -> Obj:
    return Obj(cls, {f: values.get(f, 0) for f in classes.fields(cls)})


class Interpreter:
    def __init__(self, program: Program, step_budget: int = 20_000):
        self.program = program
        self.classes = ClassTable.from_program(program)
        self.budget = step_budget
        self.steps = 0

    def tick(self) -> None:
        self.steps += 1
        if self.steps > self.budget:
            raise Timeout(f"step budget of {self.budget} exceeded")

    def run(self, method: str, inputs: dict) -> Ok | Fault:
        self.steps = 0
        try:
            return Ok(self.call(method, inputs, 0))
        except _Fault as f:
            return f.fault

    def call(self, name: str, args: dict, depth: int):
        if depth > MAX_CALL_DEPTH:
            raise Timeout("call depth exceeded")
        m = self.program.method(name)
        env = {p: args[p] for _, p in m.params}
        try:
            self.block(m.body, env, name, depth)
        except _Return as r:
            return r.value
        return None

    def block(self, stmts, env: dict, mname: str, depth: int) -> None:
        for s in stmts:
            self.stmt(s, env, mname, depth)

    def stmt(self, s, env: dict, mname: str, depth: int) -> None:
        self.tick()
        ev = lambda e: self.expr(e, env, s.line, mname, depth)  # noqa: E731
        if isinstance(s, Decl):
            env[s.name] = ev(s.init)
        elif isinstance(s, Assign):
            env[s.name] = ev(s.value)
        elif isinstance(s, FieldSet):
            obj = env[s.obj]
            if obj is None:
                raise _Fault(NULL_DEREF, s.line, mname)
            obj.fields[s.field] = ev(s.value)
        elif isinstance(s, IndexSet):
            arr = env[s.arr]
            if arr is None:
                raise _Fault(NULL_DEREF, s.line, mname)
            i = ev(s.index)
            value = ev(s.value)
            if not 0 <= i < len(arr):
                raise _Fault(INDEX_OOB, s.line, mname)
            arr[i] = value
        elif isinstance(s, If):
            if ev(s.cond):
                self.block(s.then, env, mname, depth)
            elif s.orelse is not None:
                self.block(s.orelse, env, mname, depth)
        elif isinstance(s, While):
            while ev(s.cond):
                self.block(s.body, env, mname, depth)
                self.tick()
        elif isinstance(s, Return):
            raise _Return(None if s.value is None else ev(s.value))
        elif isinstance(s, CallStmt):
            ev(s.call)
        else:
            raise TypeError(type(s))

    def expr(self, e, env: dict, line: int, mname: str, depth: int):
        ev = lambda x: self.expr(x, env, line, mname, depth)  # noqa: E731
        if isinstance(e, IntLit):
            return e.value
        if isinstance(e, NullLit):
            return None
        if isinstance(e, Var):
            return env[e.name]
        if isinstance(e, FieldGet):
            obj = env[e.obj]
            if obj is None:
                raise _Fault(NULL_DEREF, line, mname)
            return obj.fields[e.field]
        if isinstance(e, Length):
            arr = env[e.arr]
            if arr is None:
                raise _Fault(NULL_DEREF, line, mname)
            return len(arr)
        if isinstance(e, IndexGet):
            arr = env[e.arr]
            if arr is None:
                raise _Fault(NULL_DEREF, line, mname)
            i = ev(e.index)
            if not 0 <= i < len(arr):
                raise _Fault(INDEX_OOB, line, mname)
            return arr[i]
        if isinstance(e, NewObj):
            return new_object(self.classes, e.cls)
        if isinstance(e, NewArray):
            n = ev(e.length)
            if not 0 <= n <= MAX_ARRAY:
                raise _Fault(INDEX_OOB, line, mname)
            return [0] * n
        if isinstance(e, Cast):
            v = ev(e.expr)
            if v is not None and not self.classes.is_subclass(v.cls, e.cls):
                raise _Fault(BAD_CAST, line, mname)
            return v
        if isinstance(e, CallExpr):
            callee = self.program.method(e.name)
            args = {p: ev(a) for (_, p), a in zip(callee.params, e.args)}
            return self.call(e.name, args, depth + 1)
        if isinstance(e, BinOp):
            a, b = ev(e.left), ev(e.right)
            return wrap32(a + b if e.op == "+" else a - b if e.op == "-" else a * b)
        if isinstance(e, Compare):
            a, b = ev(e.left), ev(e.right)
            if e.op == "==":
                return a is b if (a is None or b is None or isinstance(a, (Obj, list))) else a == b
            if e.op == "!=":
                return a is not b if (a is None or b is None or isinstance(a, (Obj, list))) else a != b
            return {"<": a < b, "<=": a <= b, ">": a > b, ">=": a >= b}[e.op]
        if isinstance(e, InstanceOf):
            v = ev(e.expr)
            return v is not None and self.classes.is_subclass(v.cls, e.cls)
        raise TypeError(type(e))


def interpret(program: Program, method: str, inputs: dict, step_budget: int = 20_000) -> Ok | Fault:
    """Run ``method`` on ``inputs``; returns Ok or the first Fault. Raises Timeout."""
    return Interpreter(program, step_budget).run(method, inputs)
