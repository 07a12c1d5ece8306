"""Random structured MiniLang programs that are safe by construction.

Every dereference of a possibly-null reference sits under a null check, an
early return or an ``instanceof`` test; every array access sits under a loop
bound or an explicit bounds check; every downcast is guarded. Those guards are
what the injectors later remove. ``generate_program`` double-checks safety by
running the interpreter on sampled inputs.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field

from .ast import (INT, INT_ARRAY, Assign, BinOp, CallExpr, CallStmt, Cast, ClassDecl, Compare, Decl, FieldGet,
                  FieldSet, If, IndexGet, IndexSet, InstanceOf, IntLit, Length, Method, NewArray, NewObj, NullLit,
                  Program, Return, Var, While)
from .classes import ClassTable
from .inject import random_inputs
from .interp import Ok, Timeout, interpret
from .parser import parse
from .printer import render

CLASS_NAMES = ["Node", "Item", "Shape", "Box", "Cell", "Entry", "Point", "Leaf", "Frame", "Slot", "Pair", "Unit"]
FIELD_NAMES = ["val", "size", "key", "count", "w", "h", "id", "cap", "lo", "hi", "mark", "rank"]
TARGET_NAMES = ["process", "compute", "update", "scan", "merge", "check", "total", "visit", "apply", "score"]


class GenerationError(RuntimeError):
    pass


@dataclass
class _Scope:
    ints: list[str]
    refs: dict[str, str]
    safe: set[str]
    arrays: list[str]
    acc: str
    top: bool = True

    def child(self) -> "_Scope":
        return _Scope(list(self.ints), dict(self.refs), set(self.safe), list(self.arrays), self.acc, False)


@dataclass
class GenConfig:
    min_fragments: int = 3
    max_fragments: int = 7
    max_depth: int = 2
    max_helpers: int = 2
    checks: int = 12


@dataclass
class _Names:
    used: set[str] = field(default_factory=set)

    def fresh(self, base: str) -> str:
        name, k = base, 1
        while name in self.used:
            k += 1
            name = f"{base}{k}"
        self.used.add(name)
        return name


class _Gen:
    def __init__(self, rng: random.Random, cfg: GenConfig):
        self.rng = rng
        self.cfg = cfg

    # classes

    def classes(self) -> list[ClassDecl]:
        rng = self.rng
        names = rng.sample(CLASS_NAMES, rng.randint(2, 4))
        decls: list[ClassDecl] = []
        for i, name in enumerate(names):
            parent = "Object" if i == 0 or rng.random() < 0.25 else rng.choice(names[:i])
            taken = set(self.table_of(decls).fields(parent)) if parent != "Object" else set()
            pool = [f for f in FIELD_NAMES if f not in taken]
            decls.append(ClassDecl(name, parent, rng.sample(pool, rng.randint(1, 2))))
        return decls

    @staticmethod
    def table_of(decls) -> ClassTable:
        return ClassTable({c.name: (c.parent, tuple(c.fields)) for c in decls})

    # expressions

    def small(self) -> IntLit:
        return IntLit(self.rng.choice([0, 1, 1, 2, 3, 5, 10]))

    def int_expr(self, sc: _Scope, depth: int = 0):
        rng = self.rng
        r = rng.random()
        if r < 0.35 and sc.ints:
            return Var(rng.choice(sc.ints))
        if r < 0.5:
            return self.small()
        if r < 0.62 and sc.arrays:
            return Length(rng.choice(sc.arrays))
        if r < 0.74 and sc.safe:
            p = rng.choice(sorted(sc.safe))
            return FieldGet(p, rng.choice(self.table.fields(sc.refs[p])))
        if depth < 1:
            return BinOp(rng.choice("+-*"), self.int_expr(sc, depth + 1), self.int_expr(sc, depth + 1))
        return Var(sc.acc)

    def bump(self, sc: _Scope, value) -> Assign:
        return Assign(sc.acc, BinOp(self.rng.choice("+-"), Var(sc.acc), value))

    # fragments

    def deref_stmt(self, sc: _Scope, p: str):
        rng = self.rng
        f = rng.choice(self.table.fields(sc.refs[p]))
        r = rng.random()
        if r < 0.45:
            return self.bump(sc, FieldGet(p, f))
        if r < 0.75:
            return FieldSet(p, f, self.int_expr(sc))
        t = self.names.fresh(rng.choice(["t", "v", "x"]))
        sc.ints.append(t)
        return Decl(INT, t, BinOp("*", FieldGet(p, f), self.small()))

    def null_guard(self, sc: _Scope, depth: int):
        cands = [p for p in sc.refs if p not in sc.safe]
        if not cands:
            return None
        p = self.rng.choice(cands)
        inner = sc.child()
        inner.safe.add(p)
        body = [self.deref_stmt(inner, p)]
        body += self.fragments(inner, depth + 1, 0, 1)
        if self.rng.random() < 0.4:
            body.append(self.deref_stmt(inner, p))
        orelse = [self.bump(sc.child(), self.small())] if self.rng.random() < 0.3 else None
        return [If(Compare("!=", Var(p), NullLit()), body, orelse)]

    def early_return(self, sc: _Scope, depth: int):
        cands = [p for p in sc.refs if p not in sc.safe]
        if not sc.top or not cands:
            return None
        p = self.rng.choice(cands)
        value = self.rng.choice([IntLit(0), IntLit(-1), Var(sc.acc)])
        sc.safe.add(p)
        out = [If(Compare("==", Var(p), NullLit()), [Return(value)])]
        return out + [self.deref_stmt(sc, p) for _ in range(self.rng.randint(1, 2))]

    def array_loop(self, sc: _Scope, depth: int):
        if not sc.arrays:
            return None
        rng = self.rng
        a = rng.choice(sc.arrays)
        i = self.names.fresh(rng.choice(["i", "j", "k"]))
        sc.ints.append(i)
        inner = sc.child()
        r = rng.random()
        if r < 0.45:
            use = self.bump(inner, IndexGet(a, Var(i)))
        elif r < 0.75:
            use = IndexSet(a, Var(i), self.int_expr(inner))
        else:
            use = If(Compare(rng.choice([">", "<", "=="]), IndexGet(a, Var(i)), self.small()),
                     [self.bump(inner, IntLit(1))])
        body = [use] + self.fragments(inner, depth + 1, 0, 1)
        body.append(Assign(i, BinOp("+", Var(i), IntLit(1))))
        return [Decl(INT, i, IntLit(0)), While(Compare("<", Var(i), Length(a)), body)]

    def count_loop(self, sc: _Scope, depth: int):
        rng = self.rng
        i = self.names.fresh(rng.choice(["c", "n", "m"]))
        bound = Var(rng.choice(sc.ints)) if sc.ints and rng.random() < 0.5 else self.small()
        sc.ints.append(i)
        inner = sc.child()
        body = [self.bump(inner, Var(i))] + self.fragments(inner, depth + 1, 0, 1)
        body.append(Assign(i, BinOp("+", Var(i), IntLit(1))))
        return [Decl(INT, i, IntLit(0)), While(Compare(rng.choice(["<", "<="]), Var(i), bound), body)]

    def bounds_guard(self, sc: _Scope, depth: int):
        if not sc.arrays or not sc.ints:
            return None
        rng = self.rng
        a = rng.choice(sc.arrays)
        k = rng.choice(sc.ints)
        inner = sc.child()
        use = self.bump(inner, IndexGet(a, Var(k))) if rng.random() < 0.6 else IndexSet(a, Var(k), self.int_expr(inner))
        return [If(Compare(">=", Var(k), IntLit(0)), [If(Compare("<", Var(k), Length(a)), [use])])]

    def cast_guard(self, sc: _Scope, depth: int):
        rng = self.rng
        options = [(p, c) for p, t in sc.refs.items() for c in self.table.subclasses(t) if c != t]
        if not options:
            return None
        p, c = rng.choice(options)
        v = self.names.fresh(c[0].lower() + c[1:3])
        inner = sc.child()
        inner.refs[v] = c
        inner.safe.add(v)
        body = [Decl(c, v, Cast(c, Var(p))), self.deref_stmt(inner, v)]
        body += self.fragments(inner, depth + 1, 0, 1)
        return [If(InstanceOf(Var(p), c), body)]

    def arith(self, sc: _Scope, depth: int):
        rng = self.rng
        r = rng.random()
        if r < 0.4:
            t = self.names.fresh(rng.choice(["t", "d", "w"]))
            stmt = Decl(INT, t, self.int_expr(sc))
            sc.ints.append(t)
            return [stmt]
        if r < 0.7 or depth >= self.cfg.max_depth:
            return [self.bump(sc, self.int_expr(sc))]
        x = rng.choice(sc.ints) if sc.ints else sc.acc
        return [If(Compare(rng.choice(["<", ">", "==", "!=", "<=", ">="]), Var(x), self.small()),
                   [self.bump(sc.child(), self.int_expr(sc))], [self.bump(sc.child(), self.small())])]

    def new_obj(self, sc: _Scope, depth: int):
        rng = self.rng
        c = rng.choice(self.table.names[1:])
        q = self.names.fresh(c[0].lower())
        sc.refs[q] = c
        sc.safe.add(q)
        return [Decl(c, q, NewObj(c)), FieldSet(q, rng.choice(self.table.fields(c)), self.int_expr(sc))]

    def new_array(self, sc: _Scope, depth: int):
        rng = self.rng
        b = self.names.fresh(rng.choice(["buf", "tmp", "out"]))
        length = Length(rng.choice(sc.arrays)) if sc.arrays and rng.random() < 0.5 else IntLit(rng.randint(1, 6))
        sc.arrays.append(b)
        return [Decl(INT_ARRAY, b, NewArray(length))]

    def call(self, sc: _Scope, depth: int):
        callees = [h for h in self.helpers if h.name in self.callable]
        if not callees:
            return None
        h = self.rng.choice(callees)
        args = []
        for t, _ in h.params:
            if t == INT:
                args.append(self.int_expr(sc))
            elif t == INT_ARRAY:
                if not sc.arrays:
                    return None
                args.append(Var(self.rng.choice(sc.arrays)))
            else:
                fits = [p for p, c in sc.refs.items() if self.table.is_subclass(c, t)]
                args.append(Var(self.rng.choice(fits)) if fits else NullLit())
        call = CallExpr(h.name, tuple(args))
        if self.rng.random() < 0.3:
            return [CallStmt(call)]
        return [self.bump(sc, call)]

    FRAGMENTS = [("null_guard", 3.0), ("early_return", 1.2), ("array_loop", 2.5), ("bounds_guard", 1.5),
                 ("cast_guard", 1.5), ("count_loop", 1.0), ("arith", 2.0), ("new_obj", 0.7), ("new_array", 0.5),
                 ("call", 1.0)]

    def fragments(self, sc: _Scope, depth: int, lo: int, hi: int) -> list:
        out: list = []
        if depth > self.cfg.max_depth:
            return out
        want = self.rng.randint(lo, hi)
        tries = 0
        while len(out) < want and tries < 4 * want + 4:
            tries += 1
            names = [n for n, _ in self.FRAGMENTS]
            weights = [w for _, w in self.FRAGMENTS]
            name = self.rng.choices(names, weights)[0]
            got = getattr(self, name)(sc, depth)
            if got:
                out.extend(got)
        return out

    # methods

    def params(self, refs: int, arrays: int, ints: int) -> list[tuple[str, str]]:
        out = []
        for _ in range(refs):
            c = self.rng.choice(self.table.names[1:])
            out.append((c, self.names.fresh(self.rng.choice(["p", "q", "node", "cur", "obj"]))))
        for _ in range(arrays):
            out.append((INT_ARRAY, self.names.fresh(self.rng.choice(["a", "xs", "data", "vals"]))))
        for _ in range(ints):
            out.append((INT, self.names.fresh(self.rng.choice(["n", "lim", "k", "off"]))))
        self.rng.shuffle(out)
        return out

    def method(self, name: str, params, lo: int, hi: int) -> Method:
        acc = self.names.fresh(self.rng.choice(["s", "acc", "res", "sum"]))
        sc = _Scope([p for t, p in params if t == INT], {p: t for t, p in params if t not in (INT, INT_ARRAY)},
                    set(), [p for t, p in params if t == INT_ARRAY], acc)
        body = [Decl(INT, acc, self.small())] + self.fragments(sc, 0, lo, hi) + [Return(Var(acc))]
        return Method(name, INT, params, body)

    def program(self) -> Program:
        rng = self.rng
        decls = self.classes()
        self.table = self.table_of(decls)
        self.helpers: list[Method] = []
        self.callable: set[str] = set()
        methods = []
        for i in reversed(range(rng.randint(0, self.cfg.max_helpers))):
            self.names = _Names()
            params = self.params(rng.randint(0, 1), rng.randint(0, 1), rng.randint(1, 2))
            h = Method(f"aux{i}", INT, params, [])
            h = self.method(h.name, params, 1, 3)
            self.helpers.append(h)
            self.callable.add(h.name)
            methods.append(h)
        self.names = _Names()
        params = self.params(rng.randint(1, 2), rng.randint(1, 2), rng.randint(1, 2))
        target = self.method(rng.choice(TARGET_NAMES), params, self.cfg.min_fragments, self.cfg.max_fragments)
        return Program(decls, [target] + list(reversed(methods)))


def is_safe(program: Program, method: str, rng: random.Random, checks: int = 12) -> bool:
    """True when sampled inputs (nulls included) never fault or time out."""
    for _ in range(checks):
        try:
            if not isinstance(interpret(program, method, random_inputs(program, method, rng)), Ok):
                return False
        except Timeout:
            return False
    return True


def generate_program(rng: random.Random, cfg: GenConfig | None = None, max_tries: int = 50) -> Program:
    """A parsed, pretty-printed, interpreter-checked random program.

    The target method is ``program.methods[0]``.
    """
    cfg = cfg or GenConfig()
    for _ in range(max_tries):
        prog = _Gen(rng, cfg).program()
        program = parse(render(prog))
        if is_safe(program, program.methods[0].name, rng, cfg.checks):
            return program
    raise GenerationError(f"no safe program after {max_tries} attempts")
