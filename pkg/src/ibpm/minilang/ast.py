"""MiniLang syntax tree.

Line numbers are carried on statements but excluded from equality, so a
program re-parsed from its pretty-printed form compares equal to the original.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Union

INT, INT_ARRAY, VOID, OBJECT = "int", "int[]", "void", "Object"


# expressions

@dataclass(frozen=True)
class IntLit:
    value: int


@dataclass(frozen=True)
class NullLit:
    pass


@dataclass(frozen=True)
class Var:
    name: str


@dataclass(frozen=True)
class FieldGet:
    obj: str
    field: str


@dataclass(frozen=True)
class Length:
    arr: str


@dataclass(frozen=True)
class IndexGet:
    arr: str
    index: "Expr"


@dataclass(frozen=True)
class NewObj:
    cls: str


@dataclass(frozen=True)
class NewArray:
    length: "Expr"


@dataclass(frozen=True)
class Cast:
    cls: str
    expr: "Expr"


@dataclass(frozen=True)
class CallExpr:
    name: str
    args: tuple["Expr", ...]


@dataclass(frozen=True)
class BinOp:
    op: str
    left: "Expr"
    right: "Expr"


Expr = Union[IntLit, NullLit, Var, FieldGet, Length, IndexGet, NewObj, NewArray, Cast, CallExpr, BinOp]


@dataclass(frozen=True)
class Compare:
    op: str
    left: Expr
    right: Expr


@dataclass(frozen=True)
class InstanceOf:
    expr: Expr
    cls: str


Cond = Union[Compare, InstanceOf]


# statements

@dataclass(eq=True)
class Decl:
    type: str
    name: str
    init: Expr
    line: int = field(default=0, compare=False)


@dataclass(eq=True)
class Assign:
    name: str
    value: Expr
    line: int = field(default=0, compare=False)


@dataclass(eq=True)
class FieldSet:
    obj: str
    field: str
    value: Expr
    line: int = field(default=0, compare=False)


@dataclass(eq=True)
class IndexSet:
    arr: str
    index: Expr
    value: Expr
    line: int = field(default=0, compare=False)


@dataclass(eq=True)
class If:
    cond: Cond
    then: list
    orelse: list | None = None
    line: int = field(default=0, compare=False)


@dataclass(eq=True)
class While:
    cond: Cond
    body: list
    line: int = field(default=0, compare=False)


@dataclass(eq=True)
class Return:
    value: Expr | None = None
    line: int = field(default=0, compare=False)


@dataclass(eq=True)
class CallStmt:
    call: CallExpr
    line: int = field(default=0, compare=False)


Stmt = Union[Decl, Assign, FieldSet, IndexSet, If, While, Return, CallStmt]


@dataclass(eq=True)
class Method:
    name: str
    ret: str
    params: list[tuple[str, str]]  # (type, name)
    body: list
    line: int = field(default=0, compare=False)
    # filled by the parser: every variable of the method -> declared type
    symbols: dict[str, str] = field(default_factory=dict, compare=False)


@dataclass(eq=True)
class ClassDecl:
    name: str
    parent: str
    fields: list[str]
    line: int = field(default=0, compare=False)


@dataclass(eq=True)
class Program:
    classes: list[ClassDecl]
    methods: list[Method]

    def method(self, name: str) -> Method:
        for m in self.methods:
            if m.name == name:
                return m
        raise KeyError(name)


# traversal helpers

def walk_stmts(stmts):
    """Every statement in ``stmts``, nested ones included, in source order."""
    for s in stmts:
        yield s
        if isinstance(s, If):
            yield from walk_stmts(s.then)
            if s.orelse:
                yield from walk_stmts(s.orelse)
        elif isinstance(s, While):
            yield from walk_stmts(s.body)


def walk_expr(e):
    yield e
    if isinstance(e, IndexGet):
        yield from walk_expr(e.index)
    elif isinstance(e, NewArray):
        yield from walk_expr(e.length)
    elif isinstance(e, Cast):
        yield from walk_expr(e.expr)
    elif isinstance(e, CallExpr):
        for a in e.args:
            yield from walk_expr(a)
    elif isinstance(e, BinOp):
        yield from walk_expr(e.left)
        yield from walk_expr(e.right)
    elif isinstance(e, Compare):
        yield from walk_expr(e.left)
        yield from walk_expr(e.right)
    elif isinstance(e, InstanceOf):
        yield from walk_expr(e.expr)


def stmt_exprs(s) -> list:
    """Expressions evaluated by the statement itself (not by nested blocks)."""
    if isinstance(s, Decl):
        return [s.init]
    if isinstance(s, Assign):
        return [s.value]
    if isinstance(s, FieldSet):
        return [s.value]
    if isinstance(s, IndexSet):
        return [s.index, s.value]
    if isinstance(s, (If, While)):
        return [s.cond]
    if isinstance(s, Return):
        return [] if s.value is None else [s.value]
    if isinstance(s, CallStmt):
        return [s.call]
    raise TypeError(type(s))


def stmt_reads(s) -> set[str]:
    """Variables read by the statement itself."""
    names = set()
    if isinstance(s, FieldSet):
        names.add(s.obj)
    elif isinstance(s, IndexSet):
        names.add(s.arr)
    for e in stmt_exprs(s):
        for sub in walk_expr(e):
            if isinstance(sub, Var):
                names.add(sub.name)
            elif isinstance(sub, FieldGet):
                names.add(sub.obj)
            elif isinstance(sub, (Length, IndexGet)):
                names.add(sub.arr)
    return names


def stmt_writes(s) -> set[str]:
    if isinstance(s, (Decl, Assign)):
        return {s.name}
    return set()


def stmt_calls(s) -> list[str]:
    return [sub.name for e in stmt_exprs(s) for sub in walk_expr(e) if isinstance(sub, CallExpr)]


def derefs(s) -> set[str]:
    """Reference variables dereferenced by the statement (field access)."""
    out = set()
    if isinstance(s, FieldSet):
        out.add(s.obj)
    for e in stmt_exprs(s):
        for sub in walk_expr(e):
            if isinstance(sub, FieldGet):
                out.add(sub.obj)
    return out


def indexings(s) -> set[tuple[str, Expr]]:
    out = set()
    if isinstance(s, IndexSet):
        out.add((s.arr, s.index))
    for e in stmt_exprs(s):
        for sub in walk_expr(e):
            if isinstance(sub, IndexGet):
                out.add((sub.arr, sub.index))
    return out


def casts(s) -> set[tuple[str, Expr]]:
    return {(sub.cls, sub.expr) for e in stmt_exprs(s) for sub in walk_expr(e) if isinstance(sub, Cast)}


def to_dict(node):
    """Plain JSON-ready view of any syntax node (line numbers included)."""
    if isinstance(node, list):
        return [to_dict(x) for x in node]
    if isinstance(node, tuple):
        return [to_dict(x) for x in node]
    if isinstance(node, dict):
        return {k: to_dict(v) for k, v in node.items()}
    if hasattr(node, "__dataclass_fields__"):
        out = {"node": type(node).__name__}
        for name in node.__dataclass_fields__:
            if name == "symbols":
                continue
            out[name] = to_dict(getattr(node, name))
        return out
    return node
