"""Statement-level control flow graphs with def-use edges and type tokens."""

from __future__ import annotations

from dataclasses import dataclass

from ..graph import CF, EdgeKind, Graph
from ..methodgraph import MethodGraph, StmtNode
from .ast import (INT, INT_ARRAY, Assign, BinOp, CallExpr, CallStmt, Cast, Compare, Decl, FieldGet, FieldSet, If, IndexGet, IndexSet,
                  InstanceOf, IntLit, Length, Method, NewArray, NewObj, NullLit, Program, Return, Var, While,
                  stmt_calls, stmt_reads, stmt_writes)
from .classes import ClassTable

NULL = "NULL"
NUM = "NUM"
DD = EdgeKind.DATA_DEPENDENCY


class UnreachableCode(ValueError):
    pass


class _Tokens:
    def __init__(self, method: Method, classes: ClassTable, program: Program):
        self.types = method.symbols
        self.classes = classes
        self.sigs = {m.name: (m.ret, [t for t, _ in m.params]) for m in program.methods}

    def typ(self, t: str) -> list[str]:
        return self.classes.type_tokens(t) if t in self.classes or t in (INT, INT_ARRAY) else [t]

    def var(self, name: str) -> list[str]:
        return self.typ(self.types[name])

    def expr(self, e) -> list[str]:
        if isinstance(e, IntLit):
            return [str(e.value)] if 0 <= e.value <= 9 else [NUM]
        if isinstance(e, NullLit):
            return [NULL]
        if isinstance(e, Var):
            return self.var(e.name)
        if isinstance(e, FieldGet):
            return self.var(e.obj) + [".", e.field]
        if isinstance(e, Length):
            return self.var(e.arr) + [".", "length"]
        if isinstance(e, IndexGet):
            return self.var(e.arr) + ["["] + self.expr(e.index) + ["]"]
        if isinstance(e, NewObj):
            return ["new"] + self.typ(e.cls)
        if isinstance(e, NewArray):
            return ["new", "int[]", "LEN"] + self.expr(e.length)
        if isinstance(e, Cast):
            return ["cast"] + self.typ(e.cls) + ["from"] + self.expr(e.expr)
        if isinstance(e, CallExpr):
            ret, params = self.sigs[e.name]
            out = ["call"] + self.typ(ret) + ["("]
            for p in params:
                out += self.typ(p)
            return out + [")"] + [t for a in e.args for t in self.expr(a)]
        if isinstance(e, BinOp):
            return self.expr(e.left) + [e.op] + self.expr(e.right)
        if isinstance(e, Compare):
            return self.expr(e.left) + [e.op] + self.expr(e.right)
        if isinstance(e, InstanceOf):
            return self.expr(e.expr) + ["instanceof"] + self.typ(e.cls)
        raise TypeError(type(e))

    def stmt(self, s) -> list[str]:
        if isinstance(s, Decl):
            return ["decl"] + self.typ(s.type) + ["="] + self.expr(s.init)
        if isinstance(s, Assign):
            return self.var(s.name) + ["="] + self.expr(s.value)
        if isinstance(s, FieldSet):
            return self.var(s.obj) + [".", s.field, "="] + self.expr(s.value)
        if isinstance(s, IndexSet):
            return self.var(s.arr) + ["["] + self.expr(s.index) + ["]", "="] + self.expr(s.value)
        if isinstance(s, If):
            return ["if"] + self.expr(s.cond)
        if isinstance(s, While):
            return ["while"] + self.expr(s.cond)
        if isinstance(s, Return):
            return ["return"] + ([] if s.value is None else self.expr(s.value))
        if isinstance(s, CallStmt):
            return self.expr(s.call)
        raise TypeError(type(s))

    def entry(self, m: Method) -> list[str]:
        out = ["def"] + self.typ(m.ret) + ["("]
        for t, _ in m.params:
            out += self.typ(t)
        return out + [")"]


@dataclass
class MethodCfg:
    """Raw builder output; ``stmts[i]`` is the AST statement of node ``i`` (None for the entry)."""

    method: Method
    stmts: list
    cf_edges: list[tuple[int, int]]
    defs: list[set[str]]
    uses: list[set[str]]
    dd_edges: list[tuple[int, int]]


def control_flow(method: Method) -> tuple[list, list[tuple[int, int]]]:
    """Nodes in pre-order (entry first) and the control flow edges between them."""
    stmts: list = [None]
    edges: list[tuple[int, int]] = []

    def new(s, preds) -> int:
        stmts.append(s)
        n = len(stmts) - 1
        edges.extend((p, n) for p in preds)
        return n

    def seq(body, preds: list[int]) -> list[int]:
        for s in body:
            if not preds:
                raise UnreachableCode(f"{method.name}: unreachable statement at line {s.line}")
            preds = one(s, preds)
        return preds

    def one(s, preds: list[int]) -> list[int]:
        n = new(s, preds)
        if isinstance(s, If):
            exits = seq(s.then, [n])
            exits += seq(s.orelse, [n]) if s.orelse is not None else [n]
            return sorted(set(exits))
        if isinstance(s, While):
            for b in seq(s.body, [n]):
                edges.append((b, n))
            return [n]
        if isinstance(s, Return):
            return []
        return [n]

    seq(method.body, [0])
    return stmts, edges


def reaching_definitions(n: int, edges, defs: list[set[str]]) -> list[set[tuple[int, str]]]:
    """IN sets of the classic forward may-analysis, iterated to a fixed point."""
    preds = [[] for _ in range(n)]
    for a, b in edges:
        preds[b].append(a)
    gen = [{(i, v) for v in defs[i]} for i in range(n)]
    out = [set(g) for g in gen]
    ins: list[set[tuple[int, str]]] = [set() for _ in range(n)]
    changed = True
    while changed:
        changed = False
        for i in range(n):
            new_in = set().union(*(out[p] for p in preds[i])) if preds[i] else set()
            new_out = gen[i] | {(d, v) for d, v in new_in if v not in defs[i]}
            if new_in != ins[i] or new_out != out[i]:
                ins[i], out[i] = new_in, new_out
                changed = True
    return ins


def analyse(method: Method) -> MethodCfg:
    stmts, cf = control_flow(method)
    n = len(stmts)
    defs = [{p for _, p in method.params}] + [stmt_writes(s) for s in stmts[1:]]
    uses = [set()] + [stmt_reads(s) for s in stmts[1:]]
    ins = reaching_definitions(n, cf, defs)
    dd = sorted({(d, u) for u in range(n) for d, v in ins[u] if v in uses[u]})
    return MethodCfg(method, stmts, cf, defs, uses, dd)


def build_cfg(program: Program, method_name: str, classes: ClassTable | None = None) -> MethodGraph:
    """Statement-level graph of one method (no inlining)."""
    classes = classes or ClassTable.from_program(program)
    method = program.method(method_name)
    info = analyse(method)
    tok = _Tokens(method, classes, program)
    nodes = [StmtNode(tuple(tok.entry(method)), method.line, "entry", method.name)]
    for s in info.stmts[1:]:
        kind = "cond" if isinstance(s, (If, While)) else "stmt"
        nodes.append(StmtNode(tuple(tok.stmt(s)), s.line, kind, method.name, tuple(stmt_calls(s))))
    edges = [(a, b, CF) for a, b in info.cf_edges] + [(a, b, DD) for a, b in info.dd_edges]
    return MethodGraph(Graph(range(len(nodes)), edges, 0), tuple(nodes), method.name)


__all__ = ["NULL", "NUM", "MethodCfg", "UnreachableCode", "analyse", "build_cfg", "control_flow",
           "reaching_definitions"]
