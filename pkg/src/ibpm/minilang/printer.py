"""Pretty-printer: one statement per line, four-space indentation.

``render`` also assigns each statement its printed line number (written back
onto the statement) so source lines and statement labels coincide.
"""

from __future__ import annotations

from .ast import (OBJECT, Assign, BinOp, CallExpr, CallStmt, Cast, Compare, Decl, FieldGet, FieldSet, If, IndexGet,
                  IndexSet, InstanceOf, IntLit, Length, NewArray, NewObj, NullLit, Program, Return, Var, While)

_PREC = {"+": 1, "-": 1, "*": 2}


def expr_str(e, prec: int = 0) -> str:
    if isinstance(e, IntLit):
        return str(e.value)
    if isinstance(e, NullLit):
        return "null"
    if isinstance(e, Var):
        return e.name
    if isinstance(e, FieldGet):
        return f"{e.obj}.{e.field}"
    if isinstance(e, Length):
        return f"{e.arr}.length"
    if isinstance(e, IndexGet):
        return f"{e.arr}[{expr_str(e.index)}]"
    if isinstance(e, NewObj):
        return f"new {e.cls}()"
    if isinstance(e, NewArray):
        return f"new int[{expr_str(e.length)}]"
    if isinstance(e, Cast):
        return f"({e.cls}) {expr_str(e.expr, 3)}"
    if isinstance(e, CallExpr):
        return f"{e.name}({', '.join(expr_str(a) for a in e.args)})"
    if isinstance(e, BinOp):
        p = _PREC[e.op]
        # left-associative: the right operand needs parens at equal precedence
        text = f"{expr_str(e.left, p)} {e.op} {expr_str(e.right, p + 1)}"
        return f"({text})" if p < prec else text
    if isinstance(e, Compare):
        return f"{expr_str(e.left)} {e.op} {expr_str(e.right)}"
    if isinstance(e, InstanceOf):
        return f"{expr_str(e.expr)} instanceof {e.cls}"
    raise TypeError(type(e))


def stmt_head(s) -> str:
    """The single printed line a statement starts with."""
    if isinstance(s, Decl):
        return f"{s.type} {s.name} = {expr_str(s.init)};"
    if isinstance(s, Assign):
        return f"{s.name} = {expr_str(s.value)};"
    if isinstance(s, FieldSet):
        return f"{s.obj}.{s.field} = {expr_str(s.value)};"
    if isinstance(s, IndexSet):
        return f"{s.arr}[{expr_str(s.index)}] = {expr_str(s.value)};"
    if isinstance(s, If):
        return f"if ({expr_str(s.cond)}) {{"
    if isinstance(s, While):
        return f"while ({expr_str(s.cond)}) {{"
    if isinstance(s, Return):
        return "return;" if s.value is None else f"return {expr_str(s.value)};"
    if isinstance(s, CallStmt):
        return f"{expr_str(s.call)};"
    raise TypeError(type(s))


def render(program: Program) -> str:
    lines: list[str] = []

    def emit(text: str, depth: int) -> int:
        lines.append("    " * depth + text)
        return len(lines)

    def block(stmts, depth: int) -> None:
        for s in stmts:
            s.line = emit(stmt_head(s), depth)
            if isinstance(s, If):
                block(s.then, depth + 1)
                if s.orelse is not None:
                    emit("} else {", depth)
                    block(s.orelse, depth + 1)
                emit("}", depth)
            elif isinstance(s, While):
                block(s.body, depth + 1)
                emit("}", depth)

    for c in program.classes:
        c.line = emit(f"class {c.name}" + ("" if c.parent == OBJECT else f" extends {c.parent}") + " {", 0)
        for f in c.fields:
            emit(f"int {f};", 1)
        emit("}", 0)
    for m in program.methods:
        if lines:
            emit("", 0)
        params = ", ".join(f"{t} {n}" for t, n in m.params)
        m.line = emit(f"def {m.ret} {m.name}({params}) {{", 0)
        block(m.body, 1)
        emit("}", 0)
    return "\n".join(lines) + "\n"
