"""Lexer and recursive-descent parser for MiniLang.

The grammar is documented in ``docs/grammar.md``. Name resolution happens
during parsing, so undeclared variables, unknown classes, unknown fields and
unknown methods are reported with the offending position.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

from .ast import (INT, INT_ARRAY, OBJECT, VOID, Assign, BinOp, CallExpr, CallStmt, Cast, ClassDecl, Compare, Decl,
                  FieldGet, FieldSet, If, IndexGet, IndexSet, InstanceOf, IntLit, Length, Method, NewArray, NewObj,
                  NullLit, Program, Return, Var, While)
from .classes import ClassTable, ClassTableError


class ParseError(ValueError):
    def __init__(self, message: str, line: int, col: int):
        super().__init__(f"{line}:{col}: {message}")
        self.message = message
        self.line = line
        self.col = col


KEYWORDS = {"class", "extends", "def", "int", "void", "if", "else", "while", "return", "new", "null",
            "instanceof", "length"}
COMPARE_OPS = ("==", "!=", "<=", ">=", "<", ">")

_TOKEN_RE = re.compile(r"""
    (?P<ws>[ \t\r]+)
  | (?P<nl>\n)
  | (?P<comment>//[^\n]*)
  | (?P<num>\d+)
  | (?P<ident>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<op>==|!=|<=|>=|\[\]|[-+*<>=(){}\[\];,.])
""", re.VERBOSE)


@dataclass(frozen=True)
class Token:
    kind: str  # "num", "ident", "kw", "op", "eof"
    text: str
    line: int
    col: int


def tokenize(source: str) -> list[Token]:
    out: list[Token] = []
    line, line_start, pos = 1, 0, 0
    while pos < len(source):
        m = _TOKEN_RE.match(source, pos)
        if m is None:
            raise ParseError(f"unexpected character {source[pos]!r}", line, pos - line_start + 1)
        kind = m.lastgroup
        text = m.group()
        col = pos - line_start + 1
        if kind == "nl":
            line += 1
            line_start = m.end()
        elif kind == "ident":
            out.append(Token("kw" if text in KEYWORDS else "ident", text, line, col))
        elif kind in ("num", "op"):
            out.append(Token(kind, text, line, col))
        pos = m.end()
    out.append(Token("eof", "", line, pos - line_start + 1))
    return out


class _Parser:
    def __init__(self, tokens: list[Token]):
        self.toks = tokens
        self.i = 0
        self.classes: ClassTable | None = None
        self.signatures: dict[str, tuple[str, list[str]]] = {}
        self.scopes: list[dict[str, str]] = []
        self.symbols: dict[str, str] = {}

    # token plumbing

    @property
    def tok(self) -> Token:
        return self.toks[self.i]

    def peek(self, k: int = 1) -> Token:
        return self.toks[min(self.i + k, len(self.toks) - 1)]

    def error(self, message: str, tok: Token | None = None) -> ParseError:
        t = tok or self.tok
        return ParseError(message, t.line, t.col)

    def at(self, text: str) -> bool:
        return self.tok.text == text and self.tok.kind in ("op", "kw")

    def expect(self, text: str) -> Token:
        if not self.at(text):
            found = self.tok.text or "end of input"
            raise self.error(f"expected {text!r}, found {found!r}")
        t = self.tok
        self.i += 1
        return t

    def ident(self) -> Token:
        if self.tok.kind != "ident":
            raise self.error(f"expected identifier, found {self.tok.text or 'end of input'!r}")
        t = self.tok
        self.i += 1
        return t

    # program structure

    def program(self) -> Program:
        classes = []
        while self.at("class"):
            classes.append(self.class_decl())
        try:
            self.classes = ClassTable({c.name: (c.parent, tuple(c.fields)) for c in classes})
        except ClassTableError as exc:
            raise ParseError(str(exc), classes[0].line if classes else 1, 1) from None
        for c in classes:
            if c.parent not in self.classes:
                raise ParseError(f"unknown class {c.parent!r}", c.line, 1)
        # pre-pass over method headers so calls may refer forward
        start = self.i
        while self.tok.kind != "eof":
            t = self.tok
            if not self.at("def"):
                raise self.error(f"expected 'def', found {t.text!r}")
            name, ret, params = self.header()
            if name in self.signatures:
                raise self.error(f"method {name!r} defined twice", t)
            self.signatures[name] = (ret, [p[0] for p in params])
            self.skip_block()
        self.i = start
        methods = []
        while self.tok.kind != "eof":
            methods.append(self.method())
        return Program(classes, methods)

    def class_decl(self) -> ClassDecl:
        line = self.expect("class").line
        name = self.ident().text
        parent = OBJECT
        if self.at("extends"):
            self.i += 1
            parent = self.ident().text
        self.expect("{")
        fields = []
        while not self.at("}"):
            self.expect("int")
            f = self.ident()
            if f.text in fields:
                raise self.error(f"field {f.text!r} declared twice", f)
            fields.append(f.text)
            self.expect(";")
        self.expect("}")
        return ClassDecl(name, parent, fields, line)

    def type_name(self, allow_void: bool = False) -> str:
        if self.at("int"):
            self.i += 1
            if self.at("[]"):
                self.i += 1
                return INT_ARRAY
            return INT
        if allow_void and self.at("void"):
            self.i += 1
            return VOID
        name = self.ident()
        if self.classes is not None and name.text not in self.classes:
            raise self.error(f"unknown class {name.text!r}", name)
        return name.text

    def header(self):
        self.expect("def")
        ret = self.type_name(allow_void=True)
        name = self.ident().text
        self.expect("(")
        params = []
        while not self.at(")"):
            if params:
                self.expect(",")
            ptype = self.type_name()
            pname = self.ident()
            if any(p[1] == pname.text for p in params):
                raise self.error(f"parameter {pname.text!r} declared twice", pname)
            params.append((ptype, pname.text))
        self.expect(")")
        return name, ret, params

    def skip_block(self) -> None:
        self.expect("{")
        depth = 1
        while depth:
            if self.tok.kind == "eof":
                raise self.error("unterminated block")
            if self.at("{"):
                depth += 1
            elif self.at("}"):
                depth -= 1
            self.i += 1

    def method(self) -> Method:
        line = self.tok.line
        name, ret, params = self.header()
        self.symbols = {p[1]: p[0] for p in params}
        self.scopes = [dict(self.symbols)]
        self.current_ret = ret
        body = self.block()
        return Method(name, ret, params, body, line, dict(self.symbols))

    def block(self) -> list:
        self.expect("{")
        self.scopes.append({})
        body = []
        while not self.at("}"):
            body.append(self.statement())
        self.expect("}")
        self.scopes.pop()
        return body

    # names

    def lookup(self, tok: Token) -> str:
        for scope in reversed(self.scopes):
            if tok.text in scope:
                return scope[tok.text]
        raise self.error(f"undeclared identifier {tok.text!r}", tok)

    def declare(self, tok: Token, typ: str) -> None:
        if tok.text in self.symbols:
            raise self.error(f"variable {tok.text!r} already declared in this method", tok)
        self.symbols[tok.text] = typ
        self.scopes[-1][tok.text] = typ

    def require_class_var(self, tok: Token) -> str:
        t = self.lookup(tok)
        if t in (INT, INT_ARRAY):
            raise self.error(f"{tok.text!r} is not an object", tok)
        return t

    def require_array_var(self, tok: Token) -> None:
        if self.lookup(tok) != INT_ARRAY:
            raise self.error(f"{tok.text!r} is not an array", tok)

    def check_field(self, cls: str, ftok: Token) -> None:
        if ftok.text not in self.classes.fields(cls):
            raise self.error(f"class {cls} has no field {ftok.text!r}", ftok)

    # statements

    def statement(self):
        t = self.tok
        line = t.line
        if self.at("if"):
            self.i += 1
            self.expect("(")
            cond = self.condition()
            self.expect(")")
            then = self.block()
            orelse = None
            if self.at("else"):
                self.i += 1
                orelse = self.block()
            return If(cond, then, orelse, line)
        if self.at("while"):
            self.i += 1
            self.expect("(")
            cond = self.condition()
            self.expect(")")
            return While(cond, self.block(), line)
        if self.at("return"):
            self.i += 1
            value = None
            if not self.at(";"):
                value = self.expr()
            if (value is None) != (self.current_ret == VOID):
                raise self.error("return value does not match the method's return type", t)
            self.expect(";")
            return Return(value, line)
        if self.at("int") or (t.kind == "ident" and self.peek().kind == "ident"):
            typ = self.type_name()
            name = self.ident()
            self.expect("=")
            init = self.expr()
            self.expect(";")
            self.declare(name, typ)
            return Decl(typ, name.text, init, line)
        if t.kind == "ident" and self.peek().text == "(":
            call = self.call()
            self.expect(";")
            return CallStmt(call, line)
        if t.kind == "ident":
            name = self.ident()
            if self.at("."):
                self.i += 1
                cls = self.require_class_var(name)
                f = self.ident()
                self.check_field(cls, f)
                self.expect("=")
                value = self.expr()
                self.expect(";")
                return FieldSet(name.text, f.text, value, line)
            if self.at("["):
                self.require_array_var(name)
                self.i += 1
                index = self.expr()
                self.expect("]")
                self.expect("=")
                value = self.expr()
                self.expect(";")
                return IndexSet(name.text, index, value, line)
            self.lookup(name)
            self.expect("=")
            value = self.expr()
            self.expect(";")
            return Assign(name.text, value, line)
        raise self.error(f"unexpected {t.text or 'end of input'!r}")

    def condition(self):
        left = self.expr()
        if self.at("instanceof"):
            self.i += 1
            cls = self.ident()
            if cls.text not in self.classes:
                raise self.error(f"unknown class {cls.text!r}", cls)
            return InstanceOf(left, cls.text)
        for op in COMPARE_OPS:
            if self.at(op):
                self.i += 1
                return Compare(op, left, self.expr())
        raise self.error(f"expected comparison, found {self.tok.text or 'end of input'!r}")

    # expressions: additive > multiplicative > unary/cast > primary

    def expr(self):
        left = self.term()
        while self.at("+") or self.at("-"):
            op = self.tok.text
            self.i += 1
            left = BinOp(op, left, self.term())
        return left

    def term(self):
        left = self.factor()
        while self.at("*"):
            self.i += 1
            left = BinOp("*", left, self.factor())
        return left

    def factor(self):
        t = self.tok
        if t.kind == "num":
            self.i += 1
            return IntLit(int(t.text))
        if self.at("-") and self.peek().kind == "num":
            self.i += 2
            return IntLit(-int(self.toks[self.i - 1].text))
        if self.at("null"):
            self.i += 1
            return NullLit()
        if self.at("new"):
            self.i += 1
            if self.at("int"):
                self.i += 1
                self.expect("[")
                length = self.expr()
                self.expect("]")
                return NewArray(length)
            cls = self.ident()
            if cls.text not in self.classes:
                raise self.error(f"unknown class {cls.text!r}", cls)
            self.expect("(")
            self.expect(")")
            return NewObj(cls.text)
        if self.at("("):
            if self.peek().kind == "ident" and self.peek(2).text == ")" and self.peek().text in self.classes:
                self.i += 1
                cls = self.ident().text
                self.expect(")")
                return Cast(cls, self.factor())
            self.i += 1
            inner = self.expr()
            self.expect(")")
            return inner
        if t.kind == "ident":
            if self.peek().text == "(":
                return self.call()
            name = self.ident()
            if self.at("."):
                self.i += 1
                if self.at("length"):
                    self.require_array_var(name)
                    self.i += 1
                    return Length(name.text)
                cls = self.require_class_var(name)
                f = self.ident()
                self.check_field(cls, f)
                return FieldGet(name.text, f.text)
            if self.at("["):
                self.require_array_var(name)
                self.i += 1
                index = self.expr()
                self.expect("]")
                return IndexGet(name.text, index)
            self.lookup(name)
            return Var(name.text)
        raise self.error(f"unexpected {t.text or 'end of input'!r}")

    def call(self) -> CallExpr:
        name = self.ident()
        if name.text not in self.signatures:
            raise self.error(f"unknown method {name.text!r}", name)
        self.expect("(")
        args = []
        while not self.at(")"):
            if args:
                self.expect(",")
            args.append(self.expr())
        self.expect(")")
        want = len(self.signatures[name.text][1])
        if len(args) != want:
            raise self.error(f"{name.text} takes {want} arguments, got {len(args)}", name)
        return CallExpr(name.text, tuple(args))


def parse(source: str) -> Program:
    """Parse MiniLang source into a checked :class:`Program`."""
    return _Parser(tokenize(source)).program()
