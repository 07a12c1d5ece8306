"""Bug injection by guard removal or an off-by-one loop bound.

Each candidate mutation is confirmed with the interpreter: the injector only
returns once it has an input on which the mutated method faults with the
requested kind at the reported line.
"""

from __future__ import annotations

import copy
import random
from dataclasses import dataclass

from .ast import (INT, INT_ARRAY, Compare, If, InstanceOf, IntLit, Length, NullLit, Program, Return, Var, While, casts,
                  derefs, indexings, stmt_writes, walk_stmts)
from .classes import ClassTable
from .interp import BAD_CAST, FAULT_KINDS, INDEX_OOB, NULL_DEREF, Fault, Obj, Timeout, interpret, new_object
from .printer import render


class NotInjectable(ValueError):
    pass


@dataclass(frozen=True)
class Injection:
    program: Program
    method: str
    kind: str
    line: int
    trigger: dict
    site: str


def random_value(rng: random.Random, classes: ClassTable, typ: str, null_prob: float = 0.25):
    if typ == INT:
        return rng.randint(-3, 9)
    if typ == INT_ARRAY:
        return [rng.randint(-5, 9) for _ in range(rng.randint(0, 6))]
    if rng.random() < null_prob:
        return None
    subs = classes.subclasses(typ)
    cls = rng.choice(subs)
    return new_object(classes, cls, **{f: rng.randint(-3, 9) for f in classes.fields(cls)})


def random_inputs(program: Program, method: str, rng: random.Random, classes: ClassTable | None = None,
                  null_prob: float = 0.25) -> dict:
    """Random arguments for ``method``; arrays are never null, objects may be."""
    classes = classes or ClassTable.from_program(program)
    return {p: random_value(rng, classes, t, null_prob) for t, p in program.method(method).params}


def _blocks(body: list):
    """Every statement list in the method (the body and all nested blocks)."""
    yield body
    for s in walk_stmts(body):
        if isinstance(s, If):
            yield s.then
            if s.orelse is not None:
                yield s.orelse
        elif isinstance(s, While):
            yield s.body


def _first(stmts, pred):
    for s in walk_stmts(stmts):
        if pred(s):
            return s
    return None


def _var_of(e) -> str | None:
    return e.name if isinstance(e, Var) else None


def _uses_index(s, arr: str | None, var: str) -> bool:
    return any((arr is None or a == arr) and _var_of(i) == var for a, i in indexings(s))


@dataclass
class _Site:
    kind: str
    desc: str
    block: list
    pos: int
    apply: object        # callable mutating block in place
    faulty: object       # statement expected to fault
    param: str | None    # parameter to force in the trigger, if any
    force: object = None


def _sites(program: Program, method_name: str, classes: ClassTable, kind: str) -> list[_Site]:
    m = program.method(method_name)
    params = {p: t for t, p in m.params}
    out: list[_Site] = []

    def splice(block, pos, stmts):
        return lambda: block.__setitem__(slice(pos, pos + 1), stmts)

    for block in _blocks(m.body):
        for pos, s in enumerate(block):
            if not isinstance(s, (If, While)):
                continue
            c = s.cond
            if kind == NULL_DEREF and isinstance(s, If) and isinstance(c, Compare):
                p = _var_of(c.left) if isinstance(c.right, NullLit) else None
                if p is None or p not in params or params[p] in (INT, INT_ARRAY):
                    continue
                if c.op == "!=":
                    hit = _first(s.then, lambda t, p=p: p in derefs(t))
                    if hit is not None:
                        out.append(_Site(kind, "null-check", block, pos, splice(block, pos, s.then), hit, p))
                elif c.op == "==" and s.orelse is None and s.then and isinstance(s.then[-1], Return):
                    hit = None
                    for t in block[pos + 1:]:
                        hit = _first([t], lambda x, p=p: p in derefs(x))
                        if hit is not None or p in stmt_writes(t):
                            break
                    if hit is not None:
                        out.append(_Site(kind, "early-return null check", block, pos, splice(block, pos, []), hit, p))
            elif kind == INDEX_OOB and isinstance(c, Compare):
                i = _var_of(c.left)
                if i is None:
                    continue
                arr = c.right.arr if isinstance(c.right, Length) else None
                body = s.body if isinstance(s, While) else s.then
                if c.op == "<":
                    hit = _first(body, lambda t, i=i, arr=arr: _uses_index(t, arr, i))
                    if hit is None:
                        continue
                    if isinstance(s, While):
                        mutated = While(Compare("<=", c.left, c.right), s.body, s.line)
                        out.append(_Site(kind, "loop bound", block, pos,
                                         (lambda b=block, q=pos, w=mutated: b.__setitem__(q, w)), hit, None))
                    elif arr is not None and s.orelse is None:
                        out.append(_Site(kind, "upper bounds check", block, pos, splice(block, pos, s.then), hit, None))
                elif c.op == ">=" and isinstance(s, If) and s.orelse is None and c.right == IntLit(0):
                    hit = _first(s.then, lambda t, i=i: _uses_index(t, None, i))
                    if hit is not None:
                        out.append(_Site(kind, "lower bounds check", block, pos, splice(block, pos, s.then), hit, None))
            elif kind == BAD_CAST and isinstance(s, If) and isinstance(c, InstanceOf):
                p = _var_of(c.expr)
                if p is None or p not in params:
                    continue
                hit = _first(s.then, lambda t, p=p, cls=c.cls: (cls, Var(p)) in casts(t))
                if hit is None:
                    continue
                wrong = [k for k in classes.subclasses(params[p]) if not classes.is_subclass(k, c.cls)]
                if wrong:
                    out.append(_Site(kind, "instance check", block, pos, splice(block, pos, s.then), hit, p, wrong))
    return out


def _locate(program: Program, method: str, kind: str, site_index: int, classes: ClassTable):
    """Re-find a site on a fresh copy so mutation never touches the caller's AST."""
    clone = copy.deepcopy(program)
    site = _sites(clone, method, classes, kind)[site_index]
    return clone, site


def inject_bug(program: Program, method: str, kind: str, rng: random.Random,
               attempts: int = 200) -> Injection:
    """Mutate one guarded site of ``method`` so some input faults with ``kind``.

    Raises NotInjectable when no site of that kind can be confirmed.
    """
    if kind not in FAULT_KINDS:
        raise ValueError(f"unknown bug kind {kind!r}")
    classes = ClassTable.from_program(program)
    candidates = _sites(program, method, classes, kind)
    if not candidates:
        raise NotInjectable(f"{method}: no guarded site for {kind}")
    order = list(range(len(candidates)))
    rng.shuffle(order)
    for idx in order:
        clone, site = _locate(program, method, kind, int(idx), classes)
        site.apply()
        render(clone)
        line = site.faulty.line
        target = Fault(kind, line, method)
        for _ in range(attempts):
            inputs = random_inputs(clone, method, rng, classes, null_prob=0.0)
            if site.param is not None:
                if kind == NULL_DEREF:
                    inputs[site.param] = None
                else:
                    cls = rng.choice(site.force)
                    inputs[site.param] = new_object(classes, cls)
            trigger = copy.deepcopy(inputs)
            try:
                outcome = interpret(clone, method, inputs)
            except Timeout:
                continue
            if outcome == target:
                return Injection(clone, method, kind, line, trigger, site.desc)
    raise NotInjectable(f"{method}: no {kind} site could be confirmed by the interpreter")


def describe_trigger(trigger: dict) -> dict:
    """JSON-friendly view of trigger inputs."""
    def conv(v):
        if isinstance(v, Obj):
            return {"class": v.cls, "fields": dict(v.fields)}
        return v
    return {k: conv(v) for k, v in trigger.items()}
