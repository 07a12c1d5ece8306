"""Callee inlining: stitch callee graphs onto their call sites."""

from __future__ import annotations

from dataclasses import replace

from ..graph import CF, EdgeKind, Graph
from ..methodgraph import MethodGraph
from .ast import Program
from .cfg import build_cfg
from .classes import ClassTable

CALL = EdgeKind.CALL


def inline(mg: MethodGraph, program: Program, depth: int, classes: ClassTable | None = None) -> MethodGraph:
    """Attach callees up to ``depth`` call layers below the target.

    Each method is copied in at most once; further call sites to it just get
    another seam. A seam is a Call edge plus a ControlFlow edge from the call
    statement to the callee entry, so callee statements stay reachable. Calls
    that would recurse into a method on the current call path are skipped and
    recorded in ``skipped_calls``.
    """
    if depth not in (0, 1, 2):
        raise ValueError(f"inline depth must be 0, 1 or 2, got {depth}")
    if depth == 0:
        return mg
    classes = classes or ClassTable.from_program(program)
    nodes = list(mg.nodes)
    edges = [tuple(e) for e in mg.graph.edges]
    labels = list(mg.labels)
    skipped = list(mg.skipped_calls)
    entry_of = {mg.target: 0}
    path_of = {mg.target: (mg.target,)}
    frontier = [(mg.target, list(range(len(nodes))))]
    for _ in range(depth):
        grown = []
        for caller, ids in frontier:
            for nid in ids:
                for callee in nodes[nid].calls:
                    if callee in path_of[caller]:
                        skipped.append(f"{caller}->{callee}@{nodes[nid].line}")
                        continue
                    if callee not in entry_of:
                        sub = build_cfg(program, callee, classes)
                        base = len(nodes)
                        entry_of[callee] = base
                        path_of[callee] = path_of[caller] + (callee,)
                        nodes.extend(sub.nodes)
                        labels.extend([0] * len(sub.nodes))
                        edges.extend((a + base, b + base, k) for a, b, k in sub.graph.edges)
                        grown.append((callee, list(range(base, len(nodes)))))
                    edges.append((nid, entry_of[callee], CALL))
                    edges.append((nid, entry_of[callee], CF))
        frontier = grown
    graph = Graph(range(len(nodes)), edges, 0)
    return replace(mg, graph=graph, nodes=tuple(nodes), labels=tuple(labels), skipped_calls=tuple(skipped))
