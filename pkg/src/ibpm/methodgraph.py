"""Statement-level method graph: the unit the model consumes."""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace

from .graph import Graph

CLEAN = "Clean"


@dataclass(frozen=True)
class StmtNode:
    tokens: tuple[str, ...]
    line: int
    kind: str  # "entry", "stmt", "cond"
    method: str
    calls: tuple[str, ...] = ()

    def to_dict(self) -> dict:
        d = {"tokens": list(self.tokens), "line": self.line, "kind": self.kind, "method": self.method}
        if self.calls:
            d["calls"] = list(self.calls)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "StmtNode":
        return cls(tuple(d["tokens"]), d["line"], d["kind"], d["method"], tuple(d.get("calls", ())))


@dataclass(frozen=True)
class MethodGraph:
    graph: Graph
    nodes: tuple[StmtNode, ...]
    target: str
    labels: tuple[int, ...] = ()
    bug_kind: str = CLEAN
    skipped_calls: tuple[str, ...] = field(default=())

    def __post_init__(self):
        if not self.labels:
            object.__setattr__(self, "labels", (0,) * len(self.nodes))
        if tuple(self.graph.nodes) != tuple(range(len(self.nodes))):
            raise ValueError("method graph nodes must be 0..n-1")

    @property
    def method_label(self) -> int:
        return int(any(self.labels))

    @property
    def tokens(self) -> list[tuple[str, ...]]:
        return [n.tokens for n in self.nodes]

    def rankable(self) -> list[int]:
        """Statement nodes of the target method (the only ones that get ranked)."""
        return [i for i, n in enumerate(self.nodes) if n.method == self.target and n.kind != "entry"]

    def with_labels(self, faulty_lines, bug_kind: str) -> "MethodGraph":
        lines = set(faulty_lines)
        labels = tuple(int(n.method == self.target and n.kind != "entry" and n.line in lines) for n in self.nodes)
        return replace(self, labels=labels, bug_kind=bug_kind)

    def to_dict(self) -> dict:
        return {
            "target": self.target,
            "bug_kind": self.bug_kind,
            "graph": self.graph.to_dict(),
            "nodes": [n.to_dict() for n in self.nodes],
            "labels": list(self.labels),
            "skipped_calls": list(self.skipped_calls),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "MethodGraph":
        return cls(Graph.from_dict(d["graph"]), tuple(StmtNode.from_dict(n) for n in d["nodes"]),
                   d["target"], tuple(d["labels"]), d.get("bug_kind", CLEAN), tuple(d.get("skipped_calls", ())))

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), separators=(",", ":"))
