"""Directed multigraph with typed edges.

Graphs are immutable value objects. Node ids are non-negative integers; edges
are ``(src, dst, kind)`` triples stored in canonical (sorted, deduplicated)
order so that serialization is byte-stable.
"""

from __future__ import annotations

import json
from collections import deque
from dataclasses import dataclass
from enum import Enum
from functools import cached_property
from typing import Iterable, NamedTuple

FORMAT_VERSION = 1


class EdgeKind(str, Enum):
    """Built-in edge kinds. Any other string is accepted as an extension tag."""

    CONTROL_FLOW = "ControlFlow"
    DATA_DEPENDENCY = "DataDependency"
    CALL = "Call"

    def __str__(self) -> str:
        return self.value


CF = EdgeKind.CONTROL_FLOW


class Mode(str, Enum):
    DIRECTED = "directed"
    SYMMETRIZED = "symmetrized"


class GraphError(ValueError):
    """Base class for graph errors."""


class InvalidArgument(GraphError):
    pass


class InvalidGraph(GraphError):
    def __init__(self, message: str, node: int | None = None):
        super().__init__(message)
        self.node = node


class DiameterUndefined(GraphError):
    def __init__(self, pair: tuple[int, int]):
        super().__init__(f"diameter undefined: no path between {pair[0]} and {pair[1]}")
        self.pair = pair


class Edge(NamedTuple):
    src: int
    dst: int
    kind: str


def _kind(k) -> str:
    return k.value if isinstance(k, EdgeKind) else str(k)


@dataclass(frozen=True, eq=False)
class Graph:
    nodes: tuple[int, ...]
    edges: tuple[Edge, ...]
    entry: int | None = None

    def __init__(self, nodes: Iterable[int], edges: Iterable = (), entry: int | None = None):
        ns = tuple(sorted(set(int(n) for n in nodes)))
        if any(n < 0 for n in ns):
            raise InvalidArgument("node ids must be non-negative")
        nset = set(ns)
        es = set()
        for e in edges:
            if len(e) == 2:
                src, dst, kind = e[0], e[1], CF.value
            else:
                src, dst, kind = e[0], e[1], _kind(e[2])
            src, dst = int(src), int(dst)
            if src not in nset or dst not in nset:
                raise InvalidArgument(f"edge ({src}, {dst}) has an endpoint outside the node set")
            es.add(Edge(src, dst, kind))
        if entry is not None and int(entry) not in nset:
            raise InvalidArgument(f"entry {entry} is not a node")
        object.__setattr__(self, "nodes", ns)
        object.__setattr__(self, "edges", tuple(sorted(es)))
        object.__setattr__(self, "entry", None if entry is None else int(entry))

    def __eq__(self, other) -> bool:
        if not isinstance(other, Graph):
            return NotImplemented
        return (self.nodes, self.edges, self.entry) == (other.nodes, other.edges, other.entry)

    def __hash__(self) -> int:
        return hash((self.nodes, self.edges, self.entry))

    def __repr__(self) -> str:
        return f"Graph(nodes={len(self.nodes)}, edges={len(self.edges)}, entry={self.entry})"

    def __len__(self) -> int:
        return len(self.nodes)

    def __contains__(self, v) -> bool:
        return v in self._node_set

    @cached_property
    def _node_set(self) -> frozenset[int]:
        return frozenset(self.nodes)

    @cached_property
    def _adj(self) -> dict[str, tuple[dict[int, set[int]], dict[int, set[int]]]]:
        out: dict[str, tuple[dict, dict]] = {}
        for s, d, k in self.edges:
            succ, pred = out.setdefault(k, ({}, {}))
            succ.setdefault(s, set()).add(d)
            pred.setdefault(d, set()).add(s)
        return out

    def _check(self, v: int) -> None:
        if v not in self._node_set:
            raise InvalidArgument(f"unknown node {v}")

    def predecessors(self, v: int, kind=CF) -> set[int]:
        self._check(v)
        return set(self._adj.get(_kind(kind), ({}, {}))[1].get(v, ()))

    def successors(self, v: int, kind=CF) -> set[int]:
        self._check(v)
        return set(self._adj.get(_kind(kind), ({}, {}))[0].get(v, ()))

    def edges_of(self, kind=CF) -> list[Edge]:
        k = _kind(kind)
        return [e for e in self.edges if e.kind == k]

    def proper_edges(self, kind=CF) -> list[tuple[int, int]]:
        """Distinct ``(src, dst)`` pairs of one kind, self-loops excluded."""
        k = _kind(kind)
        return [(s, d) for s, d, ek in self.edges if ek == k and s != d]

    def neighbors(self, v: int, mode: Mode = Mode.DIRECTED, kind=CF) -> set[int]:
        self._check(v)
        succ, pred = self._adj.get(_kind(kind), ({}, {}))
        out = set(succ.get(v, ()))
        if mode == Mode.SYMMETRIZED:
            out |= pred.get(v, set())
        out.discard(v)
        return out

    def bfs(self, source: int, mode: Mode = Mode.DIRECTED, kind=CF) -> dict[int, int]:
        """Shortest hop counts from ``source`` to every reachable node."""
        self._check(source)
        dist = {source: 0}
        queue = deque([source])
        while queue:
            u = queue.popleft()
            for w in self.neighbors(u, mode, kind):
                if w not in dist:
                    dist[w] = dist[u] + 1
                    queue.append(w)
        return dist

    def distance(self, u: int, v: int, mode: Mode = Mode.DIRECTED, kind=CF) -> int | None:
        """Shortest-path length from ``u`` to ``v``; ``None`` when unreachable."""
        self._check(v)
        return self.bfs(u, mode, kind).get(v)

    def diameter(self, mode: Mode = Mode.DIRECTED, kind=CF) -> int:
        best = 0
        for u in self.nodes:
            dist = self.bfs(u, mode, kind)
            if len(dist) != len(self.nodes):
                missing = next(v for v in self.nodes if v not in dist)
                raise DiameterUndefined((u, missing))
            best = max(best, max(dist.values()))
        return best

    def reachable(self, source: int, kind=CF) -> set[int]:
        return set(self.bfs(source, Mode.DIRECTED, kind))

    def is_weakly_connected(self, kind=CF) -> bool:
        if not self.nodes:
            return True
        return len(self.bfs(self.nodes[0], Mode.SYMMETRIZED, kind)) == len(self.nodes)

    def induced(self, members: Iterable[int], kinds: Iterable | None = None) -> "Graph":
        """Subgraph on ``members``; keeps every edge kind unless ``kinds`` is given."""
        ms = set(members)
        keep = None if kinds is None else {_kind(k) for k in kinds}
        edges = [e for e in self.edges if e.src in ms and e.dst in ms and (keep is None or e.kind in keep)]
        entry = self.entry if self.entry in ms else None
        return Graph(ms, edges, entry)

    def with_entry(self, entry: int | None) -> "Graph":
        return Graph(self.nodes, self.edges, entry)

    def relabel(self, mapping: dict[int, int]) -> "Graph":
        entry = None if self.entry is None else mapping[self.entry]
        return Graph((mapping[n] for n in self.nodes),
                     ((mapping[s], mapping[d], k) for s, d, k in self.edges), entry)

    # serialization

    def to_dict(self) -> dict:
        return {
            "version": FORMAT_VERSION,
            "nodes": list(self.nodes),
            "entry": self.entry,
            "edges": [{"src": s, "dst": d, "kind": k} for s, d, k in self.edges],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "Graph":
        version = data.get("version")
        if version != FORMAT_VERSION:
            raise InvalidArgument(f"unsupported graph format version {version!r}")
        edges = [(e["src"], e["dst"], e.get("kind", CF.value)) for e in data.get("edges", [])]
        return cls(data["nodes"], edges, data.get("entry"))

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), separators=(",", ":"))

    @classmethod
    def from_json(cls, text: str) -> "Graph":
        return cls.from_dict(json.loads(text))

    def to_dot(self, name: str = "G", labels: dict[int, str] | None = None) -> str:
        styles = {CF.value: "solid", EdgeKind.DATA_DEPENDENCY.value: "dashed", EdgeKind.CALL.value: "bold"}
        lines = [f"digraph {name} {{"]
        for n in self.nodes:
            label = labels.get(n, str(n)) if labels else str(n)
            label = label.replace('"', '\\"')
            shape = ' shape=doublecircle' if n == self.entry else ""
            lines.append(f'  n{n} [label="{label}"{shape}];')
        for s, d, k in self.edges:
            lines.append(f'  n{s} -> n{d} [style={styles.get(k, "dotted")}];')
        lines.append("}")
        return "\n".join(lines) + "\n"


def chain(n: int, start: int = 0) -> Graph:
    ids = list(range(start, start + n))
    return Graph(ids, zip(ids, ids[1:]), ids[0] if ids else None)
