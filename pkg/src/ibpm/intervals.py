"""Allen interval partitioning and derived (higher-order) graph sequences.

Only ``ControlFlow`` edges take part in partitioning. Other edge kinds are
carried along to the quotient graphs between the images of their endpoints.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from enum import Enum

from .graph import CF, Graph, InvalidGraph


@dataclass(frozen=True)
class Interval:
    header: int
    members: tuple[int, ...]  # header first, then in order of addition

    def __post_init__(self):
        if not self.members or self.members[0] != self.header:
            raise ValueError("interval members must start with the header")

    def __contains__(self, v) -> bool:
        return v in self.members

    def __len__(self) -> int:
        return len(self.members)

    @property
    def member_set(self) -> frozenset[int]:
        return frozenset(self.members)


@dataclass(frozen=True)
class IntervalPartition:
    intervals: tuple[Interval, ...]
    node_to_interval: dict[int, int] = field(compare=False)

    @property
    def is_identity(self) -> bool:
        return all(len(iv) == 1 for iv in self.intervals)

    def to_dict(self) -> dict:
        return {"intervals": [{"header": iv.header, "members": list(iv.members)} for iv in self.intervals]}


class Terminal(str, Enum):
    SINGLE_NODE = "SingleNode"
    IRREDUCIBLE = "Irreducible"


@dataclass(frozen=True)
class Level:
    graph: Graph
    partition: IntervalPartition


@dataclass(frozen=True)
class DerivedSequence:
    levels: tuple[Level, ...]
    # provenance[k]: node of levels[k + 1].graph -> the interval of levels[k] it replaces
    provenance: tuple[dict[int, Interval], ...]
    terminal: Terminal
    # CF edges collapsed by quotient deduplication when building levels[k + 1]
    dedup: tuple[int, ...]

    def __len__(self) -> int:
        return len(self.levels)

    @property
    def dedup_fired(self) -> bool:
        return any(self.dedup)

    @property
    def peak(self) -> int:
        """Index of the level propagated once at the top of an up/down sweep."""
        if self.terminal == Terminal.IRREDUCIBLE:
            return len(self.levels) - 1
        return max(0, len(self.levels) - 2)

    def to_dict(self) -> dict:
        return {
            "terminal": self.terminal.value,
            "levels": [
                {
                    "order": k + 1,
                    "graph": lv.graph.to_dict(),
                    "intervals": lv.partition.to_dict()["intervals"],
                    "provenance": (
                        {str(w): list(iv.members) for w, iv in sorted(self.provenance[k - 1].items())}
                        if k > 0 else {}
                    ),
                }
                for k, lv in enumerate(self.levels)
            ],
            "dedup": list(self.dedup),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), separators=(",", ":"))


def _require_rooted(g: Graph) -> None:
    if g.entry is None:
        raise InvalidGraph("graph has no entry node")
    seen = g.reachable(g.entry, CF)
    for v in g.nodes:
        if v not in seen:
            raise InvalidGraph(f"node {v} is unreachable from entry {g.entry}", node=v)


def partition(g: Graph) -> IntervalPartition:
    """Partition ``g`` into maximal single-entry intervals.

    Headers are taken from the worklist in ascending id order and candidate
    members are tested in ascending id order.
    """
    _require_rooted(g)
    pre = {v: g.predecessors(v, CF) - {v} for v in g.nodes}
    assigned: set[int] = set()
    worklist = {g.entry}
    intervals: list[Interval] = []
    while worklist:
        h = min(worklist)
        worklist.discard(h)
        members = [h]
        inside = {h}
        grown = True
        while grown:
            grown = False
            for v in g.nodes:
                if v in inside or v in assigned:
                    continue
                if pre[v] <= inside:
                    members.append(v)
                    inside.add(v)
                    grown = True
        assigned |= inside
        for v in g.nodes:
            if v in assigned:
                continue
            if pre[v] & inside and pre[v] - inside:
                worklist.add(v)
        intervals.append(Interval(h, tuple(members)))
    node_to_interval = {v: i for i, iv in enumerate(intervals) for v in iv.members}
    return IntervalPartition(tuple(intervals), node_to_interval)


def quotient(g: Graph, part: IntervalPartition, next_id: int) -> tuple[Graph, dict[int, Interval], int, int]:
    """Collapse each interval to a node.

    Singleton intervals keep their node id; larger intervals get fresh ids
    starting at ``next_id``. Returns the quotient graph, provenance, the next
    free id, and how many CF edges were dropped as duplicates.
    """
    image: dict[int, int] = {}
    provenance: dict[int, Interval] = {}
    for iv in part.intervals:
        if len(iv) == 1:
            w = iv.header
        else:
            w = next_id
            next_id += 1
        provenance[w] = iv
        for v in iv.members:
            image[v] = w
    seen: dict[tuple[int, int, str], int] = {}
    for s, d, k in g.edges:
        a, b = image[s], image[d]
        if a == b:
            continue
        seen[(a, b, k)] = seen.get((a, b, k), 0) + 1
    dup = sum(c - 1 for (a, b, k), c in seen.items() if k == CF.value)
    q = Graph(provenance.keys(), seen.keys(), image[g.entry])
    return q, provenance, next_id, dup


def derive(g: Graph) -> DerivedSequence:
    """Build the derived sequence until a single node or an irreducible graph."""
    _require_rooted(g)
    levels: list[Level] = []
    provenance: list[dict[int, Interval]] = []
    dedup: list[int] = []
    next_id = max(g.nodes) + 1
    current = g
    while True:
        part = partition(current)
        levels.append(Level(current, part))
        if len(current.nodes) == 1:
            terminal = Terminal.SINGLE_NODE
            break
        if part.is_identity:
            terminal = Terminal.IRREDUCIBLE
            break
        current, prov, next_id, dup = quotient(current, part, next_id)
        provenance.append(prov)
        dedup.append(dup)
    return DerivedSequence(tuple(levels), tuple(provenance), terminal, tuple(dedup))


def _cycles_avoiding(g: Graph, members: set[int], header: int) -> list[int] | None:
    """Return a closed path inside ``members`` that skips ``header``, if any."""
    rest = members - {header}
    color = {v: 0 for v in rest}
    stack_path: list[int] = []

    def visit(u: int) -> list[int] | None:
        color[u] = 1
        stack_path.append(u)
        for w in sorted(g.successors(u, CF)):
            if w not in rest or w == u:
                continue
            if color[w] == 1:
                return stack_path[stack_path.index(w):] + [w]
            if color[w] == 0:
                found = visit(w)
                if found:
                    return found
        stack_path.pop()
        color[u] = 2
        return None

    for v in sorted(rest):
        if color[v] == 0:
            found = visit(v)
            if found:
                return found
    return None


def check_interval(g: Graph, iv: Interval) -> list[str]:
    """List violations of the interval invariants (empty when valid)."""
    members = set(iv.members)
    problems = []
    for v in sorted(members):
        if v == iv.header:
            continue
        outside = sorted(u for u in g.predecessors(v, CF) if u not in members)
        if outside:
            problems.append(f"single-entry violated at node {v}: predecessor {outside[0]} is outside the interval")
    cycle = _cycles_avoiding(g, members, iv.header)
    if cycle:
        problems.append(f"closed path {cycle} avoids header {iv.header}")
    return problems
