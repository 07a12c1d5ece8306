"""Seeded random graph families for the propagation and interval property checks."""

from __future__ import annotations

import random

from .graph import Graph
from .intervals import Terminal, derive


def weakly_connected(rng: random.Random, n: int, p: float = 0.25) -> Graph:
    """Random directed graph on ``0..n-1`` that is weakly connected.

    A random spanning tree with random orientations guarantees connectivity;
    extra edges are added independently with probability ``p``.
    """
    edges = set()
    order = list(range(n))
    rng.shuffle(order)
    for i in range(1, n):
        a, b = order[i], order[rng.randrange(i)]
        edges.add((a, b) if rng.random() < 0.5 else (b, a))
    for a in range(n):
        for b in range(n):
            if a != b and rng.random() < p:
                edges.add((a, b))
    return Graph(range(n), sorted(edges), 0)


class _Builder:
    def __init__(self):
        self.n = 0
        self.edges: list[tuple[int, int]] = []

    def node(self) -> int:
        self.n += 1
        return self.n - 1

    def region(self, rng: random.Random, budget: int, depth: int) -> tuple[int, list[int]]:
        """Build a single-entry region; return its entry and its exits."""
        if budget <= 1 or depth > 4:
            v = self.node()
            return v, [v]
        choice = rng.random()
        if choice < 0.4:
            split = rng.randint(1, budget - 1)
            e1, x1 = self.region(rng, split, depth)
            e2, x2 = self.region(rng, budget - split, depth)
            for x in x1:
                self.edges.append((x, e2))
            return e1, x2
        if choice < 0.7:
            cond = self.node()
            rest = budget - 1
            t_budget = max(1, rest // 2)
            te, tx = self.region(rng, t_budget, depth + 1)
            self.edges.append((cond, te))
            if rest - t_budget >= 1 and rng.random() < 0.7:
                ee, ex = self.region(rng, rest - t_budget, depth + 1)
                self.edges.append((cond, ee))
                return cond, tx + ex
            return cond, tx + [cond]
        head = self.node()
        be, bx = self.region(rng, max(1, budget - 1), depth + 1)
        self.edges.append((head, be))
        for x in bx:
            self.edges.append((x, head))
        return head, [head]


def reducible_cfg(rng: random.Random, min_nodes: int = 3, max_nodes: int = 60) -> Graph:
    """Structured composition of sequence / if / while skeletons."""
    while True:
        b = _Builder()
        entry, _ = b.region(rng, rng.randint(min_nodes, max_nodes), 0)
        if min_nodes <= b.n <= max_nodes:
            return Graph(range(b.n), b.edges, entry)


def irreducible_cfg(rng: random.Random, min_nodes: int = 3, max_nodes: int = 40) -> Graph:
    """A reducible skeleton with a two-entry loop spliced onto one edge."""
    while True:
        g = reducible_cfg(rng, min_nodes, max(min_nodes, max_nodes - 2))
        edges = list(g.proper_edges())
        if not edges:
            continue
        x, y = edges[rng.randrange(len(edges))]
        a, b = len(g.nodes), len(g.nodes) + 1
        new = [e for e in edges if e != (x, y)] + [(x, a), (x, b), (a, b), (b, a), (rng.choice([a, b]), y)]
        out = Graph(range(len(g.nodes) + 2), new, g.entry)
        if derive(out).terminal == Terminal.IRREDUCIBLE:
            return out
