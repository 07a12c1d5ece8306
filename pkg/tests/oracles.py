"""Independent reference computations shared by the tests."""

from collections import deque

import numpy as np

EPS = 1e-5
FLOOR = 1e-6


def rel_error(analytic: np.ndarray, numeric: np.ndarray) -> float:
    denom = np.maximum(np.maximum(np.abs(analytic), np.abs(numeric)), FLOOR)
    return float(np.max(np.abs(analytic - numeric) / denom)) if analytic.size else 0.0


def numeric_grad(f, x: np.ndarray, eps: float = EPS) -> np.ndarray:
    """d f / d x with ``x`` perturbed in place (f must read x)."""
    g = np.zeros_like(x)
    it = np.nditer(x, flags=["multi_index"])
    for _ in it:
        i = it.multi_index
        old = x[i]
        x[i] = old + eps
        up = f()
        x[i] = old - eps
        down = f()
        x[i] = old
        g[i] = (up - down) / (2 * eps)
    return g


def sigmoid(x):
    return 1 / (1 + np.exp(-x))


def scalar_gru(W, U, Uc, b, x, h):
    """Loop-by-loop reference of the gated update for one row."""
    H = len(h)
    out = np.zeros(H)
    gx = [sum(x[i] * W[i, j] for i in range(len(x))) + b[j] for j in range(3 * H)]
    gh = [sum(h[i] * U[i, j] for i in range(H)) for j in range(2 * H)]
    z = [sigmoid(gx[j] + gh[j]) for j in range(H)]
    r = [sigmoid(gx[H + j] + gh[H + j]) for j in range(H)]
    rh = [r[j] * h[j] for j in range(H)]
    for j in range(H):
        cand = np.tanh(gx[2 * H + j] + sum(rh[i] * Uc[i, j] for i in range(H)))
        out[j] = (1 - z[j]) * h[j] + z[j] * cand
    return out


def method_graph(n: int, edges, tokens=None, labels=None, target="m"):
    """A MethodGraph over nodes 0..n-1 with node 0 as entry."""
    from ibpm.graph import Graph
    from ibpm.methodgraph import MethodGraph, StmtNode

    tokens = tokens or [("def",)] + [("x", str(i % 10)) for i in range(1, n)]
    nodes = tuple(StmtNode(tuple(tokens[i]), i + 1, "entry" if i == 0 else "stmt", target) for i in range(n))
    labels = tuple(labels) if labels else ()
    kind = "NullDeref" if labels and any(labels) else "Clean"
    return MethodGraph(Graph(range(n), edges, 0), nodes, target, labels, kind)


def undirected(nodes, edges):
    adj = {v: set() for v in nodes}
    for s, d in edges:
        if s != d:
            adj[s].add(d)
            adj[d].add(s)
    return adj


def all_distances(nodes, edges) -> dict:
    """Undirected breadth-first distances from every node: ``{src: {dst: d}}``."""
    adj = undirected(nodes, edges)
    out = {}
    for src in nodes:
        seen = {src: 0}
        q = deque([src])
        while q:
            u = q.popleft()
            for w in adj[u]:
                if w not in seen:
                    seen[w] = seen[u] + 1
                    q.append(w)
        out[src] = seen
    return out


def ecc_diameter(nodes, edges) -> int:
    """Longest undirected shortest path, recomputed from scratch."""
    adj = undirected(nodes, edges)
    best = 0
    for src in nodes:
        seen = {src: 0}
        q = deque([src])
        while q:
            u = q.popleft()
            for w in adj[u]:
                if w not in seen:
                    seen[w] = seen[u] + 1
                    q.append(w)
        assert len(seen) == len(adj)
        best = max(best, max(seen.values()))
    return best


def cf_pairs(g, members=None):
    ms = set(g.nodes) if members is None else set(members)
    return {(s, d) for s, d, k in g.edges if k == "ControlFlow" and s != d and s in ms and d in ms}


def formula(seq) -> int:
    """The interval message-count law written out level by level."""
    n = len(seq.levels)
    from ibpm.intervals import Terminal

    top = n - 2 if seq.terminal == Terminal.SINGLE_NODE else n - 1
    top = max(top, 0)
    total = 0
    for j in range(top):
        g = seq.levels[j].graph
        for iv in seq.levels[j].partition.intervals:
            e = cf_pairs(g, iv.members)
            total += 2 * ecc_diameter(iv.members, e) * len(e)
    g = seq.levels[top].graph
    e = cf_pairs(g)
    total += ecc_diameter(g.nodes, e) * len(e)
    return total
