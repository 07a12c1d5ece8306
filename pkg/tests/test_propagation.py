import random
from collections import deque

import pytest

from ibpm.fixtures import figure4
from ibpm.graph import Graph, chain
from ibpm.intervals import Terminal, derive
from ibpm.propagation import (DisconnectedGraph, InvalidSequence, closed_form_messages, ibpm_bound,
                              max_unit_diameter, run_ibpm_to_fixed_point, run_to_fixed_point)
from ibpm.randgraphs import irreducible_cfg, reducible_cfg, weakly_connected
from oracles import cf_pairs, ecc_diameter, formula, undirected


def test_two_nodes():
    reach, ledger = run_to_fixed_point(Graph([0, 1], [(0, 1)]))
    assert (reach.round, ledger.total) == (1, 1)


def test_directed_triangle():
    reach, ledger = run_to_fixed_point(Graph([0, 1, 2], [(0, 1), (1, 2), (2, 0)]))
    assert (reach.round, ledger.total) == (1, 3)


def test_figure_standard():
    g = figure4()
    reach, ledger = run_to_fixed_point(g)
    pi = ecc_diameter(g.nodes, cf_pairs(g))
    assert reach.round == pi
    assert ledger.total == pi * 9


def test_disconnected_graph():
    with pytest.raises(DisconnectedGraph):
        run_to_fixed_point(Graph([0, 1]))


def test_reach_sets_are_monotone_and_cover_components():
    g = figure4()
    from ibpm.propagation import _drive, MessageLedger
    sigma = {v: frozenset([v]) for v in g.nodes}
    history = [dict(sigma)]
    while True:
        before = dict(sigma)
        _drive(g, sigma, MessageLedger(), rounds=1)
        history.append(dict(sigma))
        if sigma == before:
            break
    for a, b in zip(history, history[1:]):
        assert all(a[v] <= b[v] for v in g.nodes)
    assert all(v in history[0][v] for v in g.nodes)
    assert all(s == frozenset(g.nodes) for s in history[-1].values())


def test_single_node_ibpm():
    seq = derive(Graph([0], [], 0))
    assert run_ibpm_to_fixed_point(seq).total == 0
    assert ibpm_bound(seq) == (0, True)


def test_chain_ibpm():
    seq = derive(chain(3, start=1))
    # one interval collapses to a single node, so the chain itself is the peak: diameter 2, two edges
    assert formula(seq) == 4
    assert run_ibpm_to_fixed_point(seq).total == 4
    assert ibpm_bound(seq) == (8, True)


def test_figure_ibpm():
    seq = derive(figure4())
    ledger = run_ibpm_to_fixed_point(seq)
    assert ledger.total == formula(seq) == closed_form_messages(seq)
    assert ledger.total == sum(ledger.per_round) == sum(ledger.breakdown.values())
    assert ibpm_bound(seq, ledger.total)[1]


def test_missing_provenance():
    seq = derive(figure4())
    broken = type(seq)(seq.levels, seq.provenance[:-1], seq.terminal, seq.dedup)
    with pytest.raises(InvalidSequence):
        run_ibpm_to_fixed_point(broken)


def test_distance_and_diameter_laws():
    rng = random.Random(21)
    for _ in range(1000):
        g = weakly_connected(rng, rng.randint(1, 12), rng.choice([0.05, 0.2, 0.4]))
        reach, ledger = run_to_fixed_point(g)
        e = cf_pairs(g)
        adj = undirected(g.nodes, e)
        for u in g.nodes:
            seen = {u: 0}
            q = deque([u])
            while q:
                a = q.popleft()
                for w in adj[a]:
                    if w not in seen:
                        seen[w] = seen[a] + 1
                        q.append(w)
            for v in g.nodes:
                assert reach.first_arrival[(u, v)] == seen[v]
        pi = ecc_diameter(g.nodes, e)
        assert reach.round == pi
        assert ledger.total == pi * len(e)
        assert ledger.per_round == [len(e)] * pi


def test_interval_law_reducible():
    rng = random.Random(22)
    for _ in range(500):
        seq = derive(reducible_cfg(rng, 3, 40))
        assert run_ibpm_to_fixed_point(seq).total == formula(seq)


def test_interval_law_irreducible():
    rng = random.Random(23)
    for _ in range(100):
        seq = derive(irreducible_cfg(rng))
        assert seq.terminal == Terminal.IRREDUCIBLE
        assert run_ibpm_to_fixed_point(seq).total == formula(seq)


def test_bound_on_reducible_graphs():
    rng = random.Random(24)
    checked = 0
    for _ in range(500):
        seq = derive(reducible_cfg(rng, 3, 60))
        if seq.dedup_fired:
            continue
        checked += 1
        total = run_ibpm_to_fixed_point(seq).total
        bound, holds = ibpm_bound(seq, total)
        assert holds, (bound, total, seq.levels[0].graph.to_json())
        assert bound == 2 * max_unit_diameter(seq) * len(cf_pairs(seq.levels[0].graph))
    assert checked > 100


def test_fixed_round_schedule():
    seq = derive(figure4())
    ledger = run_ibpm_to_fixed_point(seq, rounds=1)
    # one round per edge-carrying unit: {3,4,5,6} (4 edges) up and down,
    # {2,7,8} (2-8, 2-7, 8-7, 7-2) up and down, then the peak edge 1-9 once
    assert ledger.total == 2 * 4 + 2 * 4 + 1
