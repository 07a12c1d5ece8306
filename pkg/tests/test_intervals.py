import random

import pytest

from ibpm.fixtures import FIGURE4_LEVELS
from ibpm.graph import CF, EdgeKind, Graph, InvalidGraph, chain
from ibpm.intervals import Interval, Terminal, check_interval, derive, partition
from ibpm.randgraphs import irreducible_cfg, reducible_cfg


def member_sets(part):
    return [set(iv.members) for iv in part.intervals]


def is_maximal(g: Graph, part) -> bool:
    """No node outside an interval (other than the entry) has all its predecessors inside it."""
    for iv in part.intervals:
        inside = set(iv.members)
        for v in g.nodes:
            if v in inside or v == g.entry:
                continue
            preds = g.predecessors(v, CF) - {v}
            if preds and preds <= inside:
                return False
    return True


def test_figure_first_order(fig4):
    assert member_sets(partition(fig4)) == FIGURE4_LEVELS[0]


def test_figure_derived_sequence(fig4):
    seq = derive(fig4)
    assert [member_sets(lv.partition) for lv in seq.levels] == FIGURE4_LEVELS
    assert seq.terminal == Terminal.SINGLE_NODE
    # the collapsed loop {3,4,5,6} becomes node 8 and absorbs into {2,7,8}
    assert set(seq.provenance[0][8].members) == {3, 4, 5, 6}
    assert set(seq.provenance[1][9].members) == {2, 7, 8}
    assert not seq.dedup_fired


def test_single_node():
    g = Graph([4], [], 4)
    assert member_sets(partition(g)) == [{4}]
    seq = derive(g)
    assert len(seq) == 1 and seq.terminal == Terminal.SINGLE_NODE


def test_chain_is_one_interval():
    part = partition(chain(3, start=1))
    assert [iv.members for iv in part.intervals] == [(1, 2, 3)]


def test_two_entry_loop_is_irreducible():
    g = Graph([0, 1, 2], [(0, 1), (0, 2), (1, 2), (2, 1)], 0)
    seq = derive(g)
    assert seq.terminal == Terminal.IRREDUCIBLE
    assert partition(g).is_identity


def test_missing_entry_and_unreachable_node():
    with pytest.raises(InvalidGraph):
        partition(Graph([0, 1], [(0, 1)]))
    with pytest.raises(InvalidGraph) as exc:
        partition(Graph([0, 1, 2], [(0, 1)], 0))
    assert exc.value.node == 2


def test_check_interval_examples(fig4):
    assert check_interval(fig4, Interval(3, (3, 4, 5, 6))) == []
    problems = check_interval(fig4, Interval(4, (4, 3, 5, 6)))
    assert any("node 3" in p and "single-entry" in p for p in problems)
    assert check_interval(fig4, Interval(1, (1,))) == []


def test_check_interval_finds_headerless_cycle():
    g = Graph([0, 1, 2], [(0, 1), (1, 2), (2, 1)], 0)
    problems = check_interval(g, Interval(0, (0, 1, 2)))
    assert any("avoids header" in p for p in problems)


def test_data_dependency_edges_do_not_shape_intervals():
    g = Graph([0, 1, 2], [(0, 1), (1, 2), (2, 1, EdgeKind.DATA_DEPENDENCY)], 0)
    assert member_sets(partition(g)) == [{0, 1, 2}]


def test_data_dependency_edges_follow_the_quotient():
    dd = EdgeKind.DATA_DEPENDENCY
    # loop 1-2 collapses; the DD edge from 0 into it survives, the internal one vanishes
    g = Graph([0, 1, 2, 3], [(0, 1), (1, 2), (2, 1), (1, 3), (0, 2, dd), (1, 2, dd)], 0)
    seq = derive(g)
    second = seq.levels[1].graph
    assert [(s, d) for s, d, k in second.edges if k == dd.value] == [(0, 4)]


def test_dedup_is_recorded():
    # loop {1,2} leaves twice for header 4, which also has predecessor 5 elsewhere
    g = Graph([0, 1, 2, 4, 5], [(0, 1), (1, 2), (2, 1), (1, 4), (2, 4), (0, 5), (5, 4)], 0)
    seq = derive(g)
    assert member_sets(seq.levels[0].partition) == [{0, 5}, {1, 2}, {4}]
    assert seq.dedup == (1,) + seq.dedup[1:]
    assert seq.dedup_fired


def test_random_reducible_graphs():
    rng = random.Random(11)
    for _ in range(1000):
        g = reducible_cfg(rng, 3, 30)
        seq = derive(g)
        assert seq.terminal == Terminal.SINGLE_NODE
        assert len(seq) <= len(g.nodes)
        sizes = [len(lv.graph.nodes) for lv in seq.levels]
        assert all(a > b for a, b in zip(sizes, sizes[1:]))
        for k, lv in enumerate(seq.levels):
            part, lg = lv.partition, lv.graph
            covered = [v for iv in part.intervals for v in iv.members]
            assert sorted(covered) == list(lg.nodes)
            assert all(check_interval(lg, iv) == [] for iv in part.intervals)
            assert is_maximal(lg, part)
            if k + 1 < len(seq):
                assert len(seq.levels[k + 1].graph.nodes) == len(part.intervals)


def test_irreducible_graphs_end_in_identity_partition():
    rng = random.Random(12)
    for _ in range(100):
        seq = derive(irreducible_cfg(rng))
        last = seq.levels[-1]
        assert seq.terminal == Terminal.IRREDUCIBLE
        assert last.partition.is_identity and len(last.graph.nodes) > 1


def test_partition_is_deterministic():
    rng = random.Random(5)
    for _ in range(50):
        g = reducible_cfg(rng, 3, 40)
        assert derive(g).to_json() == derive(Graph.from_json(g.to_json())).to_json()
