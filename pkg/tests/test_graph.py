import itertools
import json

import pytest
from hypothesis import given
from hypothesis import strategies as st

from ibpm.graph import CF, DiameterUndefined, EdgeKind, Graph, InvalidArgument, Mode, chain

DD = EdgeKind.DATA_DEPENDENCY


@st.composite
def small_graphs(draw, max_nodes=12):
    n = draw(st.integers(1, max_nodes))
    pairs = draw(st.lists(st.tuples(st.integers(0, n - 1), st.integers(0, n - 1)), max_size=3 * n))
    return Graph(range(n), pairs, 0)


def floyd(g: Graph, mode: Mode) -> dict:
    """All-pairs distances by Floyd-Warshall, the brute-force oracle."""
    inf = float("inf")
    d = {(u, v): (0 if u == v else inf) for u in g.nodes for v in g.nodes}
    for s, t in g.proper_edges(CF):
        d[s, t] = 1
        if mode == Mode.SYMMETRIZED:
            d[t, s] = 1
    for k, i, j in itertools.product(g.nodes, repeat=3):
        if d[i, k] + d[k, j] < d[i, j]:
            d[i, j] = d[i, k] + d[k, j]
    return d


def test_predecessors_and_successors():
    g = Graph([1, 2], [(1, 2)])
    assert g.predecessors(2) == {1}
    assert g.successors(1) == {2}
    assert g.predecessors(1) == set()
    assert g.successors(2) == set()


def test_figure_neighbourhoods(fig4):
    assert fig4.predecessors(2) == {1, 7}
    assert fig4.successors(2) == {3, 7}


def test_unknown_node_is_rejected():
    g = chain(3)
    with pytest.raises(InvalidArgument):
        g.predecessors(9)
    with pytest.raises(InvalidArgument):
        g.distance(0, 9)


def test_bad_edges_and_entry():
    with pytest.raises(InvalidArgument):
        Graph([1], [(1, 2)])
    with pytest.raises(InvalidArgument):
        Graph([1], [], entry=5)
    with pytest.raises(InvalidArgument):
        Graph([-1])


def test_edge_kinds_are_separate():
    g = Graph([0, 1, 2], [(0, 1), (1, 2, DD)], 0)
    assert g.successors(1) == set()
    assert g.successors(1, DD) == {2}
    assert g.proper_edges(DD) == [(1, 2)]


def test_parallel_edges_collapse_and_self_loops_stay():
    g = Graph([0, 1], [(0, 1), (0, 1), (1, 1)], 0)
    assert len(g.edges) == 2
    assert g.proper_edges() == [(0, 1)]


def test_chain_distances():
    g = chain(3, start=1)
    assert g.distance(1, 1) == 0
    assert g.distance(1, 3, Mode.DIRECTED) == 2
    assert g.distance(3, 1, Mode.DIRECTED) is None
    assert g.distance(3, 1, Mode.SYMMETRIZED) == 2


def test_diameters():
    assert Graph([5]).diameter() == 0
    cycle = Graph([0, 1, 2], [(0, 1), (1, 2), (2, 0)])
    assert cycle.diameter(Mode.DIRECTED) == 2
    assert chain(4).diameter(Mode.SYMMETRIZED) == 3


def test_diameter_undefined_names_pair():
    with pytest.raises(DiameterUndefined) as exc:
        chain(3).diameter(Mode.DIRECTED)
    assert exc.value.pair == (1, 0)
    with pytest.raises(DiameterUndefined):
        Graph([0, 1]).diameter(Mode.SYMMETRIZED)


def test_self_loop_does_not_count_as_a_path():
    g = Graph([0, 1], [(0, 0), (0, 1)])
    assert g.neighbors(0) == {1}
    assert g.diameter(Mode.SYMMETRIZED) == 1


def test_json_round_trip_is_byte_stable(fig4):
    text = fig4.to_json()
    again = Graph.from_json(text)
    assert again == fig4
    assert again.to_json() == text
    doc = json.loads(text)
    assert doc["nodes"] == sorted(doc["nodes"])
    keys = [(e["src"], e["dst"], e["kind"]) for e in doc["edges"]]
    assert keys == sorted(keys)


def test_unknown_format_version():
    with pytest.raises(InvalidArgument):
        Graph.from_dict({"version": 99, "nodes": [0]})


def test_dot_mentions_every_node(fig4):
    dot = fig4.to_dot()
    assert dot.startswith("digraph")
    assert all(f"n{v} " in dot for v in fig4.nodes)


@given(small_graphs())
def test_pred_succ_duality(g):
    for u in g.nodes:
        for v in g.nodes:
            assert (u in g.predecessors(v)) == (v in g.successors(u))


@given(small_graphs(), st.sampled_from([Mode.DIRECTED, Mode.SYMMETRIZED]))
def test_distance_matches_floyd_warshall(g, mode):
    oracle = floyd(g, mode)
    for u in g.nodes:
        for v in g.nodes:
            d = g.distance(u, v, mode)
            assert (float("inf") if d is None else d) == oracle[u, v]


@given(small_graphs(), st.sampled_from([Mode.DIRECTED, Mode.SYMMETRIZED]))
def test_triangle_inequality(g, mode):
    dist = {u: g.bfs(u, mode) for u in g.nodes}
    for a, b, c in itertools.product(g.nodes, repeat=3):
        if b in dist[a] and c in dist[b]:
            assert dist[a][c] <= dist[a][b] + dist[b][c]


@given(small_graphs(), st.sampled_from([Mode.DIRECTED, Mode.SYMMETRIZED]))
def test_diameter_matches_brute_force(g, mode):
    oracle = floyd(g, mode)
    worst = max(oracle.values())
    if worst == float("inf"):
        with pytest.raises(DiameterUndefined):
            g.diameter(mode)
    else:
        assert g.diameter(mode) == worst
