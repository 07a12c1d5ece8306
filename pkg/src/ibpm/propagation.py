"""Exact set-based simulation of synchronous message passing.

Each node ``v`` carries a reach set ``sigma[v]``. A round replaces it with the
union of its own set and the sets of its (bidirectional) control-flow
neighbours, and costs one message per distinct non-loop control-flow edge.

``run_ibpm_to_fixed_point`` replays the interval schedule: every interval of
every level below the peak is driven to its own fixed point on the way up and
again on the way down, and the peak graph is driven to its fixed point once.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .graph import CF, Graph, GraphError, Mode
from .intervals import DerivedSequence


class DisconnectedGraph(GraphError):
    pass


class InvalidSequence(GraphError):
    pass


@dataclass
class ReachSets:
    sigma: dict[int, frozenset[int]]
    round: int
    # (u, v) -> first round at which u entered sigma[v]
    first_arrival: dict[tuple[int, int], int] = field(default_factory=dict)


@dataclass
class MessageLedger:
    per_round: list[int] = field(default_factory=list)
    total: int = 0
    # (level index, interval header) -> messages; the peak uses header None
    breakdown: dict[tuple[int, int | None], int] = field(default_factory=dict)
    rounds: int = 0

    def add(self, count: int, key=None) -> None:
        self.per_round.append(count)
        self.total += count
        self.rounds += 1
        if key is not None:
            self.breakdown[key] = self.breakdown.get(key, 0) + count

    def to_dict(self) -> dict:
        return {
            "rounds": self.rounds,
            "total": self.total,
            "per_round": list(self.per_round),
            "breakdown": [
                {"level": lvl + 1, "interval": hdr, "messages": m}
                for (lvl, hdr), m in sorted(self.breakdown.items(), key=lambda kv: (kv[0][0], -1 if kv[0][1] is None else kv[0][1]))
            ],
        }


def _neighbours(g: Graph) -> dict[int, tuple[int, ...]]:
    return {v: tuple(sorted(g.neighbors(v, Mode.SYMMETRIZED, CF))) for v in g.nodes}


def _drive(g: Graph, sigma: dict[int, frozenset], ledger: MessageLedger, key=None,
           rounds: int | None = None, arrivals: dict | None = None) -> int:
    """Run rounds on ``g`` in place until nothing changes (or ``rounds`` rounds).

    Returns the number of counted rounds. The confirming round that observes
    no change is not counted.
    """
    nbrs = _neighbours(g)
    n_edges = len(g.proper_edges(CF))
    done = 0
    while rounds is None or done < rounds:
        new = {}
        changed = False
        for v in g.nodes:
            acc = set(sigma[v])
            for u in nbrs[v]:
                acc |= sigma[u]
            fs = frozenset(acc)
            if fs != sigma[v]:
                changed = True
                if arrivals is not None:
                    for u in fs - sigma[v]:
                        arrivals[(u, v)] = done + 1
            new[v] = fs
        if rounds is None and not changed:
            break
        sigma.update(new)
        done += 1
        ledger.add(n_edges, key)
    return done


def run_to_fixed_point(g: Graph) -> tuple[ReachSets, MessageLedger]:
    """Standard synchronous propagation over the whole graph."""
    if not g.is_weakly_connected(CF):
        raise DisconnectedGraph("graph is not weakly connected over control-flow edges")
    sigma = {v: frozenset([v]) for v in g.nodes}
    arrivals = {(v, v): 0 for v in g.nodes}
    ledger = MessageLedger()
    rounds = _drive(g, sigma, ledger, arrivals=arrivals)
    return ReachSets(sigma, rounds, arrivals), ledger


def _phase(level: int, g: Graph, seq: DerivedSequence, sigma: dict, ledger: MessageLedger,
           rounds: int | None) -> None:
    for iv in seq.levels[level].partition.intervals:
        sub = g.induced(iv.members, kinds=[CF])
        _drive(sub, sigma, ledger, key=(level, iv.header), rounds=rounds if sub.proper_edges(CF) else 0)


def run_ibpm_to_fixed_point(seq: DerivedSequence, rounds: int | None = None) -> MessageLedger:
    """Simulate the interval schedule over a derived sequence.

    With ``rounds`` set, each interval (and the peak) runs exactly that many
    rounds instead of running to its fixed point; intervals without edges run
    none.
    """
    if len(seq.provenance) != len(seq.levels) - 1:
        raise InvalidSequence("provenance does not match the number of levels")
    ledger = MessageLedger()
    peak = seq.peak
    graphs = [lv.graph for lv in seq.levels]

    # sigma sets are expressed in first-order node ids on the way up
    sigma = {v: frozenset([v]) for v in graphs[0].nodes}
    for k in range(peak):
        _phase(k, graphs[k], seq, sigma, ledger, rounds)
        prov = seq.provenance[k]
        sigma = {w: frozenset().union(*(sigma[u] for u in iv.members)) for w, iv in prov.items()}

    top = graphs[peak]
    top_rounds = rounds if top.proper_edges(CF) else 0
    _drive(top, sigma, ledger, key=(peak, None), rounds=top_rounds)

    for k in range(peak - 1, -1, -1):
        sigma = {v: frozenset([v]) for v in graphs[k].nodes}
        _phase(k, graphs[k], seq, sigma, ledger, rounds)
    return ledger


def _unit_cost(g: Graph) -> tuple[int, int]:
    """(diameter, edge count) of a propagation unit, via BFS."""
    if len(g.nodes) <= 1:
        return 0, 0
    return g.diameter(Mode.SYMMETRIZED, CF), len(g.proper_edges(CF))


def propagation_units(seq: DerivedSequence) -> tuple[list[tuple[int, int]], tuple[int, int]]:
    """Per-interval (diameter, |E|) below the peak, and the peak graph's pair."""
    below = []
    for k in range(seq.peak):
        g = seq.levels[k].graph
        for iv in seq.levels[k].partition.intervals:
            below.append(_unit_cost(g.induced(iv.members, kinds=[CF])))
    return below, _unit_cost(seq.levels[seq.peak].graph)


def closed_form_messages(seq: DerivedSequence) -> int:
    """Closed-form IBPM message count from interval diameters and edge counts.

    Intervals below the peak contribute ``2 * diameter * |E|`` (up and down),
    the peak graph contributes ``diameter * |E|`` once. A single-node graph
    costs nothing.
    """
    below, (top_d, top_e) = propagation_units(seq)
    return sum(2 * d * e for d, e in below) + top_d * top_e


def max_unit_diameter(seq: DerivedSequence) -> int:
    below, (top_d, _) = propagation_units(seq)
    return max([top_d] + [d for d, _ in below])


def ibpm_bound(seq: DerivedSequence, total: int | None = None) -> tuple[int, bool]:
    """``2 * tau * |E|`` with ``tau`` the largest propagation-unit diameter."""
    tau = max_unit_diameter(seq)
    n_edges = len(seq.levels[0].graph.proper_edges(CF))
    bound = 2 * tau * n_edges
    if total is None:
        total = run_ibpm_to_fixed_point(seq).total
    return bound, total <= bound
