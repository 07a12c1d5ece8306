"""GGNN propagation (standard and interval-based) with node init and readout.

A forward pass works on a :class:`Batch`, a disjoint union of method graphs.
Interval-based propagation needs every graph's hierarchy to share one level
axis; graphs with shallower hierarchies are padded at the bottom with idle
levels (no edges, identity merges) so that all peaks line up.
"""

from __future__ import annotations

import json
from collections import Counter
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from . import autodiff as ad
from .autodiff import Tensor
from .graph import CF, EdgeKind
from .intervals import DerivedSequence, Interval, derive
from .layers import GruCell, ParamStore, gru_step
from .methodgraph import MethodGraph

EDGE_KINDS = (EdgeKind.CONTROL_FLOW.value, EdgeKind.DATA_DEPENDENCY.value, EdgeKind.CALL.value)

PAD, UNK, EMPTY = "<pad>", "<unk>", "<empty>"
NULL_TOKEN = "NULL"


class ConfigError(ValueError):
    pass


@dataclass
class ModelConfig:
    vocab_size: int
    embed_dim: int = 100
    hidden_dim: int = 100
    rounds: int = 8
    interval_rounds: int = 2
    edge_types: int = len(EDGE_KINDS)
    mode: str = "ibpm"
    cycles: int = 1
    seed: int = 0

    def __post_init__(self):
        if self.mode not in ("standard", "ibpm"):
            raise ConfigError(f"unknown propagation mode {self.mode!r}")
        if self.rounds < 1 or self.interval_rounds < 1 or self.cycles < 1:
            raise ConfigError("rounds, interval_rounds and cycles must be >= 1")
        if self.edge_types != len(EDGE_KINDS):
            raise ConfigError(f"edge_types must be {len(EDGE_KINDS)}")

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "ModelConfig":
        return cls(**d)

    @classmethod
    def load(cls, path) -> "ModelConfig":
        return cls.from_dict(json.loads(Path(path).read_text()))


class Vocab:
    def __init__(self, tokens: Sequence[str]):
        self.itos = [PAD, UNK, EMPTY, NULL_TOKEN] + [t for t in tokens if t not in (PAD, UNK, EMPTY, NULL_TOKEN)]
        self.stoi = {t: i for i, t in enumerate(self.itos)}

    @classmethod
    def build(cls, sequences, min_count: int = 1) -> "Vocab":
        counts = Counter(t for seq in sequences for t in seq)
        return cls(sorted(t for t, c in counts.items() if c >= min_count))

    def __len__(self) -> int:
        return len(self.itos)

    def __eq__(self, other) -> bool:
        return isinstance(other, Vocab) and self.itos == other.itos

    def encode(self, tokens: Sequence[str]) -> np.ndarray:
        if not tokens:
            return np.array([self.stoi[EMPTY]], dtype=np.int64)
        unk = self.stoi[UNK]
        return np.array([self.stoi.get(t, unk) for t in tokens], dtype=np.int64)


# ---------------------------------------------------------------- plans


@dataclass
class LevelPlan:
    n: int
    # per edge kind: (senders, receivers), both directions, duplicates removed
    pairs: list[tuple[np.ndarray, np.ndarray]]
    active: np.ndarray  # bool per row
    cf_messages: int  # distinct non-loop control-flow edges propagated per round
    assign: np.ndarray | None = None  # row -> row of the next level
    labels: list[tuple[int, int]] = field(default_factory=list)  # (graph index, node id) per row

    @property
    def any_active(self) -> bool:
        return bool(self.active.any())


def _pairs(edges_by_kind: dict[str, set[tuple[int, int]]]) -> list[tuple[np.ndarray, np.ndarray]]:
    out = []
    for kind in EDGE_KINDS:
        both = set()
        for a, b in edges_by_kind.get(kind, ()):
            both.add((a, b))
            both.add((b, a))
        ordered = sorted(both)
        out.append((np.array([a for a, _ in ordered], dtype=np.int64),
                    np.array([b for _, b in ordered], dtype=np.int64)))
    return out


def _graph_levels(mg: MethodGraph, seq: DerivedSequence) -> list[LevelPlan]:
    """Per-level plans for one graph, from level 1 up to the peak."""
    peak = seq.peak
    plans = []
    for k in range(peak + 1):
        g = seq.levels[k].graph
        rows = {v: i for i, v in enumerate(g.nodes)}
        kinds_here = EDGE_KINDS if k == 0 else (CF.value,)
        edges: dict[str, set] = {}
        cf = 0
        if k == peak:
            active = np.full(len(g.nodes), len(g.nodes) > 1)
            for s, d, kind in g.edges:
                if kind in kinds_here:
                    edges.setdefault(kind, set()).add((rows[s], rows[d]))
                    cf += kind == CF.value and s != d
            assign = None
        else:
            part = seq.levels[k].partition
            block = {v: i for i, iv in enumerate(part.intervals) for v in iv.members}
            multi = {i for i, iv in enumerate(part.intervals) if len(iv) > 1}
            active = np.array([block[v] in multi for v in g.nodes])
            for s, d, kind in g.edges:
                if kind in kinds_here and block[s] == block[d] and block[s] in multi:
                    edges.setdefault(kind, set()).add((rows[s], rows[d]))
                    cf += kind == CF.value and s != d
            nxt = seq.levels[k + 1].graph
            next_rows = {v: i for i, v in enumerate(nxt.nodes)}
            image = {}
            for w, iv in seq.provenance[k].items():
                for v in iv.members:
                    image[v] = next_rows[w]
            assign = np.array([image[v] for v in g.nodes], dtype=np.int64)
        plans.append(LevelPlan(len(g.nodes), _pairs(edges), active, cf, assign, [(0, v) for v in g.nodes]))
    return plans


def _idle(n: int, labels) -> LevelPlan:
    return LevelPlan(n, _pairs({}), np.zeros(n, dtype=bool), 0, np.arange(n, dtype=np.int64), labels)


def _union(levels: list[LevelPlan]) -> LevelPlan:
    offsets = np.cumsum([0] + [lv.n for lv in levels])
    pairs = []
    for k in range(len(EDGE_KINDS)):
        pairs.append((np.concatenate([lv.pairs[k][0] + o for lv, o in zip(levels, offsets)]),
                      np.concatenate([lv.pairs[k][1] + o for lv, o in zip(levels, offsets)])))
    return LevelPlan(
        int(offsets[-1]), pairs,
        np.concatenate([lv.active for lv in levels]),
        sum(lv.cf_messages for lv in levels),
        None,
        [lab for lv in levels for lab in lv.labels],
    )


@dataclass
class Batch:
    graphs: list[MethodGraph]
    tokens: list[np.ndarray]  # per level-1 row
    node_graph: np.ndarray  # level-1 row -> graph index
    levels: list[LevelPlan]  # one level for standard mode
    rankable: np.ndarray  # bool per level-1 row
    stmt_labels: np.ndarray
    method_labels: np.ndarray

    @property
    def n_graphs(self) -> int:
        return len(self.graphs)

    @property
    def n_nodes(self) -> int:
        return len(self.node_graph)


def make_batch(graphs: Sequence[MethodGraph], vocab: Vocab, mode: str,
               sequences: Sequence[DerivedSequence] | None = None) -> Batch:
    graphs = list(graphs)
    tokens, node_graph, rankable, stmt_labels = [], [], [], []
    for gi, mg in enumerate(graphs):
        rk = set(mg.rankable())
        for i, node in enumerate(mg.nodes):
            tokens.append(vocab.encode(node.tokens))
            node_graph.append(gi)
            rankable.append(i in rk)
            stmt_labels.append(mg.labels[i])
    if mode == "standard":
        per_graph = []
        for gi, mg in enumerate(graphs):
            edges: dict[str, set] = {}
            cf = 0
            for s, d, kind in mg.graph.edges:
                if kind in EDGE_KINDS:
                    edges.setdefault(kind, set()).add((s, d))
                    cf += kind == CF.value and s != d
            n = len(mg.nodes)
            per_graph.append(LevelPlan(n, _pairs(edges), np.ones(n, dtype=bool), cf, None,
                                       [(gi, v) for v in range(n)]))
        levels = [_union(per_graph)]
    else:
        if sequences is None:
            sequences = [derive(mg.graph) for mg in graphs]
        plans = [_graph_levels(mg, seq) for mg, seq in zip(graphs, sequences)]
        for gi, pl in enumerate(plans):
            for lv in pl:
                lv.labels = [(gi, v) for _, v in lv.labels]
        depth = max(len(p) for p in plans)
        padded = []
        for gi, pl in enumerate(plans):
            first = pl[0]
            pad = [_idle(first.n, first.labels) for _ in range(depth - len(pl))]
            padded.append(pad + pl)
        levels = []
        for t in range(depth):
            lv = _union([p[t] for p in padded])
            if t < depth - 1:
                assigns, offset = [], 0
                for p in padded:
                    assigns.append(p[t].assign + offset)
                    offset += p[t + 1].n
                lv.assign = np.concatenate(assigns)
            levels.append(lv)
    return Batch(graphs, tokens, np.array(node_graph, dtype=np.int64), levels,
                 np.array(rankable, dtype=bool), np.array(stmt_labels, dtype=np.float64),
                 np.array([mg.method_label for mg in graphs], dtype=np.float64))


# ---------------------------------------------------------------- model


@dataclass
class MergeRecord:
    assign: np.ndarray
    alpha: Tensor


@dataclass
class Trace:
    """Which nodes exchanged messages in each propagation phase."""

    phases: list[dict] = field(default_factory=list)

    @property
    def messages(self) -> int:
        return sum(p["messages"] for p in self.phases)


class Model:
    def __init__(self, config: ModelConfig, vocab: Vocab):
        if config.vocab_size != len(vocab):
            raise ConfigError(f"config vocab_size {config.vocab_size} != vocabulary size {len(vocab)}")
        self.config = config
        self.vocab = vocab
        c = config
        store = self.store = ParamStore(c.seed)
        store.register("embed", (c.vocab_size, c.embed_dim))
        self.encoder = GruCell.create(store, "encoder", c.embed_dim, c.hidden_dim)
        for k in range(c.edge_types):
            store.register(f"msg.W1.{k}", (c.hidden_dim, c.hidden_dim))
        store.register("msg.W2", (c.edge_types * c.hidden_dim, c.hidden_dim))
        self.cell = GruCell.create(store, "prop", c.hidden_dim, c.hidden_dim)
        for head in ("method", "stmt"):
            store.register(f"{head}.W1", (c.hidden_dim, c.hidden_dim))
            store.register(f"{head}.b1", (c.hidden_dim,), init="zeros")
            store.register(f"{head}.W2", (c.hidden_dim, 1))
            store.register(f"{head}.b2", (1,), init="zeros")

    # node initialisation

    def encode_tokens(self, sequences: Sequence[np.ndarray]) -> Tensor:
        """Final encoder state for each token sequence."""
        lengths = np.array([len(s) for s in sequences])
        order = np.argsort(-lengths, kind="stable")
        sorted_lengths = lengths[order]
        h = Tensor(np.zeros((len(sequences), self.config.hidden_dim)))
        if len(sequences) == 0:
            return h
        emb = self.store["embed"]
        for t in range(int(sorted_lengths[0])):
            alive = int((sorted_lengths > t).sum())
            ids = np.array([sequences[i][t] for i in order[:alive]], dtype=np.int64)
            x = ad.gather(emb, ids)
            if alive == len(sequences):
                h = gru_step(self.encoder, self.store, x, h)
            else:
                new = gru_step(self.encoder, self.store, x, h[:alive])
                h = ad.concat([new, h[alive:]], axis=0)
        inverse = np.empty_like(order)
        inverse[order] = np.arange(len(order))
        return ad.gather(h, inverse)

    def init_nodes(self, batch: Batch) -> Tensor:
        return self.encode_tokens(batch.tokens)

    # propagation

    def _round(self, h: Tensor, level: LevelPlan) -> Tensor:
        c = self.config
        msgs = []
        for k, (snd, rcv) in enumerate(level.pairs):
            if len(snd) == 0:
                msgs.append(Tensor(np.zeros((level.n, c.hidden_dim))))
                continue
            agg = ad.segment_sum(ad.gather(h, snd), rcv, level.n)
            msgs.append(ad.tanh(agg @ self.store[f"msg.W1.{k}"]))
        m = ad.tanh(ad.concat(msgs, axis=1) @ self.store["msg.W2"])
        new = gru_step(self.cell, self.store, m, h)
        if level.active.all():
            return new
        mask = level.active.astype(np.float64)[:, None]
        return h + Tensor(mask) * (new - h)

    def propagate(self, h: Tensor, level: LevelPlan, rounds: int, trace: Trace | None = None,
                  phase: str = "", depth: int = 0) -> Tensor:
        if not level.any_active:
            return h
        for _ in range(rounds):
            h = self._round(h, level)
        if trace is not None:
            touched = set()
            for snd, rcv in level.pairs:
                touched.update(int(i) for i in snd)
                touched.update(int(i) for i in rcv)
            trace.phases.append({
                "phase": phase, "level": depth, "rounds": rounds,
                "active": sorted(level.labels[i] for i in touched),
                "messages": rounds * level.cf_messages,
            })
        return h

    def propagate_standard(self, h: Tensor, batch: Batch, trace: Trace | None = None) -> Tensor:
        return self.propagate(h, batch.levels[0], self.config.rounds, trace, "standard", 0)

    def propagate_ibpm(self, h: Tensor, batch: Batch, trace: Trace | None = None) -> Tensor:
        levels = batch.levels
        L = self.config.interval_rounds
        top = len(levels) - 1
        for _ in range(self.config.cycles):
            records = []
            for t in range(top):
                h = self.propagate(h, levels[t], L, trace, "up", t)
                h, rec = merge_level(h, levels[t].assign, levels[t + 1].n)
                records.append(rec)
            h = self.propagate(h, levels[top], L, trace, "peak", top)
            for t in range(top - 1, -1, -1):
                h = split_level(h, records[t])
                h = self.propagate(h, levels[t], L, trace, "down", t)
        return h

    # readout

    def _head(self, name: str, x: Tensor) -> Tensor:
        s = self.store
        return ad.tanh(x @ s[f"{name}.W1"] + s[f"{name}.b1"]) @ s[f"{name}.W2"] + s[f"{name}.b2"]

    def readout_logits(self, h: Tensor, batch: Batch) -> tuple[Tensor, Tensor]:
        counts = np.bincount(batch.node_graph, minlength=batch.n_graphs).astype(np.float64)
        pooled = ad.segment_sum(h, batch.node_graph, batch.n_graphs) / Tensor(counts[:, None])
        return self._head("method", pooled), self._head("stmt", h)

    def forward(self, batch: Batch, trace: Trace | None = None) -> tuple[Tensor, Tensor]:
        h = self.init_nodes(batch)
        if self.config.mode == "standard":
            h = self.propagate_standard(h, batch, trace)
        else:
            h = self.propagate_ibpm(h, batch, trace)
        return self.readout_logits(h, batch)

    def loss(self, batch: Batch) -> Tensor:
        """Method BCE plus per-statement BCE averaged within each buggy method."""
        method_logits, stmt_logits = self.forward(batch)
        weights = np.zeros(batch.n_nodes)
        for gi, mg in enumerate(batch.graphs):
            if mg.method_label:
                rows = np.flatnonzero((batch.node_graph == gi) & batch.rankable)
                weights[rows] = 1.0 / max(1, len(rows))
        total = ad.bce_with_logits(method_logits, batch.method_labels[:, None]) + \
            ad.bce_with_logits(stmt_logits, batch.stmt_labels[:, None], weights[:, None])
        return total * (1.0 / batch.n_graphs)

    def predict(self, batch: Batch) -> tuple[np.ndarray, list[np.ndarray]]:
        """Method probabilities and, per graph, statement probabilities per node."""
        method_logits, stmt_logits = self.forward(batch)
        mp = ad.sigmoid(method_logits).data[:, 0]
        sp = ad.sigmoid(stmt_logits).data[:, 0]
        return mp, [sp[batch.node_graph == gi] for gi in range(batch.n_graphs)]


# ---------------------------------------------------------------- merge / split


def merge_level(h: Tensor, assign: np.ndarray, n_next: int) -> tuple[Tensor, MergeRecord]:
    """Softmax-weighted merge of each group of rows into one row (per dimension)."""
    alpha = ad.segment_softmax(h, assign, n_next)
    merged = ad.segment_sum(alpha * h, assign, n_next)
    return merged, MergeRecord(assign, alpha)


def split_level(h_next: Tensor, record: MergeRecord) -> Tensor:
    """Each member row becomes ``alpha * merged`` using the stored weights."""
    return record.alpha * ad.gather(h_next, record.assign)


def merge_interval(embeddings: Tensor, interval: Interval | Sequence[int]) -> tuple[Tensor, MergeRecord]:
    """Merge the given rows of ``embeddings`` into a single embedding."""
    rows = np.array(interval.members if isinstance(interval, Interval) else list(interval), dtype=np.int64)
    if len(rows) == 0:
        raise ValueError("cannot merge an empty interval")
    sub = ad.gather(embeddings, rows) if len(rows) != embeddings.shape[0] or np.any(rows != np.arange(len(rows))) else embeddings
    merged, rec = merge_level(sub, np.zeros(len(rows), dtype=np.int64), 1)
    return merged[0], rec


def split_interval(merged: Tensor, record: MergeRecord, n_members: int | None = None) -> Tensor:
    if n_members is not None and n_members != len(record.assign):
        raise ValueError(f"record covers {len(record.assign)} members, got {n_members}")
    if merged.data.ndim == 1:
        merged = ad.reshape(merged, (1, -1))
    return split_level(merged, record)
