"""Synthetic labelled corpus: generation, clean-partner pairing, splits, JSONL files."""

from __future__ import annotations

import hashlib
import json
import logging
import random
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np
from scipy import sparse

from .methodgraph import CLEAN, MethodGraph
from .minilang import INDEX_OOB, NULL_DEREF, NotInjectable, build_cfg, generate_program, inject_bug, inline, render
from .minilang.classes import ClassTable
from .minilang.generate import GenConfig

FORMAT = "ibpm-corpus"
FORMAT_VERSION = 1
TRAIN, TEST = "train", "test"

log = logging.getLogger(__name__)


class CorpusError(ValueError):
    pass


class CorpusFormatError(CorpusError):
    def __init__(self, path, line: int, message: str):
        super().__init__(f"{path}:{line}: {message}")
        self.line = line


@dataclass(frozen=True)
class LabeledExample:
    graph: MethodGraph
    source: str
    bug_kind: str = CLEAN
    faulty_lines: tuple[int, ...] = ()
    depth: int = 0
    seed: int = 0
    split: str = TRAIN

    def __post_init__(self):
        if (self.bug_kind == CLEAN) != (not any(self.graph.labels)):
            raise CorpusError("buggy examples need a labelled statement and clean ones none")

    @property
    def label(self) -> int:
        return self.graph.method_label

    @property
    def target(self) -> str:
        return self.graph.target

    def to_dict(self) -> dict:
        return {"split": self.split, "bug_kind": self.bug_kind, "faulty_lines": list(self.faulty_lines),
                "depth": self.depth, "seed": self.seed, "source": self.source, "graph": self.graph.to_dict()}

    @classmethod
    def from_dict(cls, d: dict) -> "LabeledExample":
        return cls(MethodGraph.from_dict(d["graph"]), d["source"], d["bug_kind"], tuple(d["faulty_lines"]),
                   d["depth"], d["seed"], d["split"])


@dataclass
class Corpus:
    examples: list[LabeledExample] = field(default_factory=list)
    seed: int = 0
    ratio: float = 3.0
    kinds: tuple[str, ...] = (NULL_DEREF, INDEX_OOB)
    depth: int = 1
    version: int = FORMAT_VERSION

    def split(self, name: str) -> list[LabeledExample]:
        return [e for e in self.examples if e.split == name]

    @property
    def train(self) -> list[LabeledExample]:
        return self.split(TRAIN)

    @property
    def test(self) -> list[LabeledExample]:
        return self.split(TEST)

    def counts(self) -> dict:
        c = Counter((e.split, e.bug_kind) for e in self.examples)
        return {f"{s}/{k}": n for (s, k), n in sorted(c.items())}

    def header(self) -> dict:
        return {"format": FORMAT, "version": self.version, "seed": self.seed, "ratio": self.ratio,
                "kinds": list(self.kinds), "depth": self.depth, "n": len(self.examples)}


# similarity


def method_tokens(mg: MethodGraph) -> list[str]:
    """Flat token stream of the target method's statements, in node order."""
    out: list[str] = []
    for n in mg.nodes:
        if n.method == mg.target:
            out.extend(n.tokens)
            out.append(";")
    return out


def bigrams(tokens: Sequence[str]) -> Counter:
    return Counter(zip(tokens, tokens[1:]))


def cosine(a: Counter, b: Counter) -> float:
    dot = sum(v * b[k] for k, v in a.items() if k in b)
    if dot == 0:
        return 0.0
    return dot / (np.sqrt(sum(v * v for v in a.values())) * np.sqrt(sum(v * v for v in b.values())))


def _bigram_matrix(token_lists: Sequence[Sequence[str]], vocab: dict) -> sparse.csr_matrix:
    rows, cols, vals = [], [], []
    for r, toks in enumerate(token_lists):
        for bg, cnt in bigrams(toks).items():
            if bg not in vocab:
                vocab[bg] = len(vocab)
            rows.append(r)
            cols.append(vocab[bg])
            vals.append(cnt)
    m = sparse.csr_matrix((vals, (rows, cols)), shape=(len(token_lists), max(len(vocab), 1)), dtype=np.float64)
    norms = np.sqrt(np.asarray(m.multiply(m).sum(axis=1)).ravel())
    norms[norms == 0] = 1.0
    return sparse.diags(1.0 / norms) @ m


def similarity_matrix(queries: Sequence[Sequence[str]], pool: Sequence[Sequence[str]]) -> np.ndarray:
    """Cosine similarity of token-bigram count vectors, queries x pool."""
    vocab: dict = {}
    q = _bigram_matrix(queries, vocab)
    p = _bigram_matrix(pool, vocab)
    q.resize((q.shape[0], max(len(vocab), 1)))
    return np.asarray((q @ p.T).todense())


def pair_similar(buggy: Sequence[str], pool: Sequence[Sequence[str]]) -> list[tuple[int, float]]:
    """Pool indices ranked by bigram cosine to ``buggy`` (ties keep pool order)."""
    if not pool:
        raise CorpusError("pair_similar needs a nonempty pool")
    sims = similarity_matrix([buggy], pool)[0]
    order = sorted(range(len(pool)), key=lambda i: (-sims[i], i))
    return [(i, float(sims[i])) for i in order]


def canonical_hash(mg: MethodGraph) -> str:
    return hashlib.sha256("\x1f".join(method_tokens(mg)).encode()).hexdigest()


# generation


@dataclass
class _Candidate:
    source: str
    graph: MethodGraph
    seed: int
    tokens: list[str]


def _graph_for(program, depth: int, faulty=(), kind=CLEAN) -> MethodGraph:
    target = program.methods[0].name
    classes = ClassTable.from_program(program)
    mg = inline(build_cfg(program, target, classes), program, depth, classes)
    return mg.with_labels(faulty, kind) if faulty else mg


def generate(n: int, kinds: Sequence[str] = (NULL_DEREF, INDEX_OOB), ratio: float = 3.0, seed: int = 0,
             pairs: int = 3, depth: int = 1, test_fraction: float = 0.25, gen: GenConfig | None = None,
             max_programs: int | None = None) -> Corpus:
    """Seed-deterministic corpus of ``n`` methods at ``ratio`` clean per buggy.

    Buggy methods are injected and interpreter-confirmed. Their clean partners
    are the most bigram-similar methods from an independently generated pool;
    a method that served as the original of an injection never enters the pool.
    """
    if n < 20:
        raise CorpusError(f"n must be at least 20, got {n}")
    if not kinds:
        raise CorpusError("at least one bug kind is required")
    n_buggy = int(round(n / (ratio + 1.0)))
    n_clean = n - n_buggy
    rng = random.Random(seed)
    max_programs = max_programs or 40 * n
    produced = 0

    def next_program():
        nonlocal produced
        produced += 1
        if produced > max_programs:
            raise CorpusError(f"ratio unachievable: {len(buggy)} of {n_buggy} buggy and {len(pool)} clean "
                              f"candidates after {max_programs} programs")
        s = rng.getrandbits(32)
        return s, generate_program(random.Random(s), gen)

    buggy: list[LabeledExample] = []
    pool: list[_Candidate] = []
    misses = Counter()
    while len(buggy) < n_buggy:
        kind = kinds[len(buggy) % len(kinds)]
        s, program = next_program()
        try:
            inj = inject_bug(program, program.methods[0].name, kind, random.Random(s ^ 0x5EED))
        except NotInjectable:
            misses[kind] += 1
            # never an original of an injection, so it may serve as a clean partner
            g = _graph_for(program, depth)
            pool.append(_Candidate(render(program), g, s, method_tokens(g)))
            continue
        graph = _graph_for(inj.program, depth, (inj.line,), kind)
        buggy.append(LabeledExample(graph, render(inj.program), kind, (inj.line,), depth, s))
    while len(pool) < max(2 * n_clean, n_clean + pairs):
        s, program = next_program()
        g = _graph_for(program, depth)
        pool.append(_Candidate(render(program), g, s, method_tokens(g)))

    sims = similarity_matrix([method_tokens(b.graph) for b in buggy], [c.tokens for c in pool])
    used: set[int] = set()
    chosen: list[int] = []
    for row in sims:
        picked = 0
        for j in sorted(range(len(pool)), key=lambda j: (-row[j], j)):
            if len(chosen) >= n_clean or picked >= pairs:
                break
            if j not in used:
                used.add(j)
                chosen.append(j)
                picked += 1
    for j in range(len(pool)):
        if len(chosen) >= n_clean:
            break
        if j not in used:
            used.add(j)
            chosen.append(j)
    clean = [LabeledExample(pool[j].graph, pool[j].source, CLEAN, (), depth, pool[j].seed) for j in chosen]
    if misses:
        log.info("programs without an injectable site: %s", dict(misses))
    examples = _assign_splits(buggy + clean, test_fraction, random.Random(seed ^ 0x5B117))
    return Corpus(examples, seed, ratio, tuple(kinds), depth)


def _assign_splits(examples: list[LabeledExample], test_fraction: float, rng: random.Random) -> list[LabeledExample]:
    """Group identical method bodies, then fill the test split group by group per class."""
    groups: dict[str, list[int]] = {}
    for i, e in enumerate(examples):
        groups.setdefault(canonical_hash(e.graph), []).append(i)
    split = [TRAIN] * len(examples)
    for label in (1, 0):
        keys = [k for k, idx in groups.items() if max(examples[i].label for i in idx) == label]
        rng.shuffle(keys)
        total = sum(len(groups[k]) for k in keys)
        want = int(round(test_fraction * total))
        taken = 0
        for k in keys:
            if taken >= want:
                break
            for i in groups[k]:
                split[i] = TEST
            taken += len(groups[k])
    out = []
    for e, s in zip(examples, split):
        out.append(LabeledExample(e.graph, e.source, e.bug_kind, e.faulty_lines, e.depth, e.seed, s))
    return out


def split_collisions(corpus: Corpus) -> int:
    train = {canonical_hash(e.graph) for e in corpus.train}
    return sum(canonical_hash(e.graph) in train for e in corpus.test)


# files


def dumps(corpus: Corpus) -> str:
    lines = [json.dumps(corpus.header(), separators=(",", ":"))]
    lines += [json.dumps(e.to_dict(), separators=(",", ":")) for e in corpus.examples]
    return "\n".join(lines) + "\n"


def save(corpus: Corpus, path) -> None:
    Path(path).write_text(dumps(corpus))


def loads(text: str, path: str = "<corpus>") -> Corpus:
    lines = text.split("\n")
    if lines and lines[-1] == "":
        lines.pop()
    if not lines:
        raise CorpusFormatError(path, 1, "missing header line")
    try:
        head = json.loads(lines[0])
    except json.JSONDecodeError as exc:
        raise CorpusFormatError(path, 1, f"malformed header ({exc.msg})") from None
    if not isinstance(head, dict) or head.get("format") != FORMAT:
        raise CorpusFormatError(path, 1, "not a corpus file")
    if head.get("version") != FORMAT_VERSION:
        raise CorpusFormatError(path, 1, f"unsupported version {head.get('version')!r}")
    examples = []
    for no, line in enumerate(lines[1:], start=2):
        try:
            examples.append(LabeledExample.from_dict(json.loads(line)))
        except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
            raise CorpusFormatError(path, no, f"malformed example ({exc})") from None
    if head.get("n") is not None and head["n"] != len(examples):
        raise CorpusFormatError(path, len(lines) + 1, f"expected {head['n']} examples, found {len(examples)}")
    return Corpus(examples, head["seed"], head["ratio"], tuple(head["kinds"]), head["depth"], head["version"])


def load(path) -> Corpus:
    return loads(Path(path).read_text(), str(path))
