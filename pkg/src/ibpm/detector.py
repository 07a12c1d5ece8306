"""Training, two-step evaluation, prediction and the standard-vs-interval ablation."""

from __future__ import annotations

import csv
import io
import json
import logging
import random
import time
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Sequence

import numpy as np

from . import autodiff as ad
from .corpus import Corpus, LabeledExample
from .intervals import DerivedSequence, derive
from .layers import adam_step, read_checkpoint, save_checkpoint
from .methodgraph import CLEAN, MethodGraph
from .model import Model, ModelConfig, Vocab, make_batch

log = logging.getLogger(__name__)

THRESHOLD = 0.5
KS = (1, 3, 5)


class TrainingDiverged(FloatingPointError):
    def __init__(self, epoch: int, detail: str):
        super().__init__(f"training diverged in epoch {epoch}: {detail}")
        self.epoch = epoch


class VocabularyMismatch(ValueError):
    pass


@dataclass
class TrainConfig:
    epochs: int = 10
    batch_size: int = 16
    lr: float = 2e-3
    clip: float = 5.0
    val_fraction: float = 0.15
    seed: int = 0
    threshold: float = THRESHOLD

    def to_dict(self) -> dict:
        return dict(self.__dict__)


@dataclass
class TrainResult:
    model: Model
    history: list[dict]
    best_epoch: int
    best_val_f1: float
    seconds: float


# metrics


def prf(tp: int, n_pred: int, n_true: int) -> tuple[float, float, float]:
    """Precision, recall, F1 with every 0/0 taken as 0."""
    p = tp / n_pred if n_pred else 0.0
    r = tp / n_true if n_true else 0.0
    f = 2 * p * r / (p + r) if p + r > 0 else 0.0
    return p, r, f


def top_k(scores: np.ndarray, k: int) -> list[int]:
    """Indices of the ``k`` largest scores; ties go to the earlier index."""
    order = sorted(range(len(scores)), key=lambda i: (-scores[i], i))
    return order[:k]


@dataclass
class Scored:
    """What a scorer produced for one example: method probability and per-rankable-node scores."""

    method_score: float
    stmt_scores: np.ndarray  # aligned with ``graph.rankable()``


def evaluate_scores(examples: Sequence[LabeledExample], scored: Sequence[Scored], ks: Sequence[int] = KS,
                    threshold: float = THRESHOLD) -> dict:
    """Method-level and top-k statement-level metrics under two-step gating."""
    method = {"tp": 0, "fp": 0, "fn": 0, "tn": 0}
    stmt = {k: {"tp": 0, "predicted": 0, "hits": 0} for k in ks}
    n_true_stmts = 0
    for ex, sc in zip(examples, scored):
        rk = ex.graph.rankable()
        truth = [ex.graph.labels[i] for i in rk]
        n_true_stmts += sum(truth)
        flagged = sc.method_score > threshold
        buggy = bool(ex.label)
        method["tp" if flagged and buggy else "fp" if flagged else "fn" if buggy else "tn"] += 1
        if not flagged:
            continue
        for k in ks:
            picks = top_k(np.asarray(sc.stmt_scores), k)
            hit = sum(truth[i] for i in picks)
            stmt[k]["tp"] += hit
            stmt[k]["predicted"] += len(picks)
            stmt[k]["hits"] += int(buggy and hit > 0)
    p, r, f = prf(method["tp"], method["tp"] + method["fp"], method["tp"] + method["fn"])
    report = {"n": len(examples), "method": {**method, "precision": p, "recall": r, "f1": f}, "statement": {}}
    for k in ks:
        p, r, f = prf(stmt[k]["tp"], stmt[k]["predicted"], n_true_stmts)
        tp_methods = method["tp"]
        report["statement"][str(k)] = {
            "tp": stmt[k]["tp"], "predicted": stmt[k]["predicted"], "buggy_statements": n_true_stmts,
            "precision": p, "recall": r, "f1": f,
            "hit_rate_tp_methods": stmt[k]["hits"] / tp_methods if tp_methods else 0.0,
        }
    return report


def always_buggy_f1(examples: Sequence[LabeledExample]) -> float:
    n_bug = sum(e.label for e in examples)
    return prf(n_bug, len(examples), n_bug)[2]


def report_by_kind(examples: Sequence[LabeledExample], scored: Sequence[Scored], ks: Sequence[int] = KS,
                   threshold: float = THRESHOLD) -> dict:
    """Overall report plus one per bug kind (that kind's buggy methods with all clean ones)."""
    out = {"all": evaluate_scores(examples, scored, ks, threshold)}
    for kind in sorted({e.bug_kind for e in examples} - {CLEAN}):
        idx = [i for i, e in enumerate(examples) if e.bug_kind in (kind, CLEAN)]
        out[kind] = evaluate_scores([examples[i] for i in idx], [scored[i] for i in idx], ks, threshold)
    return out


# model plumbing


class Detector:
    """A model plus the per-graph derived sequences it keeps reusing."""

    def __init__(self, model: Model):
        self.model = model
        self._seq: dict[int, tuple[MethodGraph, DerivedSequence]] = {}

    @property
    def config(self) -> ModelConfig:
        return self.model.config

    def batch(self, graphs: Sequence[MethodGraph]):
        seqs = None
        if self.config.mode == "ibpm":
            seqs = []
            for g in graphs:
                key = id(g)
                if key not in self._seq:
                    # the graph is kept alongside so its id cannot be recycled
                    self._seq[key] = (g, derive(g.graph))
                seqs.append(self._seq[key][1])
        return make_batch(graphs, self.model.vocab, self.config.mode, seqs)

    def score(self, graphs: Sequence[MethodGraph], batch_size: int = 64) -> list[Scored]:
        out = []
        for i in range(0, len(graphs), batch_size):
            chunk = graphs[i:i + batch_size]
            mp, sp = self.model.predict(self.batch(chunk))
            for g, m, s in zip(chunk, mp, sp):
                out.append(Scored(float(m), s[g.rankable()]))
        return out


def _vocab_for(examples: Sequence[LabeledExample]) -> Vocab:
    return Vocab.build(n.tokens for e in examples for n in e.graph.nodes)


def _carve_validation(examples: list[LabeledExample], fraction: float, rng: random.Random):
    by_label = {0: [], 1: []}
    for i, e in enumerate(examples):
        by_label[e.label].append(i)
    val = set()
    for idx in by_label.values():
        idx = list(idx)
        rng.shuffle(idx)
        val.update(idx[:int(round(fraction * len(idx)))])
    return [e for i, e in enumerate(examples) if i not in val], [e for i, e in enumerate(examples) if i in val]


def _clip(grads: dict[str, np.ndarray], limit: float) -> dict[str, np.ndarray]:
    norm = float(np.sqrt(sum(float((g * g).sum()) for g in grads.values())))
    if not np.isfinite(norm):
        return grads
    if limit and norm > limit:
        return {k: g * (limit / norm) for k, g in grads.items()}
    return grads


def train(corpus: Corpus | Sequence[LabeledExample], model_config: ModelConfig, cfg: TrainConfig | None = None,
          checkpoint: str | Path | None = None) -> TrainResult:
    """Fit a detector on the training split; keep the epoch with the best held-out method F1."""
    cfg = cfg or TrainConfig()
    started = time.perf_counter()
    examples = list(corpus.train if isinstance(corpus, Corpus) else corpus)
    if len({e.label for e in examples}) < 2:
        raise ValueError("training data needs both buggy and clean methods")
    rng = random.Random(cfg.seed)
    fit, val = _carve_validation(examples, cfg.val_fraction, rng)
    vocab = _vocab_for(examples)
    config = replace(model_config, vocab_size=len(vocab), seed=cfg.seed)
    det = Detector(Model(config, vocab))
    store = det.model.store
    best_state, best_f1, best_epoch = store.state(), -1.0, 0
    history = []
    for epoch in range(1, cfg.epochs + 1):
        order = list(range(len(fit)))
        rng.shuffle(order)
        total, n_batches = 0.0, 0
        for i in range(0, len(order), cfg.batch_size):
            graphs = [fit[j].graph for j in order[i:i + cfg.batch_size]]
            store.zero_grad()
            try:
                loss = det.model.loss(det.batch(graphs))
                loss.backward()
            except ad.NonFiniteError as exc:
                raise TrainingDiverged(epoch, str(exc)) from None
            if not np.isfinite(loss.item()):
                raise TrainingDiverged(epoch, "non-finite loss")
            adam_step(store, _clip(store.gradients(), cfg.clip), lr=cfg.lr)
            total += loss.item()
            n_batches += 1
        entry = {"epoch": epoch, "loss": total / max(1, n_batches)}
        if val:
            rep = evaluate_scores(val, det.score([e.graph for e in val]), (3,), cfg.threshold)
            entry["val_method_f1"] = rep["method"]["f1"]
            entry["val_top3_hit"] = rep["statement"]["3"]["hit_rate_tp_methods"]
            score = entry["val_method_f1"]
        else:
            score = -entry["loss"]
        if score > best_f1:
            best_f1, best_epoch, best_state = score, epoch, store.state()
        history.append(entry)
        log.info("epoch %d loss %.4f val F1 %s", epoch, entry["loss"], entry.get("val_method_f1"))
    store.load_state(best_state)
    result = TrainResult(det.model, history, best_epoch, best_f1, time.perf_counter() - started)
    if checkpoint is not None:
        save_detector(checkpoint, result.model, {"train": cfg.to_dict(), "history": history,
                                                 "best_epoch": best_epoch, "depth": _depth_of(examples)})
    return result


def _depth_of(examples: Sequence[LabeledExample]) -> int:
    return examples[0].depth if examples else 0


def save_detector(path, model: Model, extra: dict | None = None) -> None:
    meta = {"config": model.config.to_dict(), "vocab": model.vocab.itos[4:], **(extra or {})}
    save_checkpoint(path, model.store, meta)


def load_detector(path) -> tuple[Model, dict]:
    state, meta = read_checkpoint(path)
    vocab = Vocab(meta["vocab"])
    model = Model(ModelConfig.from_dict(meta["config"]), vocab)
    model.store.load_state(state)
    return model, meta


def evaluate(model: Model, examples: Sequence[LabeledExample], ks: Sequence[int] = KS,
             threshold: float = THRESHOLD) -> dict:
    """Per-kind report on ``examples`` with the always-buggy baseline."""
    known = set(model.vocab.itos)
    seen = {t for e in examples for n in e.graph.nodes for t in n.tokens}
    if seen and not (seen & known):
        raise VocabularyMismatch("no token of the evaluation data is in the checkpoint vocabulary")
    scored = Detector(model).score([e.graph for e in examples])
    report = report_by_kind(examples, scored, ks, threshold)
    report["baseline_always_buggy_f1"] = always_buggy_f1(examples)
    report["config"] = model.config.to_dict()
    report["threshold"] = threshold
    return report


def predict(model: Model, graph: MethodGraph, k: int = 3, threshold: float = THRESHOLD) -> dict:
    """``{method_score, ranked}``; ranked is empty when the method scores as clean."""
    sc = Detector(model).score([graph])[0]
    ranked = []
    if sc.method_score > threshold:
        rk = graph.rankable()
        for i in top_k(sc.stmt_scores, k):
            ranked.append({"line": graph.nodes[rk[i]].line, "score": float(sc.stmt_scores[i])})
    return {"method_score": sc.method_score, "ranked": ranked}


@dataclass
class AblationRow:
    mode: str
    report: dict
    best_epoch: int
    history: list = field(default_factory=list)


def ablate(corpus: Corpus, model_config: ModelConfig, cfg: TrainConfig | None = None,
           ks: Sequence[int] = KS, checkpoint_dir: str | Path | None = None) -> dict:
    """Train standard and interval-based models under identical seeds and compare them.

    With ``checkpoint_dir`` the two models are saved there as ``<mode>.json``.
    """
    cfg = cfg or TrainConfig()
    rows = []
    for mode in ("standard", "ibpm"):
        ck = Path(checkpoint_dir) / f"{mode}.json" if checkpoint_dir is not None else None
        res = train(corpus, replace(model_config, mode=mode), cfg, ck)
        rep = evaluate(res.model, corpus.test, ks, cfg.threshold)
        log.info("%s: trained in %.1f s", mode, res.seconds)
        rows.append(AblationRow(mode, rep, res.best_epoch, res.history))
    std, ibpm = rows[0].report["all"], rows[1].report["all"]
    gap = {"method_f1": ibpm["method"]["f1"] - std["method"]["f1"]}
    for k in ks:
        gap[f"top{k}_f1"] = ibpm["statement"][str(k)]["f1"] - std["statement"][str(k)]["f1"]
    return {"rows": [r.__dict__ for r in rows], "gap_ibpm_minus_standard": gap,
            "baseline_always_buggy_f1": always_buggy_f1(corpus.test), "train": cfg.to_dict()}


def ablation_csv(result: dict) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["mode", "subset", "method_f1", "k", "precision", "recall", "f1", "hit_rate_tp_methods"])
    for row in result["rows"]:
        for subset, rep in row["report"].items():
            if not isinstance(rep, dict) or "statement" not in rep:
                continue
            for k, st in rep["statement"].items():
                w.writerow([row["mode"], subset, f"{rep['method']['f1']:.4f}", k, f"{st['precision']:.4f}",
                            f"{st['recall']:.4f}", f"{st['f1']:.4f}", f"{st['hit_rate_tp_methods']:.4f}"])
    return buf.getvalue()


def dumps_report(report: dict) -> str:
    return json.dumps(report, indent=2, sort_keys=True)
