"""Command line entry point: ``ibpm <subcommand> ...``.

Exit codes: 0 success, 1 domain error (one ``error: <Kind>: message`` line on
stderr), 2 usage error. Data goes to stdout or ``--out``; logs go to stderr.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import os
import random
import sys
from pathlib import Path

from . import corpus as corpus_mod
from . import detector
from .graph import CF, Graph, GraphError, Mode
from .intervals import derive
from .layers import CheckpointError
from .methodgraph import MethodGraph
from .minilang import ParseError, build_cfg, inline, parse
from .minilang.ast import to_dict as ast_to_dict
from .minilang.cfg import UnreachableCode
from .minilang.classes import ClassTableError
from .model import ConfigError, ModelConfig
from .propagation import (closed_form_messages, ibpm_bound, max_unit_diameter, run_ibpm_to_fixed_point,
                          run_to_fixed_point)
from .randgraphs import weakly_connected

DEFAULT_SEED = 1970
SEED_ENV = "IBPM_SEED"

DOMAIN_ERRORS = (GraphError, ParseError, UnreachableCode, ClassTableError, corpus_mod.CorpusError, CheckpointError,
                 ConfigError, detector.TrainingDiverged, detector.VocabularyMismatch, OSError, KeyError, ValueError)

log = logging.getLogger("ibpm")


def default_seed() -> int:
    raw = os.environ.get(SEED_ENV)
    if raw is None:
        return DEFAULT_SEED
    try:
        return int(raw)
    except ValueError:
        raise ValueError(f"{SEED_ENV} must be an integer, got {raw!r}") from None


def _emit(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def _json(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def _read_graph(path: str) -> Graph:
    doc = json.loads(Path(path).read_text())
    if "graph" in doc and "nodes" in doc and isinstance(doc["nodes"], list) and isinstance(doc["graph"], dict):
        return MethodGraph.from_dict(doc).graph
    return Graph.from_dict(doc)


def _method_graph(source_path: str, method: str | None, depth: int) -> MethodGraph:
    program = parse(Path(source_path).read_text())
    name = method or program.methods[0].name
    return inline(build_cfg(program, name), program, depth)


def _model_config(args) -> ModelConfig:
    base = {"vocab_size": 1, "embed_dim": 32, "hidden_dim": 32}
    if getattr(args, "config", None):
        base.update(json.loads(Path(args.config).read_text()))
    for key in ("mode", "rounds", "interval_rounds", "cycles"):
        v = getattr(args, key, None)
        if v is not None:
            base[key] = v
    if getattr(args, "dim", None):
        base["embed_dim"] = base["hidden_dim"] = args.dim
    return ModelConfig.from_dict(base)


def _train_config(args) -> detector.TrainConfig:
    return detector.TrainConfig(epochs=args.epochs, batch_size=args.batch_size, lr=args.lr, seed=args.seed)


# subcommands


def cmd_parse(args) -> None:
    program = parse(Path(args.file).read_text())
    _emit(_json(ast_to_dict(program)), args.out)


def cmd_cfg(args) -> None:
    mg = _method_graph(args.file, args.method, args.depth)
    _emit(mg.graph.to_dot() if args.dot else _json(mg.to_dict()), args.out)


def cmd_intervals(args) -> None:
    if args.file:
        g = _method_graph(args.file, args.method, args.depth).graph
    else:
        g = _read_graph(args.graph)
    seq = derive(g)
    if args.dot:
        _emit("\n".join(lv.graph.to_dot() for lv in seq.levels), args.out)
        return
    doc = seq.to_dict()
    doc["partitions"] = [[sorted(iv.members) for iv in lv.partition.intervals] for lv in seq.levels]
    _emit(_json(doc), args.out)


def _ibpm_summary(g: Graph) -> dict | None:
    """IBPM ledger plus bound for a rooted graph; None when not every node is reachable from the entry."""
    if g.entry is None or g.reachable(g.entry) != set(g.nodes):
        return None
    seq = derive(g)
    ledger = run_ibpm_to_fixed_point(seq)
    bound, holds = ibpm_bound(seq, ledger.total)
    return {"ledger": ledger, "seq": seq, "bound": bound, "holds": holds}


def _simulate_one(g: Graph, mode: str) -> dict:
    ib = _ibpm_summary(g)
    if mode == "standard":
        reach, ledger = run_to_fixed_point(g)
        doc = ledger.to_dict()
        doc.update(edges=len(g.proper_edges(CF)), diameter=g.diameter(Mode.SYMMETRIZED))
    else:
        if ib is None:
            raise GraphError("interval-based simulation needs every node reachable from the entry")
        seq = ib["seq"]
        doc = ib["ledger"].to_dict()
        doc.update(closed_form=closed_form_messages(seq), tau=max_unit_diameter(seq), dedup_fired=seq.dedup_fired,
                   terminal=seq.terminal.value, levels=len(seq.levels))
    doc["mode"] = mode
    doc["bound"] = ib["bound"] if ib else None
    # the bound concerns the interval schedule, so it is reported for that schedule in both modes
    doc["holds"] = ib["holds"] if ib else None
    return doc


def cmd_simulate(args) -> None:
    if args.graph:
        _emit(_json(_simulate_one(_read_graph(args.graph), args.mode)), args.out)
        return
    rng = random.Random(args.seed)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["trial", "n", "edges", "diameter", "rounds", "messages_std", "messages_ibpm", "bound", "ok"])
    failures = 0
    for t in range(args.trials):
        g = weakly_connected(rng, rng.randint(1, args.max_nodes), rng.choice([0.05, 0.15, 0.3]))
        reach, ledger = run_to_fixed_point(g)
        diam = g.diameter(Mode.SYMMETRIZED)
        arrivals = all(reach.first_arrival.get((u, v)) == g.distance(u, v, Mode.SYMMETRIZED)
                       for u in g.nodes for v in g.nodes)
        m = len(g.proper_edges(CF))
        ok = arrivals and reach.round == diam and ledger.total == diam * m
        ib = _ibpm_summary(g)
        if ib is not None:
            ok = ok and ib["ledger"].total == closed_form_messages(ib["seq"])
            if not ib["seq"].dedup_fired:
                ok = ok and ib["holds"]
        failures += not ok
        w.writerow([t, len(g.nodes), m, diam, reach.round, ledger.total,
                    "" if ib is None else ib["ledger"].total, "" if ib is None else ib["bound"], int(ok)])
    _emit(buf.getvalue(), args.out)
    if failures:
        raise ValueError(f"{failures} of {args.trials} trials disagree with the distance, diameter or message laws")


def cmd_gen_corpus(args) -> None:
    kinds = [k.strip() for k in args.kinds.split(",") if k.strip()]
    c = corpus_mod.generate(args.n, kinds, args.ratio, args.seed, args.pairs, args.depth, args.test_fraction)
    text = corpus_mod.dumps(c)
    _emit(text, args.out)
    log.info("corpus: %s", c.counts())


def cmd_train(args) -> None:
    c = corpus_mod.load(args.corpus)
    res = detector.train(c, _model_config(args), _train_config(args), args.out)
    log.info("best epoch %d (held-out method F1 %.3f) in %.1f s", res.best_epoch, res.best_val_f1, res.seconds)
    if args.log:
        Path(args.log).write_text(_json(res.history))


def cmd_eval(args) -> None:
    model, _ = detector.load_detector(args.checkpoint)
    c = corpus_mod.load(args.corpus)
    ks = [int(k) for k in args.k.split(",")]
    report = detector.evaluate(model, c.test if args.split == "test" else c.train, ks, args.threshold)
    _emit(_json(report), args.out)


def cmd_predict(args) -> None:
    model, meta = detector.load_detector(args.checkpoint)
    if args.file.endswith(".json"):
        mg = MethodGraph.from_dict(json.loads(Path(args.file).read_text()))
    else:
        depth = meta.get("depth", 0) if args.depth is None else args.depth
        mg = _method_graph(args.file, args.method, depth)
    _emit(_json(detector.predict(model, mg, args.k, args.threshold)), args.out)


def cmd_ablate(args) -> None:
    c = corpus_mod.load(args.corpus)
    if args.checkpoints:
        Path(args.checkpoints).mkdir(parents=True, exist_ok=True)
    result = detector.ablate(c, _model_config(args), _train_config(args), checkpoint_dir=args.checkpoints)
    _emit(_json(result), args.out)
    if args.csv:
        Path(args.csv).write_text(detector.ablation_csv(result))


# parser


def _train_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--corpus", required=True, help="corpus JSONL file")
    p.add_argument("--config", help="model config JSON (fields of ModelConfig)")
    p.add_argument("--dim", type=int, help="embedding and hidden size")
    p.add_argument("--rounds", type=int, help="propagation rounds (standard mode)")
    p.add_argument("--interval-rounds", dest="interval_rounds", type=int, help="rounds per interval phase")
    p.add_argument("--cycles", type=int, help="up/down cycles per forward pass")
    p.add_argument("--epochs", type=int, default=20)
    p.add_argument("--batch-size", dest="batch_size", type=int, default=16)
    p.add_argument("--lr", type=float, default=2e-3)


def build_parser(seed: int) -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="ibpm", description="Interval-based GNN bug detection toolkit.")
    ap.add_argument("-v", "--verbose", action="count", default=0, help="log progress to stderr")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("parse", help="parse a .mini file and print its syntax tree as JSON")
    p.add_argument("file")
    p.add_argument("--out")
    p.set_defaults(func=cmd_parse)

    p = sub.add_parser("cfg", help="statement-level graph of one method")
    p.add_argument("file")
    p.add_argument("--method")
    p.add_argument("--depth", type=int, default=0, choices=(0, 1, 2))
    p.add_argument("--dot", action="store_true")
    p.add_argument("--out")
    p.set_defaults(func=cmd_cfg)

    p = sub.add_parser("intervals", help="interval partitions of the derived sequence")
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--graph", help="graph JSON (plain graph or method graph)")
    src.add_argument("--file", help=".mini source")
    p.add_argument("--method")
    p.add_argument("--depth", type=int, default=0, choices=(0, 1, 2))
    p.add_argument("--dot", action="store_true")
    p.add_argument("--out")
    p.set_defaults(func=cmd_intervals)

    p = sub.add_parser("simulate", help="message-count simulation on one graph or on random trials")
    p.add_argument("--graph")
    p.add_argument("--mode", choices=("standard", "ibpm"), default="standard")
    p.add_argument("--trials", type=int, default=1000)
    p.add_argument("--max-nodes", dest="max_nodes", type=int, default=12)
    p.add_argument("--seed", type=int, default=seed)
    p.add_argument("--out")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("gen-corpus", help="generate a labelled synthetic corpus")
    p.add_argument("--n", type=int, default=400)
    p.add_argument("--kinds", default="NullDeref,IndexOob")
    p.add_argument("--ratio", type=float, default=3.0)
    p.add_argument("--pairs", type=int, default=3)
    p.add_argument("--depth", type=int, default=1, choices=(0, 1, 2))
    p.add_argument("--test-fraction", dest="test_fraction", type=float, default=0.25)
    p.add_argument("--seed", type=int, default=seed)
    p.add_argument("--out")
    p.set_defaults(func=cmd_gen_corpus)

    p = sub.add_parser("train", help="train a detector and save the best checkpoint")
    _train_flags(p)
    p.add_argument("--mode", choices=("standard", "ibpm"))
    p.add_argument("--seed", type=int, default=seed)
    p.add_argument("--out", required=True, help="checkpoint path")
    p.add_argument("--log", help="write the per-epoch history here")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", help="top-k evaluation of a checkpoint")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--corpus", required=True)
    p.add_argument("--split", choices=("test", "train"), default="test")
    p.add_argument("--k", default="1,3,5")
    p.add_argument("--threshold", type=float, default=detector.THRESHOLD)
    p.add_argument("--out")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("predict", help="rank the statements of one method")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("file", help=".mini source or method graph JSON")
    p.add_argument("--method")
    p.add_argument("--depth", type=int, choices=(0, 1, 2))
    p.add_argument("--k", type=int, default=3)
    p.add_argument("--threshold", type=float, default=detector.THRESHOLD)
    p.add_argument("--out")
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("ablate", help="standard vs interval-based propagation under identical seeds")
    _train_flags(p)
    p.add_argument("--seed", type=int, default=seed)
    p.add_argument("--out")
    p.add_argument("--csv")
    p.add_argument("--checkpoints", help="directory for the standard.json and ibpm.json checkpoints")
    p.set_defaults(func=cmd_ablate)
    return ap


def main(argv: list[str] | None = None) -> int:
    try:
        seed = default_seed()
    except ValueError as exc:
        print(f"error: ConfigError: {exc}", file=sys.stderr)
        return 1
    parser = build_parser(seed)
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, stream=sys.stderr,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        args.func(args)
    except DOMAIN_ERRORS as exc:
        msg = str(exc).replace("\n", " ")
        print(f"error: {type(exc).__name__}: {msg}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
