"""Command-line surface: stats, train, parse, eval, baseline."""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import sys
import time
from pathlib import Path

import numpy as np

from . import data as data_mod
from . import evaluation as ev
from .cky import decode
from .core import BinaryTree, NaryTree, spans_of_tree
from .model import ConfigurationError, init_params, score_spans
from .train import TrainConfig, load_checkpoint, save_checkpoint, train

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2


class UsageError(Exception):
    pass


class DataError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def file_digest(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


def write_manifest(path, command: str, args: argparse.Namespace,
                   inputs: list[str], outputs: list[str], started: float) -> None:
    manifest = {
        "command": command,
        "config": {k: v for k, v in sorted(vars(args).items())
                   if k != "func" and isinstance(v, (str, int, float, bool, type(None)))},
        "inputs": {str(p): file_digest(p) for p in inputs},
        "outputs": [str(p) for p in outputs],
        "elapsed_seconds": round(time.time() - started, 3),
    }
    Path(path).write_text(json.dumps(manifest, indent=2) + "\n", encoding="utf-8")


def _attach_gold(records, gold_path):
    trees = data_mod.read_tree_file(gold_path)
    if len(trees) != len(records):
        raise DataError(
            f"{len(trees)} gold trees for {len(records)} corpus sentences")
    return [data_mod.CorpusRecord(r.sentence, r.brackets, tree)
            for r, (tree, _) in zip(records, trees)]


def _records_from_tree_file(path):
    out = []
    for idx, (tree, sentence) in enumerate(data_mod.read_tree_file(path)):
        sentence = data_mod.Sentence(id=str(idx), tokens=sentence.tokens, pos=sentence.pos)
        out.append(data_mod.CorpusRecord(sentence, data_mod.BracketSet(frozenset()), tree))
    return out


def binary_tree_to_string(tree: BinaryTree, tokens, pos=None, label: str = "X") -> str:
    def render(node: BinaryTree) -> str:
        if node.is_leaf:
            tag = pos[node.i] if pos else label
            return f"({tag} {tokens[node.i]})"
        return f"({label} {render(node.left)} {render(node.right)})"

    if tree.is_leaf:
        return f"({label} {render(tree)})"
    return render(tree)


def cmd_stats(args) -> int:
    records = data_mod.load_corpus(args.corpus)
    if not records:
        raise DataError(f"no usable records in {args.corpus}")
    if args.gold:
        records = _attach_gold(records, args.gold)
    report = data_mod.corpus_stats(records)
    for line in report.lines():
        print(line)
    return EXIT_OK


def cmd_train(args) -> int:
    started = time.time()
    records = data_mod.load_corpus(args.corpus)
    if not records:
        raise DataError(f"no usable records in {args.corpus}")
    config = TrainConfig.from_json(Path(args.config).read_text()) if args.config else TrainConfig()
    if args.seed is not None:
        config.seed = args.seed

    embeddings = None
    if args.embeddings:
        embeddings = data_mod.read_cemb(args.embeddings)
        if len(embeddings) != len(records):
            raise DataError(
                f"{len(embeddings)} embedding records for {len(records)} sentences")
        params = init_params(embeddings[0].shape[1], args.d_h, seed=config.seed)
    else:
        vocab = {}
        for rec in records:
            for tok in rec.sentence.tokens:
                vocab.setdefault(tok, len(vocab))
        params = init_params(args.d_in, args.d_h, vocab_size=len(vocab),
                             seed=config.seed, vocab=vocab)

    params, trace = train(records, params, config, embeddings)

    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    ckpt = out_dir / "checkpoint.npz"
    save_checkpoint(ckpt, params, step=config.total_steps)
    trace_path = out_dir / "loss_trace.csv"
    with open(trace_path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["step", "lr", "mean_loss"])
        for step, lr, loss in trace:
            writer.writerow([step, f"{lr:.10g}", f"{loss:.10g}"])
    inputs = [args.corpus] + ([args.config] if args.config else []) \
        + ([args.embeddings] if args.embeddings else [])
    write_manifest(out_dir / "manifest.json", "train", args, inputs,
                   [ckpt, trace_path], started)
    print(f"wrote {ckpt}")
    return EXIT_OK


def _predict_corpus(params, records, embeddings):
    trees = []
    for idx, rec in enumerate(records):
        n = len(rec.sentence)
        if n == 1:
            trees.append(BinaryTree.leaf(0))
            continue
        if embeddings is not None:
            x = embeddings[idx]
            if x.shape[0] != n:
                raise DataError(
                    f"sentence {rec.sentence.id}: {x.shape[0]} vectors for {n} tokens")
        else:
            from .model import token_vectors

            x = token_vectors(params, rec.sentence.tokens)
        trees.append(decode(score_spans(params, x)))
    return trees


def cmd_parse(args) -> int:
    started = time.time()
    records = data_mod.load_corpus(args.corpus)
    if not records:
        raise DataError(f"no usable records in {args.corpus}")
    params, _, _ = load_checkpoint(args.model)
    embeddings = data_mod.read_cemb(args.embeddings) if args.embeddings else None
    try:
        trees = _predict_corpus(params, records, embeddings)
    except ConfigurationError as e:
        raise DataError(str(e)) from None
    out = Path(args.out)
    with open(out, "w", encoding="utf-8") as fh:
        for rec, tree in zip(records, trees):
            fh.write(binary_tree_to_string(tree, rec.sentence.tokens, rec.sentence.pos) + "\n")
    inputs = [args.corpus, args.model] + ([args.embeddings] if args.embeddings else [])
    write_manifest(out.with_suffix(out.suffix + ".manifest.json"), "parse",
                   args, inputs, [out], started)
    print(f"wrote {out}")
    return EXIT_OK


def cmd_eval(args) -> int:
    gold_records = _records_from_tree_file(args.gold)
    pred = data_mod.read_tree_file(args.pred)
    if len(pred) != len(gold_records):
        raise DataError(f"{len(pred)} predictions for {len(gold_records)} gold trees")
    pred_spans = [tree.span_set() for tree, _ in pred]
    by_id = {rec.sentence.id: spans for rec, spans in zip(gold_records, pred_spans)}
    result = ev.corpus_f1(gold_records, lambda rec: by_id[rec.sentence.id])
    print(f"sentence F1: {100 * result.mean_f1:.1f}")
    print(f"evaluated: {result.evaluated}  skipped (empty gold): {result.skipped_empty_gold}")
    recalls = ev.per_label_recall(gold_records, lambda rec: by_id[rec.sentence.id])
    for label, r in sorted(recalls.items()):
        print(f"  recall {label:<8} {100 * r:.1f}")
    return EXIT_OK


def cmd_baseline(args) -> int:
    records = _records_from_tree_file(args.gold)
    if args.kind == "upper":
        result = ev.binarized_upper_bound(records)
    else:
        rng = np.random.default_rng(args.seed)

        def predictor(rec):
            n = len(rec.sentence)
            if args.kind == "left":
                tree = ev.left_branching(n)
            elif args.kind == "right":
                tree = ev.right_branching(n)
            else:
                tree = ev.random_tree(n, rng)
            return spans_of_tree(tree)

        result = ev.corpus_f1(records, predictor)
    print(f"{args.kind} baseline F1: {100 * result.mean_f1:.1f}")
    return EXIT_OK


def build_parser() -> _Parser:
    parser = _Parser(prog="natbrack", description="Induce constituency parsers "
                     "from noisy partial bracketings.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("stats", help="corpus bracket statistics")
    p.add_argument("corpus")
    p.add_argument("--gold", help="reference trees, one per line, in corpus order")
    p.set_defaults(func=cmd_stats)

    p = sub.add_parser("train", help="train a span scorer")
    p.add_argument("--corpus", required=True)
    p.add_argument("--config", help="JSON training config")
    p.add_argument("--embeddings", help="CEMB file of frozen token vectors")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--d-in", type=int, default=64, help="embedding dim (lookup mode)")
    p.add_argument("--d-h", type=int, default=256)
    p.add_argument("--seed", type=int)
    p.add_argument("--threads", type=int, default=1)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("parse", help="decode a corpus with a trained model")
    p.add_argument("--model", required=True)
    p.add_argument("--corpus", required=True)
    p.add_argument("--embeddings")
    p.add_argument("--out", required=True)
    p.add_argument("--threads", type=int, default=1)
    p.set_defaults(func=cmd_parse)

    p = sub.add_parser("eval", help="score predictions against gold trees")
    p.add_argument("--pred", required=True)
    p.add_argument("--gold", required=True)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("baseline", help="trivial baselines and the binarization bound")
    p.add_argument("--kind", required=True, choices=["left", "right", "random", "upper"])
    p.add_argument("--gold", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_baseline)

    return parser


def run(argv) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except UsageError as e:
        print(f"usage error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except (DataError, OSError, data_mod.CorpusFormatError, data_mod.TreeParseError,
            data_mod.EmbeddingFormatError, ValueError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_DATA


def main() -> None:
    sys.exit(run(sys.argv[1:]))


if __name__ == "__main__":
    main()
