"""Command-line entry point: ``shallowd train|parse|score|inspect``."""

from __future__ import annotations

import argparse
import json
import logging
import sys

from . import explicit as ex
from . import nonexplicit as nx
from . import pipeline
from . import scorer
from .config import load_config
from .corpus import load_corpus, load_relations, span_text, write_relations
from .errors import ConfigError, DataError, TrainingError

EXIT_OK, EXIT_USAGE, EXIT_DATA = 0, 1, 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _parser():
    root = _Parser(prog="shallowd", description="Shallow discourse parser.")
    root.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = root.add_subparsers(dest="command", required=True, parser_class=_Parser)

    t = sub.add_parser("train", help="train all models on a gold corpus")
    t.add_argument("--parses", required=True)
    t.add_argument("--relations", required=True)
    t.add_argument("--raw", help="directory of raw document texts")
    t.add_argument("--config", help="TOML configuration file")
    t.add_argument("--models", help="output bundle directory (overrides model_dir)")
    t.add_argument("--embeddings", help="word2vec file (overrides the config)")
    t.add_argument("--seed", type=int)
    t.add_argument("--trim-train-on", choices=("predicted", "gold"))

    p = sub.add_parser("parse", help="annotate documents with a trained bundle")
    p.add_argument("--parses", required=True)
    p.add_argument("--models", required=True)
    p.add_argument("--out", required=True, help="output relations file (NDJSON)")
    p.add_argument("--raw")
    p.add_argument("--cross-paragraph", action="store_true", default=None)

    s = sub.add_parser("score", help="score predicted relations against gold")
    s.add_argument("--gold", required=True)
    s.add_argument("--pred", required=True)
    s.add_argument("--partial", action="store_true", help="70%% overlap argument matching")
    s.add_argument("--json", help="also write the report as JSON to this path")
    s.add_argument("--parses", help="corpus whose document ids bound the evaluation")

    i = sub.add_parser("inspect", help="show the features behind one relation")
    i.add_argument("--parses", required=True)
    i.add_argument("--relations", required=True)
    i.add_argument("--id", type=int, required=True, help="relation ID")
    i.add_argument("--doc", help="document id, when IDs repeat across documents")
    i.add_argument("--raw")
    return root


def _train(args):
    overrides = {"model_dir": args.models, "embeddings": args.embeddings, "seed": args.seed,
                 "trim_train_on": args.trim_train_on}
    config = load_config(args.config, overrides)
    if not config.model_dir:
        raise ConfigError("no model directory: pass --models or set paths.model_dir")
    docs = load_corpus(args.parses, args.raw)
    gold = load_relations(args.relations)
    bundle = pipeline.train_all(docs, gold, config)
    pipeline.save_bundle(bundle, config.model_dir)
    print(f"saved model bundle to {config.model_dir}")


def _parse(args):
    bundle = pipeline.load_bundle(args.models)
    docs = load_corpus(args.parses, args.raw)
    rels = pipeline.parse(docs, bundle, args.cross_paragraph)
    write_relations(rels, args.out)
    print(f"wrote {len(rels)} relations to {args.out}")


def _score(args):
    gold = load_relations(args.gold)
    pred = load_relations(args.pred)
    doc_ids = [d.doc_id for d in load_corpus(args.parses)] if args.parses else None
    report = scorer.score(gold, pred, scorer.PARTIAL if args.partial else scorer.EXACT, doc_ids)
    sys.stdout.write(scorer.format_report(report))
    if args.json:
        with open(args.json, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(scorer.report_json(report))


def _inspect(args):
    docs = {d.doc_id: d for d in load_corpus(args.parses, args.raw)}
    rels = [r for r in load_relations(args.relations)
            if r.relation_id == args.id and (args.doc is None or r.doc_id == args.doc)]
    if not rels:
        raise UsageError(f"no relation with ID {args.id}")
    rel = rels[0]
    doc = docs.get(rel.doc_id)
    if doc is None:
        raise UsageError(f"relation {rel.relation_id} refers to unknown document {rel.doc_id!r}")
    out = {
        "doc": rel.doc_id,
        "id": rel.relation_id,
        "type": rel.rel_type.value,
        "senses": list(rel.senses),
        "arg1": span_text(doc, rel.arg1),
        "arg2": span_text(doc, rel.arg2),
    }
    if rel.is_explicit:
        out["connective"] = span_text(doc, rel.connective)
        s_idx = doc.tokens[rel.connective.token_refs[0]].sent_index
        sent = doc.sentences[s_idx]
        base = sent.tokens[0].doc_tok_index
        toks = tuple(i - base for i in rel.connective.token_refs)
        cand = ex.ConnectiveCandidate(doc.doc_id, s_idx, toks, out["connective"].lower(), False)
        out["connective_features"] = ex.extract_connective_features(cand, sent).as_dict()
        nodes, seq = ex.segmentation_sequence(cand, sent)
        out["candidate_constituents"] = [
            {"label": n.label, "text": " ".join(sent.tokens[j].surface for j in n.token_indices()),
             "features": sorted(obs)}
            for n, obs in zip(nodes, seq.observations if seq else ())
        ]
    else:
        words1 = [doc.tokens[i].surface.lower() for i in rel.arg1.token_refs]
        words2 = [doc.tokens[i].surface.lower() for i in rel.arg2.token_refs]
        out["convnet_input"] = {"arg1": words1, "arg2": words2}
        out["candidate_pairs"] = [
            [p.sent1, p.sent2] for p in nx.candidate_pairs(doc, [])
        ]
    print(json.dumps(out, indent=2, ensure_ascii=False))


_COMMANDS = {"train": _train, "parse": _parse, "score": _score, "inspect": _inspect}


def main(argv=None):
    try:
        args = _parser().parse_args(argv)
        logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                            format="%(levelname)s %(name)s: %(message)s")
        _COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (DataError, ConfigError, TrainingError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
