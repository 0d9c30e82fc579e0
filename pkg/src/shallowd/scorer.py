"""Precision/recall/F1 of predicted relations against gold, under exact or
partial argument matching."""

from __future__ import annotations

import json
from collections import defaultdict
from dataclasses import asdict, dataclass

from .errors import ScoringError

EXACT = "exact"
PARTIAL = "partial"
PARTIAL_NUM, PARTIAL_DEN = 7, 10  # 70% token overlap


@dataclass(frozen=True)
class PRF:
    precision: float
    recall: float
    f1: float
    tp: int
    fp: int
    fn: int

    @classmethod
    def from_counts(cls, tp, fp, fn):
        p = tp / (tp + fp) if tp + fp else 0.0
        r = tp / (tp + fn) if tp + fn else 0.0
        f = 2 * p * r / (p + r) if p + r else 0.0
        return cls(p, r, f, tp, fp, fn)


COMPONENTS = (
    "connective",
    "arg1",
    "arg2",
    "arg_both",
    "args_explicit",
    "args_nonexplicit",
    "sense_overall",
    "sense_explicit",
    "sense_nonexplicit",
    "parser_overall",
    "parser_explicit",
    "parser_nonexplicit",
)


@dataclass(frozen=True)
class ScoreReport:
    mode: str
    connective: PRF
    arg1: PRF
    arg2: PRF
    arg_both: PRF
    args_explicit: PRF
    args_nonexplicit: PRF
    sense_overall: PRF
    sense_explicit: PRF
    sense_nonexplicit: PRF
    parser_overall: PRF
    parser_explicit: PRF
    parser_nonexplicit: PRF

    def components(self):
        return {name: getattr(self, name) for name in COMPONENTS}

    def to_dict(self):
        return {"mode": self.mode, **{k: asdict(v) for k, v in self.components().items()}}


def span_match(gold, pred, mode=EXACT):
    """Token-set equality, or in partial mode at least 70% overlap measured
    against both the gold and the predicted span."""
    g, p = _tokens(gold), _tokens(pred)
    if mode == EXACT:
        return g == p
    if mode != PARTIAL:
        raise ValueError(f"unknown match mode {mode!r}")
    if not g or not p:
        return g == p
    common = len(g & p)
    return common * PARTIAL_DEN >= PARTIAL_NUM * len(g) and common * PARTIAL_DEN >= PARTIAL_NUM * len(p)


def _tokens(span):
    if hasattr(span, "as_set"):
        return span.as_set()
    return frozenset(span)


def align(golds, preds, match):
    """One-to-one alignment of predictions to gold relations.

    Predictions are taken in document order and each grabs the earliest
    free gold it matches; when every matching gold is taken, an augmenting
    path re-seats earlier predictions so that the alignment is maximal.
    Returns ``(gold_index, pred_index)`` pairs.
    """
    adj = [[g for g in range(len(golds)) if match(golds[g], preds[p])] for p in range(len(preds))]
    owner = [-1] * len(golds)

    def augment(p, seen):
        for g in adj[p]:
            if g in seen:
                continue
            seen.add(g)
            if owner[g] < 0 or augment(owner[g], seen):
                owner[g] = p
                return True
        return False

    for p in range(len(preds)):
        augment(p, set())
    return sorted((g, p) for g, p in enumerate(owner) if p >= 0)


def _doc_order(rels):
    return sorted(rels, key=lambda r: (r.first_token(), r.relation_id))


def _sense_ok(gold, pred):
    return pred.senses[0] in gold.senses


def _count(gold_by_doc, pred_by_doc, select, match):
    tp = n_gold = n_pred = 0
    for doc_id in set(gold_by_doc) | set(pred_by_doc):
        golds = [r for r in gold_by_doc.get(doc_id, ()) if select(r)]
        preds = [r for r in pred_by_doc.get(doc_id, ()) if select(r)]
        n_gold += len(golds)
        n_pred += len(preds)
        if golds and preds:
            tp += len(align(golds, preds, match))
    return PRF.from_counts(tp, n_pred - tp, n_gold - tp)


def score(gold, pred, mode=EXACT, doc_ids=None):
    if mode not in (EXACT, PARTIAL):
        raise ValueError(f"unknown match mode {mode!r}")
    known = set(doc_ids) if doc_ids is not None else {r.doc_id for r in gold}
    gold_by_doc, pred_by_doc = defaultdict(list), defaultdict(list)
    for r in gold:
        if r.doc_id not in known:
            raise ScoringError(f"gold relation {r.relation_id} references unknown document {r.doc_id!r}")
        gold_by_doc[r.doc_id].append(r)
    for r in pred:
        if r.doc_id not in known:
            raise ScoringError(f"predicted relation {r.relation_id} references unknown document {r.doc_id!r}")
        pred_by_doc[r.doc_id].append(r)
    for d in (gold_by_doc, pred_by_doc):
        for k in d:
            d[k] = _doc_order(d[k])

    def args(g, p):
        return span_match(g.arg1, p.arg1, mode) and span_match(g.arg2, p.arg2, mode)

    def same_kind(g, p):
        return g.is_explicit == p.is_explicit

    def sense(g, p):
        return same_kind(g, p) and args(g, p) and _sense_ok(g, p)

    def parser(g, p):
        if not sense(g, p):
            return False
        return not g.is_explicit or span_match(g.connective, p.connective, mode)

    everything = lambda r: True  # noqa: E731
    explicit = lambda r: r.is_explicit  # noqa: E731
    nonexplicit = lambda r: not r.is_explicit  # noqa: E731
    c = lambda sel, m: _count(gold_by_doc, pred_by_doc, sel, m)  # noqa: E731
    return ScoreReport(
        mode=mode,
        connective=c(explicit, lambda g, p: span_match(g.connective, p.connective, mode)),
        arg1=c(everything, lambda g, p: span_match(g.arg1, p.arg1, mode)),
        arg2=c(everything, lambda g, p: span_match(g.arg2, p.arg2, mode)),
        arg_both=c(everything, args),
        args_explicit=c(explicit, args),
        args_nonexplicit=c(nonexplicit, args),
        sense_overall=c(everything, sense),
        sense_explicit=c(explicit, sense),
        sense_nonexplicit=c(nonexplicit, sense),
        parser_overall=c(everything, parser),
        parser_explicit=c(explicit, parser),
        parser_nonexplicit=c(nonexplicit, parser),
    )


_SECTIONS = (
    ("Full Parsing", (("Overall", "parser_overall"), ("Explicit", "parser_explicit"),
                      ("Non-Explicit", "parser_nonexplicit"))),
    ("Identification of Explicit Discourse Connective", (("Explicit", "connective"),)),
    ("Argument Identification", (("Overall", "arg_both"), ("Explicit", "args_explicit"),
                                 ("Non-Explicit", "args_nonexplicit"))),
    ("Argument Boundaries", (("Arg1", "arg1"), ("Arg2", "arg2"), ("Arg1 & Arg2", "arg_both"))),
    ("Sense Labeling (Supplementary task)", (("Overall", "sense_overall"), ("Explicit", "sense_explicit"),
                                             ("Non-Explicit", "sense_nonexplicit"))),
)


def format_report(report):
    width = 48
    lines = [f"{'Match mode: ' + report.mode:<{width}}{'P':>10}{'R':>10}{'F1':>10}"]
    for title, rows in _SECTIONS:
        lines.append(title)
        for label, name in rows:
            prf = getattr(report, name)
            lines.append(f"{'  ' + label:<{width}}{prf.precision:>10.4f}{prf.recall:>10.4f}{prf.f1:>10.4f}")
    return "\n".join(lines) + "\n"


def report_json(report):
    return json.dumps(report.to_dict(), indent=2, sort_keys=True) + "\n"
