"""End-to-end training and parsing, and the on-disk model bundle."""

from __future__ import annotations

import json
import logging
import os
from dataclasses import dataclass, field

import numpy as np

from . import crf as crf_mod
from . import decision_tree as dt
from . import explicit as ex
from . import neural
from . import nonexplicit as nx
from .config import PipelineConfig
from .corpus import SenseInventory
from .embeddings import load_embeddings
from .errors import ConfigError, ModelFormatError, TrainingError
from .syntax import HeadRule, default_head_rules, load_head_rules, use_head_rules

log = logging.getLogger(__name__)

BUNDLE_VERSION = 1
BUNDLE_FILES = {
    "detector": "detector.json",
    "senser": "senser.json",
    "segmenter": "segmenter.json",
    "trimmer": "trimmer.json",
    "binary_net": "binary_net.bin",
    "multiclass_net": "multiclass_net.bin",
}
MANIFEST = "bundle.json"


@dataclass
class ModelBundle:
    detector: object
    senser: object
    segmenter: object
    trimmer: object
    binary_net: object
    multiclass_net: object
    lexicon: ex.ConnectiveLexicon
    head_rules: dict
    config: dict = field(default_factory=dict)

    @property
    def explicit_models(self):
        return ex.ExplicitModels(self.detector, self.senser, self.segmenter, self.trimmer)

    @property
    def nonexplicit_models(self):
        return nx.NonExplicitModels(self.binary_net, self.multiclass_net)


# --- training sets -----------------------------------------------------------------------


def _gold_by_doc(gold):
    out = {}
    for rel in gold:
        out.setdefault(rel.doc_id, []).append(rel)
    return out


def _matched_candidates(doc, lexicon, gold_rels):
    """Every lexicon candidate paired with the gold explicit relation whose
    connective has exactly its tokens, or ``None``."""
    by_conn = {r.connective.as_set(): r for r in gold_rels if r.is_explicit}
    out = []
    for cand in ex.document_candidates(doc, lexicon):
        key = frozenset(cand.doc_indices(doc.sentences[cand.sent_index]))
        out.append((cand, by_conn.get(key)))
    return out


def connective_instances(docs, gold_by_doc, lexicon, senses):
    detector, senser = [], []
    for doc in docs:
        for cand, rel in _matched_candidates(doc, lexicon, gold_by_doc.get(doc.doc_id, ())):
            feats = ex.extract_connective_features(cand, doc.sentences[cand.sent_index]).as_dict()
            detector.append(dt.Instance(feats, ex.DISCOURSE if rel else ex.NON_DISCOURSE))
            if rel is None:
                continue
            label = next((senses.normalize(s) for s in rel.senses if senses.normalize(s)), None)
            if label is not None:
                senser.append(dt.Instance(feats, label))
    return detector, senser


def segmentation_instances(docs, gold_by_doc, lexicon):
    data = []
    for doc in docs:
        for cand, rel in _matched_candidates(doc, lexicon, gold_by_doc.get(doc.doc_id, ())):
            if rel is None:
                continue
            sent = doc.sentences[cand.sent_index]
            nodes, seq = ex.segmentation_sequence(cand, sent)
            if seq is None:
                continue
            data.append((seq, ex.project_gold(nodes, sent, rel.arg1.as_set(), rel.arg2.as_set())))
    return data


def trim_instances(docs, gold_by_doc, lexicon, segmenter=None):
    """Trimmer data over untrimmed spans from the trained segmenter, or from
    projected gold labels when ``segmenter`` is None."""
    data = []
    for doc in docs:
        for cand, rel in _matched_candidates(doc, lexicon, gold_by_doc.get(doc.doc_id, ())):
            if rel is None:
                continue
            if segmenter is not None:
                seg = ex.segment_arguments(cand, doc, segmenter)
            else:
                sent = doc.sentences[cand.sent_index]
                nodes, _ = ex.segmentation_sequence(cand, sent)
                labels = ex.project_gold(nodes, sent, rel.arg1.as_set(), rel.arg2.as_set())
                seg = ex.merge_labels(cand, doc, nodes, labels)
            for refs, arg_type, gold_span in ((seg.arg1, "Arg1", rel.arg1), (seg.arg2, "Arg2", rel.arg2)):
                units = ex.trim_units(refs, arg_type, doc)
                for unit, label in zip(units, ex.trim_labels(units, gold_span.token_refs)):
                    data.append(dt.Instance(unit.features.as_dict(), label))
    return data


def pair_examples(docs, gold_by_doc, senses, cross_paragraph=False):
    """Candidate pairs as ``(doc, pair, sense_or_None)``.

    A pair is positive when a gold non-explicit relation has Arg1 in its
    first sentence and Arg2 in its second. Pairs spanned by a gold explicit
    relation are skipped, exactly as at parse time.
    """
    out = []
    for doc in docs:
        rels = gold_by_doc.get(doc.doc_id, ())
        explicit = [r for r in rels if r.is_explicit]
        labelled = {}
        for r in rels:
            if r.is_explicit:
                continue
            s1, s2 = r.arg1.sentence_indices(), r.arg2.sentence_indices()
            if s1 is None:
                s1 = sorted({doc.tokens[i].sent_index for i in r.arg1.token_refs})
                s2 = sorted({doc.tokens[i].sent_index for i in r.arg2.token_refs})
            if len(s1) != 1 or len(s2) != 1:
                continue
            label = next((senses.normalize(s) for s in r.senses if senses.normalize(s)), None)
            if label is not None:
                labelled.setdefault((s1[0], s2[0]), label)
        for pair in nx.candidate_pairs(doc, explicit, cross_paragraph):
            out.append((doc, pair, labelled.get((pair.sent1, pair.sent2))))
    return out


# --- training ------------------------------------------------------------------------------


def _fit_tree(data, config, name):
    if not data:
        raise TrainingError(f"{name}: no training instances")
    return dt.train_c45(data, config)


def _split_dev(examples, fraction, rng):
    if fraction <= 0 or len(examples) < 10:
        return examples, []
    order = rng.permutation(len(examples))
    n_dev = max(1, int(round(fraction * len(examples))))
    dev = [examples[i] for i in sorted(order[:n_dev])]
    train = [examples[i] for i in sorted(order[n_dev:])]
    return train, dev


def _train_net(name, classes, examples, embedding, limits, cfg, seed):
    conv = cfg.convnet
    net = neural.ConvNet.init(classes, embedding, conv.n_filters, conv.widths, limits,
                              conv.alpha, conv.dropout, seed)
    encoded = [(net.encode(a1, a2), classes.index(y)) for a1, a2, y in examples]
    rng = np.random.default_rng(seed)
    train, dev = _split_dev(encoded, conv.dev_fraction, rng)
    best, hist = neural.train(net, train, dev, conv.train)
    log.info("%s: %d examples, best epoch %d", name, len(encoded), hist.best_epoch)
    return best


def _load_rules(config):
    if config.head_rules is None:
        use_head_rules(None)
        return default_head_rules()
    try:
        rules = load_head_rules(config.head_rules)
    except OSError as exc:
        raise ConfigError(f"cannot read head rules: {exc}") from None
    use_head_rules(rules)
    return rules


def _load_lexicon(config):
    try:
        return ex.ConnectiveLexicon.load(config.lexicon)
    except OSError as exc:
        raise ConfigError(f"cannot read connective lexicon: {exc}") from None


def _load_senses(path, default):
    try:
        return SenseInventory.load(path, default)
    except OSError as exc:
        raise ConfigError(f"cannot read sense inventory: {exc}") from None


def train_all(docs, gold, config=None):
    """Fit all six models on parsed documents and their gold relations."""
    config = config or PipelineConfig()
    if config.embeddings is None or not os.path.isfile(config.embeddings):
        raise ConfigError(f"embedding file not found: {config.embeddings}")
    rules = _load_rules(config)
    lexicon = _load_lexicon(config)
    exp_senses = _load_senses(config.explicit_senses, "senses_explicit.txt")
    non_senses = _load_senses(config.nonexplicit_senses, "senses_nonexplicit.txt")
    gold_by_doc = _gold_by_doc(gold)

    det_data, sense_data = connective_instances(docs, gold_by_doc, lexicon, exp_senses)
    detector = _fit_tree(det_data, config.c45, "connective detector")
    senser = _fit_tree(sense_data, config.c45, "connective sense labeler")
    log.info("connective trees: %d / %d instances", len(det_data), len(sense_data))

    seg_data = segmentation_instances(docs, gold_by_doc, lexicon)
    if not seg_data:
        raise TrainingError("argument segmenter: no training sequences")
    segmenter = crf_mod.train_crf(seg_data, config.crf, labels=ex.SEGMENT_LABELS)

    source = segmenter if config.trim_train_on == "predicted" else None
    trimmer = _fit_tree(trim_instances(docs, gold_by_doc, lexicon, source), config.c45, "argument trimmer")

    pairs = pair_examples(docs, gold_by_doc, non_senses, config.cross_paragraph)
    positives = [p for p in pairs if p[2] is not None]
    negatives = [p for p in pairs if p[2] is None]
    if not positives:
        raise TrainingError("binary relation ConvNet: no non-explicit gold relations to learn from")
    rng = np.random.default_rng(config.seed)
    n_neg = min(len(negatives), int(round(config.convnet.negative_ratio * len(positives))))
    if n_neg < len(negatives):
        keep = sorted(rng.choice(len(negatives), size=n_neg, replace=False))
        negatives = [negatives[i] for i in keep]
    if not negatives:
        raise TrainingError("binary relation ConvNet: no negative candidate pairs")

    words = [nx.pair_words(p, d) for d, p, _ in positives + negatives]
    vocab = {w.lower() for a1, a2 in words for w in a1 + a2}
    try:
        embedding = load_embeddings(config.embeddings, vocab, config.seed)
    except OSError as exc:
        raise ConfigError(f"cannot read embeddings: {exc}") from None
    limits = neural.length_limits([len(a) for a, _ in words], [len(b) for _, b in words],
                                  config.convnet.percentile)
    shortfall = max(config.convnet.widths) - sum(limits)
    if shortfall > 0:
        limits = (limits[0], limits[1] + shortfall)

    binary_ex = [(*nx.pair_words(p, d), nx.RELATION if y else nx.NO_RELATION)
                 for d, p, y in positives + negatives]
    binary_net = _train_net("binary ConvNet", nx.BINARY_CLASSES, binary_ex, embedding, limits,
                            config, config.seed)
    classes = tuple(sorted({y for _, _, y in positives}))
    if len(classes) < 2:
        raise TrainingError(f"sense ConvNet: needs at least two senses, found {list(classes)}")
    multi_ex = [(*nx.pair_words(p, d), y) for d, p, y in positives]
    multiclass_net = _train_net("sense ConvNet", classes, multi_ex, embedding, limits,
                                config, config.seed + 1)
    return ModelBundle(detector, senser, segmenter, trimmer, binary_net, multiclass_net,
                       lexicon, dict(rules), config.snapshot())


# --- parsing -------------------------------------------------------------------------------


def parse(docs, bundle, cross_paragraph=None):
    """Relations for every document: all explicit ones first, in document
    order, followed by the non-explicit ones."""
    if cross_paragraph is None:
        cross_paragraph = bool(bundle.config.get("cross_paragraph", False))
    use_head_rules(bundle.head_rules)
    explicit_out, nonexplicit_out = [], []
    for doc in docs:
        exp = ex.annotate_explicit(doc, bundle.lexicon, bundle.explicit_models)
        non = nx.annotate_nonexplicit(doc, exp, bundle.nonexplicit_models, len(exp), cross_paragraph)
        explicit_out.extend(exp)
        nonexplicit_out.extend(non)
    return explicit_out + nonexplicit_out


# --- bundle i/o -------------------------------------------------------------------------------


def save_bundle(bundle, directory):
    os.makedirs(directory, exist_ok=True)
    for key in ("detector", "senser", "trimmer"):
        dt.save(getattr(bundle, key), os.path.join(directory, BUNDLE_FILES[key]))
    crf_mod.save(bundle.segmenter, os.path.join(directory, BUNDLE_FILES["segmenter"]))
    for key in ("binary_net", "multiclass_net"):
        neural.save(getattr(bundle, key), os.path.join(directory, BUNDLE_FILES[key]))
    manifest = {
        "version": BUNDLE_VERSION,
        "files": BUNDLE_FILES,
        "lexicon": list(bundle.lexicon.patterns),
        "head_rules": {k: [r.direction, list(r.priorities)] for k, r in sorted(bundle.head_rules.items())},
        "config": bundle.config,
    }
    with open(os.path.join(directory, MANIFEST), "w", encoding="utf-8", newline="\n") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")


def load_bundle(directory):
    path = os.path.join(directory, MANIFEST)
    try:
        with open(path, encoding="utf-8") as fh:
            manifest = json.load(fh)
    except OSError as exc:
        raise ModelFormatError(f"cannot read model bundle: {exc}") from None
    except json.JSONDecodeError as exc:
        raise ModelFormatError(f"{path}: malformed JSON: {exc.msg}") from None
    if manifest.get("version") != BUNDLE_VERSION:
        raise ModelFormatError(f"{path}: unsupported bundle version {manifest.get('version')}")
    files = manifest["files"]

    def p(key):
        return os.path.join(directory, files[key])

    try:
        trees = {k: dt.load(p(k)) for k in ("detector", "senser", "trimmer")}
        segmenter = crf_mod.load(p("segmenter"))
        nets = {k: neural.load(p(k)) for k in ("binary_net", "multiclass_net")}
    except OSError as exc:
        raise ModelFormatError(f"incomplete model bundle: {exc}") from None
    rules = {k: HeadRule(d, tuple(pr)) for k, (d, pr) in manifest["head_rules"].items()}
    return ModelBundle(trees["detector"], trees["senser"], segmenter, trees["trimmer"],
                       nets["binary_net"], nets["multiclass_net"],
                       ex.ConnectiveLexicon(tuple(manifest["lexicon"])), rules, manifest["config"])
