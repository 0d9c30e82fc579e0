"""Constituency-tree utilities.

Trees are read from Penn-style bracketed strings. Preterminals (a POS label
over a single word) are the leaves of a :class:`ParseNode` tree, so a leaf's
``span`` is ``(i, i)`` for the token index ``i`` within the sentence.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from importlib import resources

from .errors import TreeSyntaxError

ROOT_SENTINEL = "ROOT"
NONE_SENTINEL = "NONE"

_TOKEN_RE = re.compile(r"\(|\)|[^\s()]+")


class ParseNode:
    __slots__ = ("label", "children", "word", "span", "parent")

    def __init__(self, label, children=(), word=None):
        self.label = label
        self.children = list(children)
        self.word = word
        self.span = (-1, -1)
        self.parent = None
        for child in self.children:
            child.parent = self

    @property
    def is_leaf(self):
        return not self.children

    def leaves(self):
        if self.is_leaf:
            return [self]
        out = []
        stack = [self]
        while stack:
            node = stack.pop()
            if node.is_leaf:
                out.append(node)
            else:
                stack.extend(reversed(node.children))
        return out

    def walk(self):
        """Pre-order traversal."""
        stack = [self]
        while stack:
            node = stack.pop()
            yield node
            stack.extend(reversed(node.children))

    def token_indices(self):
        return range(self.span[0], self.span[1] + 1)

    def __len__(self):
        return self.span[1] - self.span[0] + 1

    def __repr__(self):
        return f"ParseNode({self.label!r}, span={self.span})"


def _clean_label(label):
    if not label or label.startswith("-"):
        return label
    return re.split(r"[-=]", label, maxsplit=1)[0] or label


def parse_bracketed(tree_str):
    """Parse a bracketed tree string into a :class:`ParseNode`.

    Functional tags are stripped, ``-NONE-`` leaves are removed together with
    any node left without a yield, and an unlabeled single-child wrapper
    (``( (S ...) )``) is collapsed.
    """
    if tree_str is None or not tree_str.strip():
        raise TreeSyntaxError("empty tree string", 0)
    tokens = [(m.group(), m.start()) for m in _TOKEN_RE.finditer(tree_str)]
    stack = []  # frames: [label, children, open_pos]
    root = None
    i = 0
    while i < len(tokens):
        tok, pos = tokens[i]
        if tok == "(":
            if root is not None:
                raise TreeSyntaxError("content after the root node", pos)
            label = ""
            if i + 1 < len(tokens) and tokens[i + 1][0] not in "()":
                label = tokens[i + 1][0]
                i += 1
            # preterminal: (POS word)
            if (
                i + 2 < len(tokens)
                and tokens[i + 1][0] not in "()"
                and tokens[i + 2][0] == ")"
            ):
                word = tokens[i + 1][0]
                leaf = None if label == "-NONE-" else ParseNode(label, word=word)
                if stack:
                    if leaf is not None:
                        stack[-1][1].append(leaf)
                elif leaf is not None:
                    root = leaf
                else:
                    raise TreeSyntaxError("tree has no tokens", pos)
                i += 3
                continue
            stack.append([label, [], pos])
        elif tok == ")":
            if not stack:
                raise TreeSyntaxError("unbalanced ')'", pos)
            label, children, _ = stack.pop()
            node = ParseNode(_clean_label(label), children) if children else None
            if stack:
                if node is not None:
                    stack[-1][1].append(node)
            else:
                if node is None:
                    raise TreeSyntaxError("tree has no tokens", pos)
                root = node
        else:
            raise TreeSyntaxError(f"unexpected symbol {tok!r}", pos)
        i += 1
    if stack:
        raise TreeSyntaxError("unbalanced '('", stack[-1][2])
    if root is None:
        raise TreeSyntaxError("no tree found", 0)
    while root.label == "" and len(root.children) == 1 and not root.children[0].is_leaf:
        root = root.children[0]
    if root.label == "":
        root.label = "TOP"
    root.parent = None
    _assign_spans(root)
    return root


def _assign_spans(root):
    counter = 0

    def visit(node):
        nonlocal counter
        if node.is_leaf:
            node.span = (counter, counter)
            counter += 1
            return
        for child in node.children:
            visit(child)
        node.span = (node.children[0].span[0], node.children[-1].span[1])

    visit(root)


def flat_tree(words, pos_tags, label="S"):
    """Flat stand-in tree for sentences that arrive without a parse."""
    root = ParseNode(label, [ParseNode(p, word=w) for w, p in zip(words, pos_tags)])
    _assign_spans(root)
    return root


def print_bracketed(node):
    if node.is_leaf:
        return f"({node.label} {node.word})"
    return f"({node.label} " + " ".join(print_bracketed(c) for c in node.children) + ")"


def _leaf_at(root, tok_index):
    node = root
    while not node.is_leaf:
        for child in node.children:
            if child.span[0] <= tok_index <= child.span[1]:
                node = child
                break
        else:  # pragma: no cover - spans are contiguous
            raise AssertionError("span bookkeeping broken")
    return node


def lowest_covering(root, tok_indices):
    lo, hi = min(tok_indices), max(tok_indices)
    node = _leaf_at(root, lo)
    while not (node.span[0] <= lo and hi <= node.span[1]):
        node = node.parent
    return node


def self_cat(root, connective_toks):
    """Highest node whose yield is exactly the connective tokens.

    When no node yields them exactly (e.g. discontinuous "if .. then"), the
    lowest node covering all of them is returned instead.
    """
    toks = sorted(set(connective_toks))
    if not toks:
        raise ValueError("empty connective")
    if toks[0] < root.span[0] or toks[-1] > root.span[1]:
        raise ValueError(f"connective tokens {toks} outside sentence span {root.span}")
    node = lowest_covering(root, toks)
    contiguous = toks[-1] - toks[0] + 1 == len(toks)
    if not contiguous or node.span != (toks[0], toks[-1]):
        return node
    while node.parent is not None and node.parent.span == node.span:
        node = node.parent
    return node


def root_path(node):
    path = [node]
    while path[-1].parent is not None:
        path.append(path[-1].parent)
    return path


def candidate_constituents(root, selfcat):
    """Siblings of every node on the path from ``selfcat`` up to ``root``,
    left to right. This is the observation sequence for argument labeling."""
    cands = []
    for node in root_path(selfcat)[:-1]:
        cands.extend(s for s in node.parent.children if s is not node)
    cands.sort(key=lambda n: n.span)
    return cands


def depth(node):
    return len(root_path(node)) - 1


def tree_path(src, dst):
    """Nodes from ``src`` up to the lowest common ancestor and down to ``dst``."""
    up = root_path(src)
    down = root_path(dst)
    up_ids = {id(n): i for i, n in enumerate(up)}
    for j, n in enumerate(down):
        if id(n) in up_ids:
            return up[: up_ids[id(n)] + 1] + list(reversed(down[:j]))
    raise ValueError("nodes are not in the same tree")


# --- heads -------------------------------------------------------------------


@dataclass(frozen=True)
class HeadRule:
    direction: str  # "left" scans children left to right, "right" the reverse
    priorities: tuple


def load_head_rules(path=None):
    if path is None:
        text = resources.files("shallowd").joinpath("data/head_rules.txt").read_text("utf-8")
    else:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    rules = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) < 2 or parts[1] not in ("left", "right"):
            raise ValueError(f"head rule line {lineno}: expected 'PARENT left|right LABEL...'")
        rules[parts[0]] = HeadRule(parts[1], tuple(parts[2:]))
    return rules


_DEFAULT_RULES = None


def default_head_rules():
    global _DEFAULT_RULES
    if _DEFAULT_RULES is None:
        _DEFAULT_RULES = load_head_rules()
    return _DEFAULT_RULES


def use_head_rules(rules):
    """Install ``rules`` as the table used when none is passed explicitly;
    ``None`` restores the packaged table."""
    global _DEFAULT_RULES
    _DEFAULT_RULES = dict(rules) if rules is not None else None


def head_child(node, rules=None):
    rules = default_head_rules() if rules is None else rules
    rule = rules.get(node.label)
    if rule is not None:
        ordered = node.children if rule.direction == "left" else node.children[::-1]
        if not rule.priorities:
            return ordered[0]
        for label in rule.priorities:
            for child in ordered:
                if child.label == label:
                    return child
    return node.children[-1]


def head_leaf(node, rules=None):
    while not node.is_leaf:
        node = head_child(node, rules)
    return node


def head_token(node, sentence, rules=None):
    return sentence.tokens[head_leaf(node, rules).span[0]]


def production_rule(node):
    if node.is_leaf:
        return f"{node.label} -> {node.word.lower()}"
    return f"{node.label} -> " + " ".join(c.label for c in node.children)


@dataclass(frozen=True)
class NodeContext:
    label: str
    parent_label: str
    left_sibling_label: str
    right_sibling_label: str


def siblings(node):
    parent = node.parent
    if parent is None:
        return None, None
    idx = next(i for i, c in enumerate(parent.children) if c is node)
    left = parent.children[idx - 1] if idx > 0 else None
    right = parent.children[idx + 1] if idx + 1 < len(parent.children) else None
    return left, right


def node_context(node):
    left, right = siblings(node)
    return NodeContext(
        node.label,
        node.parent.label if node.parent is not None else ROOT_SENTINEL,
        left.label if left is not None else NONE_SENTINEL,
        right.label if right is not None else NONE_SENTINEL,
    )
