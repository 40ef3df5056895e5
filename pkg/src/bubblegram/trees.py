"""Parse trees over the training examples.

Trees are persistent: every update returns a new :class:`TreeSet` that shares
untouched subtrees with its predecessor, so a rejected bubble costs nothing to
undo.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, NamedTuple, Sequence

from .grammar import Grammar, Terminal, TokenClass, induced_grammar

BEGIN = "\x02BEGIN"
END = "\x03END"
START = "t0"


class BubbleError(ValueError):
    """Raised when a bubble has no proper occurrence to replace."""


class TreeNode:
    """A node; leaves carry a Terminal/TokenClass ``label`` and the source ``text``."""

    __slots__ = ("label", "children", "text", "_yield", "_below")

    def __init__(self, label, children: Sequence["TreeNode"] = (), text: str | None = None):
        self.label = label
        self.children = tuple(children)
        self.text = text
        self._yield = None
        self._below = None

    @property
    def is_leaf(self) -> bool:
        return not self.children

    @property
    def yield_str(self) -> str:
        if self._yield is None:
            if self.is_leaf:
                self._yield = self.text
            else:
                self._yield = "".join(c.yield_str for c in self.children)
        return self._yield

    @property
    def labels_below(self) -> frozenset:
        """Nonterminal labels of all strict descendants."""
        if self._below is None:
            acc = set()
            for c in self.children:
                if not c.is_leaf:
                    acc.add(c.label)
                    acc |= c.labels_below
            self._below = frozenset(acc)
        return self._below

    def structure(self):
        if self.is_leaf:
            return (self.label, self.text)
        return (self.label, tuple(c.structure() for c in self.children))

    def __repr__(self) -> str:
        if self.is_leaf:
            return f"Leaf({self.text!r})"
        return f"Node({self.label}, {len(self.children)} children)"


def yield_of(node: TreeNode) -> str:
    return node.yield_str


class LabelPool:
    """Allocates ``t<N>`` labels; shared by every TreeSet derived from one run."""

    def __init__(self, first: int = 1):
        self._counter = itertools.count(first)

    def fresh(self) -> str:
        return f"t{next(self._counter)}"


class TreeSet:
    def __init__(self, trees: Iterable[TreeNode], pool: LabelPool, start: str = START,
                 introduced: tuple[str, ...] = ()):
        self.trees = tuple(trees)
        self.pool = pool
        self.start = start
        self.introduced = introduced
        self._by_label: dict[str, list[TreeNode]] | None = None
        self._yields: dict[str, list[str]] = {}
        self.memo: dict = {}  # per-TreeSet caches owned by other modules

    def derive(self, trees: Iterable[TreeNode], introduced: tuple[str, ...] = ()) -> "TreeSet":
        return TreeSet(trees, self.pool, self.start, introduced)

    def nodes_by_label(self) -> dict[str, list[TreeNode]]:
        """Internal nodes grouped by label, in (tree, preorder) order."""
        if self._by_label is None:
            acc: dict[str, list[TreeNode]] = {}
            for root in self.trees:
                stack = [root]
                while stack:
                    node = stack.pop()
                    if node.is_leaf:
                        continue
                    acc.setdefault(node.label, []).append(node)
                    stack.extend(reversed(node.children))
            self._by_label = acc
        return self._by_label

    def labels(self) -> list[str]:
        return list(self.nodes_by_label())

    def yields(self, label: str) -> list[str]:
        """Distinct yields of subtrees rooted at ``label``, first-seen order."""
        out = self._yields.get(label)
        if out is None:
            out = list(dict.fromkeys(n.yield_str for n in self.nodes_by_label().get(label, ())))
            self._yields[label] = out
        return out

    def is_char_nonterminal(self, label: str) -> bool:
        nodes = self.nodes_by_label().get(label)
        return bool(nodes) and all(len(n.children) == 1 and n.children[0].is_leaf for n in nodes)

    def char_nonterminals(self) -> list[str]:
        return [lab for lab in self.nodes_by_label() if self.is_char_nonterminal(lab)]

    def grammar(self) -> Grammar:
        return induced_grammar(self.trees, self.start)

    def relabel(self, mapping: dict[str, str]) -> "TreeSet":
        def walk(node: TreeNode) -> TreeNode:
            if node.is_leaf:
                return node
            if node.label not in mapping and node.labels_below.isdisjoint(mapping):
                return node
            return TreeNode(mapping.get(node.label, node.label), [walk(c) for c in node.children])

        return self.derive(walk(t) for t in self.trees)

    def structure(self):
        return tuple(t.structure() for t in self.trees)


def naive_trees(token_sequences: Sequence[Sequence[str]], start: str = START) -> TreeSet:
    """Flat trees ``start -> t_c ... `` with one ``t_c -> c`` node per token.

    Tokens with identical text share one label; labels are allocated in order
    of first appearance.
    """
    pool = LabelPool()
    label_of: dict[str, str] = {}
    trees = []
    for tokens in token_sequences:
        if not tokens:
            raise ValueError("cannot build a tree for an empty example")
        kids = []
        for tok in tokens:
            if not tok:
                raise ValueError("empty token")
            if tok not in label_of:
                label_of[tok] = pool.fresh()
            kids.append(TreeNode(label_of[tok], [TreeNode(Terminal(tok), text=tok)]))
        trees.append(TreeNode(start, kids))
    return TreeSet(trees, pool, start)


# -- sequences and contexts --------------------------------------------------

class KContext(NamedTuple):
    left: tuple  # index 0 is adjacent to the sequence
    right: tuple


@dataclass
class SequenceStats:
    sequence: tuple[str, ...]
    contexts: dict = field(default_factory=dict)  # KContext -> None, ordered set
    occ: int = 0
    spans: list = field(default_factory=list)  # (parent index, start)

    @property
    def context_list(self) -> list[KContext]:
        return list(self.contexts)


class SequenceTable(NamedTuple):
    multi: dict   # tuple -> SequenceStats, lengths 2..max_len, proper only
    singles: dict  # label -> SequenceStats for length-1 occurrences


def _context(labels: Sequence[str], i: int, j: int, k: int) -> KContext:
    left = tuple(labels[i - 1 - d] if i - 1 - d >= 0 else BEGIN for d in range(k))
    right = tuple(labels[j + d] if j + d < len(labels) else END for d in range(k))
    return KContext(left, right)


def collect_sequences(ts: TreeSet, max_len: int, k: int, min_len: int = 2,
                      singles_only: bool = False) -> SequenceTable:
    """Occurrence counts and k-contexts for sibling windows.

    Multi-label windows must be proper (shorter than the full child list).
    Length-1 stats cover every internal node; roots get an all-sentinel
    context.
    """
    if max_len < 2:
        raise ValueError("max_len must be >= 2")
    multi: dict[tuple, SequenceStats] = {}
    singles: dict[str, SequenceStats] = {}
    root_ctx = KContext((BEGIN,) * k, (END,) * k)
    parent_index = 0
    for root in ts.trees:
        st = singles.setdefault(root.label, SequenceStats((root.label,)))
        st.contexts[root_ctx] = None
        st.occ += 1
        stack = [root]
        while stack:
            node = stack.pop()
            if node.is_leaf or node.children[0].is_leaf:
                continue
            labels = [c.label for c in node.children]
            n = len(labels)
            for i, lab in enumerate(labels):
                st = singles.setdefault(lab, SequenceStats((lab,)))
                st.contexts[_context(labels, i, i + 1, k)] = None
                st.occ += 1
            for length in range(min_len, 0 if singles_only else min(max_len, n - 1) + 1):
                for i in range(n - length + 1):
                    seq = tuple(labels[i:i + length])
                    st = multi.get(seq)
                    if st is None:
                        st = multi[seq] = SequenceStats(seq)
                    st.contexts[_context(labels, i, i + length, k)] = None
                    st.occ += 1
                    st.spans.append((parent_index, i))
            parent_index += 1
            stack.extend(reversed(node.children))
    return SequenceTable(multi, singles)


def conflicting(a: SequenceStats, b: SequenceStats) -> bool:
    """True if some occurrences of ``a`` and ``b`` strictly overlap."""
    la, lb = len(a.sequence), len(b.sequence)
    starts: dict[int, list[int]] = {}
    for p, s in b.spans:
        starts.setdefault(p, []).append(s)
    for p, s in a.spans:
        for t in starts.get(p, ()):
            if s < t < s + la < t + lb or t < s < t + lb < s + la:
                return True
    return False


# -- bubbles -----------------------------------------------------------------

@dataclass(frozen=True)
class Bubble:
    seq1: tuple[str, ...]
    seq2: tuple[str, ...] | None = None
    similarity: Fraction = Fraction(0)
    frequency: Fraction = Fraction(0)

    @property
    def arity(self) -> int:
        return 1 if self.seq2 is None else 2

    def sort_key(self):
        return (self.similarity, self.frequency)


def _contains(outer: tuple, inner: tuple) -> bool:
    n = len(inner)
    return any(outer[i:i + n] == inner for i in range(len(outer) - n + 1))


def _bubble_seq(node: TreeNode, seq: tuple[str, ...], label: str, count: list[int]) -> TreeNode:
    if node.is_leaf:
        return node
    kids = node.children
    touched = seq[0] in node.labels_below
    if touched:
        kids = tuple(_bubble_seq(c, seq, label, count) for c in kids)
    n, L = len(kids), len(seq)
    replaced = False
    if L < n:
        out = []
        i = 0
        while i < n:
            if i + L <= n and kids[i].label == seq[0] and all(
                kids[i + d].label == seq[d] for d in range(1, L)
            ):
                out.append(TreeNode(label, kids[i:i + L]))
                count[0] += 1
                replaced = True
                i += L
            else:
                out.append(kids[i])
                i += 1
        kids = tuple(out)
    if not replaced and all(a is b for a, b in zip(kids, node.children)):
        return node
    return TreeNode(node.label, kids)


def apply_bubble(ts: TreeSet, b: Bubble, labels: Sequence[str] | None = None) -> TreeSet:
    """Replace every proper occurrence of the bubble's sequence(s) by a fresh node.

    For 2-bubbles where one sequence contains the other, the longer one is
    applied first so the shorter one can be bubbled inside it. The result's
    ``introduced`` holds the new label(s), in (seq1, seq2) order.
    """
    seqs = [b.seq1] if b.seq2 is None else [b.seq1, b.seq2]
    if labels is None:
        labels = [ts.pool.fresh() for _ in seqs]
    pairs = list(zip(seqs, labels))
    if len(pairs) == 2 and len(pairs[1][0]) > len(pairs[0][0]) and _contains(pairs[1][0], pairs[0][0]):
        pairs.reverse()
    trees = ts.trees
    for seq, label in pairs:
        if len(seq) < 2:
            raise BubbleError("bubble sequences need at least two labels")
        count = [0]
        trees = tuple(_bubble_seq(t, seq, label, count) for t in trees)
        if not count[0]:
            raise BubbleError(f"no proper occurrence of {seq}")
    return ts.derive(trees, tuple(labels))


def remove_bubble(ts: TreeSet, label: str) -> TreeSet:
    """Splice nodes labeled ``label`` back into their parents."""

    def walk(node: TreeNode) -> TreeNode:
        if node.is_leaf or (label not in node.labels_below):
            return node
        kids: list[TreeNode] = []
        for c in node.children:
            c = walk(c)
            if not c.is_leaf and c.label == label:
                kids.extend(c.children)
            else:
                kids.append(c)
        return TreeNode(node.label, kids)

    return ts.derive(walk(t) for t in ts.trees)


def dump_trees(ts: TreeSet) -> str:
    """Indented debug rendering, one node per line."""
    lines: list[str] = []

    def walk(node: TreeNode, depth: int) -> None:
        pad = "  " * depth
        if node.is_leaf:
            sym = node.label
            shown = f"<{sym.cls.name}>" if isinstance(sym, TokenClass) else ""
            lines.append(f"{pad}{shown}{node.text!r}")
            return
        if len(node.children) == 1 and node.children[0].is_leaf:
            leaf = node.children[0]
            cls = f" <{leaf.label.cls.name}>" if isinstance(leaf.label, TokenClass) else ""
            lines.append(f"{pad}{node.label}: {leaf.text!r}{cls}")
            return
        lines.append(f"{pad}{node.label}")
        for c in node.children:
            walk(c, depth + 1)

    for i, t in enumerate(ts.trees):
        lines.append(f"# tree {i}: {t.yield_str!r}")
        walk(t, 0)
    return "\n".join(lines) + "\n"
