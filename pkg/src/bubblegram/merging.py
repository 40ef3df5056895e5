"""Oracle-checked label merges.

A merge of labels ``a`` and ``b`` is valid when each can replace the other:
every sampled context of the replacee (a tree yield with holes where the
replacee derived) still passes the oracle after its holes are filled with a
sampled string of the replacer.
"""
from __future__ import annotations

import itertools
import random
import time
from dataclasses import dataclass
from typing import Iterable, Sequence

from .grammar import label_key
from .oracle import Oracle
from .trees import TreeNode, TreeSet


class _Hole:
    __slots__ = ()

    def __repr__(self) -> str:
        return "HOLE"


HOLE = _Hole()
HOLE_GLYPH = "\u2022"
ENUM_LIMIT = 4096
PHASE_CLOCK = {"candidate_sampling": 0.0}


@dataclass(frozen=True)
class SamplingConfig:
    p: int = 50
    rng_seed: int = 0
    level1_for_2bubbles: bool = True
    strict_holes: bool = False

    def __post_init__(self):
        if self.p < 1:
            raise ValueError("p must be >= 1")


@dataclass(frozen=True)
class HoledString:
    segments: tuple  # str | HOLE, adjacent literals merged

    @classmethod
    def of(cls, parts: Iterable) -> "HoledString":
        out: list = []
        for part in parts:
            if part is HOLE:
                out.append(HOLE)
            elif part:
                if out and out[-1] is not HOLE:
                    out[-1] += part
                else:
                    out.append(part)
        return cls(tuple(out))

    @property
    def holes(self) -> int:
        return sum(1 for s in self.segments if s is HOLE)

    def fill(self, s: str) -> str:
        return "".join(s if seg is HOLE else seg for seg in self.segments)

    def fill_each(self, fillers: Sequence[str]) -> str:
        if len(fillers) != self.holes:
            raise ValueError(f"expected {self.holes} fillers, got {len(fillers)}")
        it = iter(fillers)
        return "".join(next(it) if seg is HOLE else seg for seg in self.segments)

    def __str__(self) -> str:
        return "".join(HOLE_GLYPH if seg is HOLE else seg for seg in self.segments)


# -- alternative spaces ------------------------------------------------------
# ("L", parts) one option; ("C", options, total) union; ("P", factors, total) product.

def _lit(*parts) -> tuple:
    return ("L", parts, 1)


def _choice(options: list) -> tuple:
    if len(options) == 1:
        return options[0]
    return ("C", options, sum(o[2] for o in options))


def _prod(factors: list) -> tuple:
    total = 1
    for f in factors:
        total *= f[2]
    if total == 1:
        return _lit(*(p for f in factors for p in _parts_of_single(f)))
    return ("P", factors, total)


def _parts_of_single(node) -> tuple:
    if node[0] == "L":
        return node[1]
    if node[0] == "C":
        return _parts_of_single(node[1][0])
    return tuple(p for f in node[1] for p in _parts_of_single(f))


def _decode(node, idx: int, out: list) -> None:
    kind = node[0]
    if kind == "L":
        out.extend(node[1])
    elif kind == "C":
        for opt in node[1]:
            if idx < opt[2]:
                _decode(opt, idx, out)
                return
            idx -= opt[2]
        raise IndexError(idx)
    else:
        digits = []
        for f in reversed(node[1]):
            idx, r = divmod(idx, f[2])
            digits.append(r)
        for f, r in zip(node[1], reversed(digits)):
            _decode(f, r, out)


def _enumerate(node) -> list[tuple]:
    kind = node[0]
    if kind == "L":
        return [node[1]]
    if kind == "C":
        return [x for opt in node[1] for x in _enumerate(opt)]
    acc = [()]
    for f in node[1]:
        alts = _enumerate(f)
        acc = [a + b for a in acc for b in alts]
    return acc


def _draw(space, p: int, rng: random.Random, keep) -> list:
    """Up to ``p`` distinct results of ``keep(parts)`` (None drops), sampled uniformly."""
    total = space[2]
    if total <= ENUM_LIMIT:
        found = dict.fromkeys(r for r in map(keep, _enumerate(space)) if r is not None)
        found = list(found)
        if len(found) > p:
            found = rng.sample(found, p)
        return found
    found: dict = {}
    attempts = 0
    while len(found) < p and attempts < 20 * p:
        attempts += 1
        parts: list = []
        _decode(space, rng.randrange(total), parts)
        r = keep(tuple(parts))
        if r is not None:
            found.setdefault(r, None)
    return list(found)


# -- replacee and replacer strings -------------------------------------------

def _replacee_space(node: TreeNode, label: str, leaf_only: bool = False):
    if node.is_leaf:
        return _lit(node.text)
    if node.label != label and label not in node.labels_below:
        return _lit(node.yield_str)
    inner = _prod([_replacee_space(c, label, leaf_only) for c in node.children])
    if node.label == label and (not leaf_only or _is_token_node(node)):
        return _choice([_lit(HOLE), inner])
    return inner


def _is_token_node(node: TreeNode) -> bool:
    return len(node.children) == 1 and node.children[0].is_leaf


def _holed(parts: tuple):
    h = HoledString.of(parts)
    return h if h.holes else None


def _occurs(ts: TreeSet, label: str) -> None:
    if label not in ts.nodes_by_label():
        raise KeyError(f"label {label!r} does not occur in the trees")


def replacee_strings(ts: TreeSet, replacee: str, cfg: SamplingConfig,
                     rng: random.Random, leaf_only: bool = False) -> list[HoledString]:
    """Tree yields with holes where ``replacee`` derived, at most ``cfg.p`` of them.

    With ``leaf_only``, only ``replacee`` nodes deriving a single leaf token
    become holes.
    """
    key = ("replacee", replacee, cfg.p, leaf_only)
    hit = ts.memo.get(key)
    if hit is not None:
        return hit
    _occurs(ts, replacee)
    spaces = [
        _replacee_space(t, replacee, leaf_only)
        for t in ts.trees
        if t.label == replacee or replacee in t.labels_below
    ]
    out = _draw(_choice(spaces), cfg.p, rng, _holed)
    ts.memo[key] = out
    return out


def _label_alts(ts: TreeSet, node: TreeNode):
    if node.is_leaf:
        return _lit(node.text)
    return _choice([_lit(y) for y in ts.yields(node.label)])


def replacer_strings(ts: TreeSet, replacer: str, level: int, cfg: SamplingConfig,
                     rng: random.Random) -> list[str]:
    """Strings derivable from ``replacer``: its yields (level 0) or recombined child yields (level 1)."""
    if level not in (0, 1):
        raise ValueError("level must be 0 or 1")
    key = ("replacer", replacer, level, cfg.p)
    hit = ts.memo.get(key)
    if hit is not None:
        return hit
    _occurs(ts, replacer)
    if level == 0:
        out = list(ts.yields(replacer))
        if len(out) > cfg.p:
            out = rng.sample(out, cfg.p)
    else:
        spaces = []
        seen_shapes = set()
        for node in ts.nodes_by_label()[replacer]:
            shape = tuple(c.label if not c.is_leaf else ("leaf", c.text) for c in node.children)
            if shape in seen_shapes:
                continue
            seen_shapes.add(shape)
            spaces.append(_prod([_label_alts(ts, c) for c in node.children]))
        out = _draw(_choice(spaces), cfg.p, rng, "".join)
    ts.memo[key] = out
    return out


# -- audit log ---------------------------------------------------------------

AUDIT_COLUMNS = ("id", "group", "kind", "replacer", "replacee",
                 "n_candidates", "n_new_queries", "n_rejected", "verdict")


class AuditLog:
    """Tab-separated record of every replacement check and merge decision."""

    def __init__(self):
        self.rows: list[tuple] = []
        self._groups = itertools.count(1)

    def new_group(self) -> int:
        return next(self._groups)

    def add(self, group: int, kind: str, a: str, b: str, n_candidates: int,
            n_new: int, n_rejected: int, verdict: str) -> None:
        self.rows.append((len(self.rows) + 1, group, kind, a, b,
                          n_candidates, n_new, n_rejected, verdict))

    def total_new_queries(self) -> int:
        return sum(r[6] for r in self.rows)

    def render(self) -> str:
        lines = ["#" + "\t".join(AUDIT_COLUMNS)]
        for r in self.rows:
            lines.append("\t".join(_audit_field(x) for x in r))
        return "\n".join(lines) + "\n"

    def write(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(self.render())


def _audit_field(x) -> str:
    s = str(x)
    return s.replace("\\", "\\\\").replace("\t", "\\t").replace("\n", "\\n")


def parse_audit(text: str) -> list[dict]:
    rows = []
    for line in text.splitlines():
        if not line or line.startswith("#"):
            continue
        fields = line.split("\t")
        row = dict(zip(AUDIT_COLUMNS, fields))
        for k in ("id", "group", "n_candidates", "n_new_queries", "n_rejected"):
            row[k] = int(row[k])
        rows.append(row)
    return rows


# -- checks ------------------------------------------------------------------

def check_candidates(candidates: Iterable[str], o: Oracle, audit: AuditLog | None,
                     group: int, kind: str, a: str, b: str) -> bool:
    """Query candidates until one is rejected; known rejections short-circuit first."""
    cands = list(dict.fromkeys(candidates))
    before = o.stats.total_queries
    rejected = 0
    verdict = "aborted"
    try:
        for s in cands:
            if o.known(s) and not o.query(s):
                rejected = 1
                break
        else:
            for s in cands:
                if not o.query(s):
                    rejected = 1
                    break
        verdict = "reject" if rejected else "accept"
        return not rejected
    finally:
        if audit is not None:
            audit.add(group, kind, a, b, len(cands), o.stats.total_queries - before,
                      rejected, verdict)


def _candidates(E: list[HoledString], R: list[str], strict: bool, rng: random.Random):
    for e in E:
        for r in R:
            yield e.fill(r)
    if strict and len(R) > 1:
        for e in E:
            if e.holes > 1:
                for _ in R:
                    yield e.fill_each([rng.choice(R) for _ in range(e.holes)])


def replaces(ts: TreeSet, replacer: str, replacee: str, o: Oracle, cfg: SamplingConfig,
             rng: random.Random, level: int = 0, audit: AuditLog | None = None,
             group: int = 0) -> bool:
    """True iff every candidate built from ``replacee``'s holes and ``replacer``'s strings passes."""
    t0 = time.perf_counter()
    E = replacee_strings(ts, replacee, cfg, rng)
    R = replacer_strings(ts, replacer, level, cfg, rng)
    PHASE_CLOCK["candidate_sampling"] += time.perf_counter() - t0
    return check_candidates(_candidates(E, R, cfg.strict_holes, rng), o, audit, group,
                            "REPLACE", replacer, replacee)


def merges(ts: TreeSet, a: str, b: str, o: Oracle, cfg: SamplingConfig, rng: random.Random,
           level: int = 0, audit: AuditLog | None = None) -> bool:
    if a == b:
        return True
    group = audit.new_group() if audit is not None else 0
    first = len(audit.rows) if audit is not None else 0
    ok = (replaces(ts, a, b, o, cfg, rng, level, audit, group)
          and replaces(ts, b, a, o, cfg, rng, level, audit, group))
    if audit is not None:
        grp = audit.rows[first:]
        audit.add(group, "MERGE", a, b, sum(r[5] for r in grp), 0,
                  sum(r[7] for r in grp), "valid" if ok else "invalid")
    return ok


def collapse_unit_chains(ts: TreeSet, label: str) -> TreeSet:
    """Splice out ``label`` nodes whose parent has the same label and no other child.

    Such chains only induce the rule ``X -> X``, which adds nothing to the language.
    """

    def walk(node: TreeNode) -> TreeNode:
        if node.is_leaf or (node.label != label and label not in node.labels_below):
            return node
        kids = [walk(c) for c in node.children]
        while node.label == label and len(kids) == 1 and not kids[0].is_leaf and kids[0].label == label:
            kids = list(kids[0].children)
        if all(a is b for a, b in zip(kids, node.children)) and len(kids) == len(node.children):
            return node
        return TreeNode(node.label, kids)

    return ts.derive((walk(t) for t in ts.trees), ts.introduced)


def merge_labels(ts: TreeSet, a: str, b: str) -> TreeSet:
    """Relabel ``a`` and ``b`` to one label: the start label if involved, else a fresh one."""
    target = ts.start if ts.start in (a, b) else ts.pool.fresh()
    out = ts.relabel({a: target, b: target})
    return collapse_unit_chains(out.derive(out.trees, (target,)), target)


def rhs_occurrences(ts: TreeSet, label: str) -> list[tuple]:
    """Distinct (parent label, child labels, index) positions of ``label``, in tree order."""
    seen: dict[tuple, None] = {}
    for root in ts.trees:
        stack = [root]
        while stack:
            node = stack.pop()
            if node.is_leaf or (label not in node.labels_below):
                continue
            labels = tuple(c.label for c in node.children)
            for i, c in enumerate(node.children):
                if not c.is_leaf and c.label == label:
                    seen.setdefault((node.label, labels, i), None)
            stack.extend(reversed(node.children))
    return list(seen)


def split_occurrences(ts: TreeSet, label: str) -> tuple[TreeSet, list[str]]:
    """Give each distinct rhs position of ``label`` its own fresh label."""
    occ = rhs_occurrences(ts, label)
    fresh = {key: ts.pool.fresh() for key in occ}

    def walk(node: TreeNode) -> TreeNode:
        if node.is_leaf or label not in node.labels_below:
            return node
        labels = tuple(c.label for c in node.children)
        kids = []
        for i, c in enumerate(node.children):
            c2 = walk(c)
            if not c.is_leaf and c.label == label:
                c2 = TreeNode(fresh[(node.label, labels, i)], c2.children)
            kids.append(c2)
        return TreeNode(node.label, kids)

    return ts.derive(walk(t) for t in ts.trees), list(fresh.values())


def partial_merge(ts: TreeSet, t_new: str, t_c: str, o: Oracle, cfg: SamplingConfig,
                  rng: random.Random, audit: AuditLog | None = None) -> TreeSet | None:
    """Merge ``t_new`` with the rhs occurrences of character nonterminal ``t_c`` that accept it."""
    if not ts.is_char_nonterminal(t_c):
        raise ValueError(f"{t_c!r} is not a character nonterminal")
    split, parts = split_occurrences(ts, t_c)
    ok = [t for t in parts if merges(split, t, t_new, o, cfg, rng, 0, audit)]
    if not ok:
        return None
    target = split.pool.fresh()
    mapping = {t: (target if t in ok else t_c) for t in parts}
    mapping[t_new] = target
    out = split.relabel(mapping)
    return collapse_unit_chains(out.derive(out.trees, (target,)), target)


def merge_all_valid(ts: TreeSet, o: Oracle, cfg: SamplingConfig, rng: random.Random,
                    audit: AuditLog | None = None) -> TreeSet:
    """Merge label pairs in sorted order, restarting after each merge, until none merge."""
    changed = True
    while changed:
        changed = False
        labels = sorted(ts.labels(), key=label_key)
        for a, b in itertools.combinations(labels, 2):
            if merges(ts, a, b, o, cfg, rng, 0, audit):
                ts = merge_labels(ts, a, b)
                changed = True
                break
    return ts
