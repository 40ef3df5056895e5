"""The learning loop: bubble, check against the oracle, merge, repeat."""
from __future__ import annotations

import random
import re
import time
from dataclasses import dataclass, field
from typing import Callable, Sequence

from . import merging
from .earley import membership
from .grammar import CharClass, Grammar, TokenClass, enumerate_strings, label_key, sample_class
from .merging import (
    AuditLog,
    SamplingConfig,
    check_candidates,
    merge_all_valid,
    merge_labels,
    merges,
    partial_merge,
    replacee_strings,
)
from .oracle import Oracle, QueryBudgetExceeded
from .scoring import ScoringConfig, label_similarities, rank_bubbles
from .trees import Bubble, BubbleError, TreeNode, TreeSet, apply_bubble, naive_trees


class StartupError(ValueError):
    """Training examples are empty or rejected by the oracle."""


@dataclass(frozen=True)
class LearnerConfig:
    scoring: ScoringConfig = field(default_factory=ScoringConfig)
    sampling: SamplingConfig = field(default_factory=SamplingConfig)
    pretokenize: bool = True
    token_expand_samples: int = 10
    rng_seed: int = 0
    # property-test mode: verify that each accepted step keeps short strings
    check_monotonic: bool = False
    monotonic_max_len: int = 8

    def __post_init__(self):
        if self.token_expand_samples < 0:
            raise ValueError("token_expand_samples must be >= 0")


@dataclass
class RunReport:
    grammar: Grammar
    iterations: int
    accepted_bubbles: list  # (Bubble, label)
    oracle: object
    wall_time: float
    phase_times: dict
    aborted: str | None = None
    monotonic_checks: int = 0
    monotonic_violations: list = field(default_factory=list)

    def as_dict(self) -> dict:
        return {
            "iterations": self.iterations,
            "accepted_bubbles": [
                {
                    "seq1": list(b.seq1),
                    "seq2": list(b.seq2) if b.seq2 is not None else None,
                    "similarity": str(b.similarity),
                    "frequency": str(b.frequency),
                    "label": label,
                }
                for b, label in self.accepted_bubbles
            ],
            "oracle": self.oracle.as_dict(),
            "wall_time": round(self.wall_time, 6),
            "phase_times": {k: round(v, 6) for k, v in self.phase_times.items()},
            "aborted": self.aborted,
            "n_rules": len(self.grammar.rules),
        }


_TOKEN_RE = re.compile(r"[a-z]+|[A-Z]+|[0-9]+|[ \t\n\r\v\f]+|.", re.DOTALL)


def pretokenize(s: str) -> list[str]:
    """Maximal runs of lowercase, uppercase, digits, or whitespace; anything else is one char."""
    return _TOKEN_RE.findall(s)


def accept_bubble(bbld: TreeSet, b: Bubble, o: Oracle, cfg: LearnerConfig,
                  rng: random.Random, audit: AuditLog | None = None) -> tuple[bool, TreeSet]:
    """Check a freshly applied bubble; returns (accepted, resulting trees)."""
    scfg = cfg.sampling
    if b.arity == 2:
        t1, t2 = bbld.introduced
        level = 1 if scfg.level1_for_2bubbles else 0
        if merges(bbld, t1, t2, o, scfg, rng, level, audit):
            return True, merge_labels(bbld, t1, t2)
        return False, bbld
    (t_new,) = bbld.introduced
    ranked = [lab for lab, _ in label_similarities(bbld, t_new, cfg.scoring.context_k)]
    for lab in ranked:
        if merges(bbld, lab, t_new, o, scfg, rng, 0, audit):
            return True, merge_labels(bbld, lab, t_new)
    for lab in ranked:
        if bbld.is_char_nonterminal(lab):
            merged = partial_merge(bbld, t_new, lab, o, scfg, rng, audit)
            if merged is not None:
                return True, merged
    return False, bbld


_LADDERS = {
    CharClass.LOWER: (CharClass.LOWER, CharClass.LETTERS, CharClass.ALNUM),
    CharClass.UPPER: (CharClass.UPPER, CharClass.LETTERS, CharClass.ALNUM),
    CharClass.DIGITS: (CharClass.DIGITS, CharClass.ALNUM),
    CharClass.WHITESPACE: (CharClass.WHITESPACE,),
}


def _base_class(texts: Sequence[str]) -> CharClass | None:
    for cls in _LADDERS:
        if all(cls.matches(t) for t in texts):
            return cls
    return None


def _token_texts(ts: TreeSet, label: str) -> list[str] | None:
    """Texts of ``label``'s single-leaf expansions; None if any is already a class."""
    texts: dict[str, None] = {}
    for n in ts.nodes_by_label()[label]:
        if len(n.children) == 1 and n.children[0].is_leaf:
            if isinstance(n.children[0].label, TokenClass):
                return None
            texts.setdefault(n.children[0].text, None)
    return list(texts)


def expand_tokens(ts: TreeSet, o: Oracle, cfg: LearnerConfig, rng: random.Random,
                  audit: AuditLog | None = None) -> TreeSet:
    """Widen a label's single-token expansions to a whole character class.

    A label qualifies when all of its single-token expansions fall in one
    class; the widest class on its ladder that passes every check wins.
    """
    if cfg.token_expand_samples == 0:
        return ts
    widened: dict[str, CharClass] = {}
    for lab in sorted(ts.labels(), key=label_key):
        texts = _token_texts(ts, lab)
        if not texts:
            continue
        base = _base_class(texts)
        if base is None:
            continue
        holed = replacee_strings(ts, lab, cfg.sampling, rng, leaf_only=True)
        best = None
        for cls in _LADDERS[base]:
            fillers = list(dict.fromkeys(
                sample_class(cls, rng) for _ in range(cfg.token_expand_samples)))
            group = audit.new_group() if audit is not None else 0
            cands = (h.fill(f) for h in holed for f in fillers)
            if not check_candidates(cands, o, audit, group, "EXPAND", cls.name, lab):
                break
            best = cls
        if best is not None:
            widened[lab] = best
    if not widened:
        return ts

    def walk(node: TreeNode) -> TreeNode:
        if node.is_leaf:
            return node
        cls = widened.get(node.label)
        if cls is not None and len(node.children) == 1 and node.children[0].is_leaf:
            leaf = node.children[0]
            return TreeNode(node.label, [TreeNode(TokenClass(cls), text=leaf.text)])
        if node.labels_below.isdisjoint(widened):
            return node
        return TreeNode(node.label, [walk(c) for c in node.children])

    return ts.derive(walk(t) for t in ts.trees)


def compact_labels(ts: TreeSet) -> TreeSet:
    """Renumber non-start labels to t1, t2, ... preserving their natural order."""
    labels = sorted((lab for lab in ts.labels() if lab != ts.start), key=label_key)
    mapping = {lab: f"t{i}" for i, lab in enumerate(labels, 1) if lab != f"t{i}"}
    return ts.relabel(mapping) if mapping else ts


def _check_monotonic(before: TreeSet, after: TreeSet, max_len: int) -> list[str]:
    old = enumerate_strings(before.grammar(), max_len)
    g = after.grammar()
    return sorted(s for s in old if not membership(g, s))


def learn(examples: Sequence[str], o: Oracle, cfg: LearnerConfig | None = None,
          audit: AuditLog | None = None,
          on_rank: Callable[[int, int, list], None] | None = None) -> RunReport:
    """Learn a grammar from oracle-valid ``examples``.

    ``on_rank(iteration, max_len, bubbles)`` sees each ranked list before the shuffle.
    If the oracle budget runs out, the report carries the grammar of the current
    trees and ``aborted`` is set.
    """
    cfg = cfg or LearnerConfig()
    t_start = time.perf_counter()
    oracle_t0 = o.stats.wall_time
    merging.PHASE_CLOCK["candidate_sampling"] = 0.0
    scoring_time = 0.0
    if not examples:
        raise StartupError("no training examples")
    for i, s in enumerate(examples):
        if not s:
            raise StartupError(f"example {i} is empty")
    group = audit.new_group() if audit is not None else 0
    for i, s in enumerate(examples):
        before = o.stats.total_queries
        ok = o.query(s)
        if audit is not None:
            audit.add(group, "STARTUP", "-", f"example{i}", 1,
                      o.stats.total_queries - before, 0 if ok else 1,
                      "accept" if ok else "reject")
        if not ok:
            raise StartupError(f"example {i} is rejected by the oracle: {s!r}")

    rng = random.Random(cfg.rng_seed)
    token_lists = [pretokenize(s) if cfg.pretokenize else list(s) for s in examples]
    ts = naive_trees(token_lists)
    accepted: list = []
    iterations = 0
    aborted = None
    mono_checks = 0
    violations: list = []
    sc = cfg.scoring
    try:
        ts = merge_all_valid(ts, o, cfg.sampling, rng, audit)
        max_len = sc.max_len_start
        while max_len <= sc.max_len_end:
            iterations += 1
            t0 = time.perf_counter()
            ranked = rank_bubbles(ts, max_len, sc)
            scoring_time += time.perf_counter() - t0
            if on_rank is not None:
                on_rank(iterations, max_len, list(ranked))
            rng.shuffle(ranked)
            hit = False
            for b in ranked:
                try:
                    bbld = apply_bubble(ts, b)
                except BubbleError:
                    continue
                ok, merged = accept_bubble(bbld, b, o, cfg, rng, audit)
                if ok:
                    if cfg.check_monotonic:
                        mono_checks += 1
                        lost = _check_monotonic(ts, merged, cfg.monotonic_max_len)
                        if lost:
                            violations.append((b, lost))
                    accepted.append((b, merged.introduced[0]))
                    ts = merged
                    hit = True
                    break
            max_len = sc.max_len_start if hit else max_len + 1
        ts = expand_tokens(ts, o, cfg, rng, audit)
    except QueryBudgetExceeded as exc:
        aborted = str(exc)

    wall = time.perf_counter() - t_start
    phases = {
        "oracle": o.stats.wall_time - oracle_t0,
        "bubble_scoring": scoring_time,
        "candidate_sampling": merging.PHASE_CLOCK["candidate_sampling"],
    }
    phases["other"] = max(0.0, wall - sum(phases.values()))
    return RunReport(compact_labels(ts).grammar(), iterations, accepted, o.stats, wall, phases, aborted,
                     mono_checks, violations)
