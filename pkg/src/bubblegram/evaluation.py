"""Recall, precision and F1 of mined grammars, plus bundled benchmark grammars."""
from __future__ import annotations

import random
from collections import deque
from dataclasses import dataclass
from fractions import Fraction
from importlib import resources
from typing import Sequence

from .earley import membership
from .grammar import (
    Grammar,
    Nonterminal,
    Rule,
    Terminal,
    TokenClass,
    deserialize,
    min_depths,
    rule_depth,
    sample,
    sample_class,
)
from .oracle import Oracle

BENCHMARKS = ("arith", "while", "json")


def load_benchmark(name: str) -> Grammar:
    if name not in BENCHMARKS:
        raise KeyError(f"unknown benchmark {name!r}; choose from {', '.join(BENCHMARKS)}")
    text = resources.files("bubblegram").joinpath("data", f"{name}.g").read_text("utf-8")
    return deserialize(text)


@dataclass(frozen=True)
class EvalReport:
    recall: Fraction
    precision: Fraction
    f1: Fraction
    test_size: int
    sample_size: int

    def as_dict(self) -> dict:
        return {
            "recall": float(self.recall),
            "precision": float(self.precision),
            "f1": float(self.f1),
            "test_size": self.test_size,
            "sample_size": self.sample_size,
        }

    def table(self) -> str:
        rows = [("recall", f"{float(self.recall):.4f}"),
                ("precision", f"{float(self.precision):.4f}"),
                ("f1", f"{float(self.f1):.4f}"),
                ("test_size", str(self.test_size)),
                ("sample_size", str(self.sample_size))]
        return "\n".join(f"{k:<12}{v:>10}" for k, v in rows)


def f1_score(precision: Fraction, recall: Fraction) -> Fraction:
    if precision + recall == 0:
        return Fraction(0)
    return 2 * precision * recall / (precision + recall)


def recall(mined: Grammar, test_set: Sequence[str]) -> Fraction:
    """Share of ``test_set`` accepted by ``mined``."""
    if not test_set:
        raise ValueError("empty test set")
    return Fraction(sum(1 for s in test_set if membership(mined, s)), len(test_set))


def precision(mined: Grammar, o: Oracle, n: int = 1000, seed: int = 0) -> Fraction:
    """Share of ``n`` samples from ``mined`` (seeds seed..seed+n-1) that ``o`` accepts."""
    if n < 1:
        raise ValueError("n must be >= 1")
    return Fraction(sum(1 for i in range(n) if o.query(sample(mined, seed + i))), n)


def evaluate(mined: Grammar, o: Oracle, test_set: Sequence[str], n_samples: int = 1000,
             seed: int = 0) -> EvalReport:
    r = recall(mined, test_set)
    p = precision(mined, o, n_samples, seed)
    return EvalReport(r, p, f1_score(p, r), len(test_set), n_samples)


def generate_test_set(golden: Grammar, n: int = 1000, seed: int = 0) -> list[str]:
    """``n`` samples from ``golden`` using seeds seed..seed+n-1; duplicates kept."""
    return [sample(golden, seed + i) for i in range(n)]


# -- rule-covering training sets ---------------------------------------------

def _paths_from_start(g: Grammar) -> dict[str, tuple | None]:
    """For each nonterminal, a (rule, position) step from its BFS parent, or None for start."""
    parent: dict[str, tuple | None] = {g.start: None}
    queue = deque([g.start])
    while queue:
        nt = queue.popleft()
        for r in g.rules_for(nt):
            for i, sym in enumerate(r.rhs):
                if isinstance(sym, Nonterminal) and sym.label not in parent:
                    parent[sym.label] = (r, i)
                    queue.append(sym.label)
    return parent


def _forced_derivation(g: Grammar, target: Rule, rng: random.Random, used: set) -> str:
    """A shallow derivation that applies ``target`` once."""
    depths = min_depths(g)
    parent = _paths_from_start(g)
    if target.lhs not in parent:
        raise ValueError(f"rule for {target.lhs!r} is unreachable")
    # forced[(depth along path)] = rule to apply at the path nonterminal
    chain: list[tuple[Rule, int | None]] = [(target, None)]
    nt = target.lhs
    while parent[nt] is not None:
        r, i = parent[nt]
        chain.append((r, i))
        nt = r.lhs
    chain.reverse()

    def shallow(label: str) -> Rule:
        rs = g.rules_for(label)
        best = min(rule_depth(r, depths) for r in rs)
        pool = [r for r in rs if rule_depth(r, depths) == best]
        return pool[rng.randrange(len(pool))]

    def expand(sym, forced: int | None) -> str:
        if isinstance(sym, Terminal):
            return sym.token
        if isinstance(sym, TokenClass):
            return sample_class(sym.cls, rng)
        if forced is not None:
            rule, pos = chain[forced]
        else:
            rule, pos = shallow(sym.label), None
        used.add(rule)
        return "".join(
            expand(s, forced + 1 if (forced is not None and k == pos) else None)
            for k, s in enumerate(rule.rhs)
        )

    return expand(Nonterminal(g.start), 0)


def covering_training_set(golden: Grammar, seed: int = 0, size: int = 20,
                          pad_depth: int = 3, max_chars: int = 60) -> list[str]:
    """Greedy rule cover with shallow derivations, padded with short random samples.

    Every rule of ``golden`` is used by at least one example. Examples are
    distinct and returned in generation order.
    """
    rng = random.Random(seed)
    used: set = set()
    out: dict[str, None] = {}
    for rule in golden.sorted_rules():
        if rule in used:
            continue
        s = _forced_derivation(golden, rule, rng, used)
        out.setdefault(s, None)
    attempts = 0
    while len(out) < size and attempts < 50 * size:
        attempts += 1
        s = sample(golden, rng, depth_cutoff=pad_depth)
        if 0 < len(s) <= max_chars:
            out.setdefault(s, None)
    return list(out)
