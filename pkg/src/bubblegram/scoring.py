"""Ranking candidate bubbles by context similarity and frequency."""
from __future__ import annotations

import random
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence

from . import kernels
from .grammar import label_key
from .trees import (
    BEGIN,
    END,
    Bubble,
    KContext,
    SequenceStats,
    SequenceTable,
    TreeSet,
    collect_sequences,
    conflicting,
)


@dataclass(frozen=True)
class ScoringConfig:
    context_k: int = 4
    top_n: int = 100
    max_len_start: int = 3
    max_len_end: int = 10
    rng_seed: int = 0

    def __post_init__(self):
        if not 2 <= self.max_len_start <= self.max_len_end:
            raise ValueError("need 2 <= max_len_start <= max_len_end")
        if self.top_n < 1:
            raise ValueError("top_n must be >= 1")
        if not 1 <= self.context_k <= 28:
            raise ValueError("context_k must be in [1, 28]")


def k_tuple_sim(t0: Sequence, t1: Sequence) -> Fraction:
    """1/2 for identical tuples, else sum of 1/2**(i+2) over matching positions."""
    if len(t0) != len(t1):
        raise ValueError("k-tuples differ in length")
    if tuple(t0) == tuple(t1):
        return Fraction(1, 2)
    return sum((Fraction(1, 2 ** (i + 2)) for i, (a, b) in enumerate(zip(t0, t1)) if a == b),
               Fraction(0))


def context_sim(c0: KContext, c1: KContext) -> Fraction:
    return k_tuple_sim(c0.left, c1.left) + k_tuple_sim(c0.right, c1.right)


def set_context_sim(C0: Iterable[KContext], C1: Iterable[KContext]) -> Fraction:
    C0, C1 = list(C0), list(C1)
    if not C0 or not C1:
        raise ValueError("context sets must be non-empty")
    return max(context_sim(a, b) for a in C0 for b in C1)


class ContextIndex:
    """Packs context sets into a kernel buffer; similarities come back scaled by 2**(k+1)."""

    def __init__(self, context_sets: Sequence[Iterable[KContext]], k: int):
        self.k = k
        codes: dict[str, int] = {BEGIN: -1, END: -2}
        rows: list[list[int]] = []
        offsets = [0]
        for cs in context_sets:
            for c in cs:
                row = []
                for lab in (*c.left, *c.right):
                    code = codes.get(lab)
                    if code is None:
                        code = codes[lab] = len(codes)
                    row.append(code)
                rows.append(row)
            offsets.append(len(rows))
        self.scale = 1 << (k + 1)
        self.ctx = kernels.pack_contexts(rows, k)
        self.offsets = kernels.pack_ints(offsets)

    def best(self, queries: Sequence[int], pool: Sequence[int]) -> list[int]:
        if not queries:
            return []
        if not pool:
            return [0] * len(queries)
        return kernels.best_sims(self.ctx, self.offsets, kernels.pack_ints(queries),
                                 kernels.pack_ints(pool), self.k)

    def pairs(self, a: Sequence[int], b: Sequence[int]) -> list[int]:
        if not a:
            return []
        return kernels.pair_sims(self.ctx, self.offsets, kernels.pack_ints(a),
                                 kernels.pack_ints(b), self.k)

    def fraction(self, scaled: int) -> Fraction:
        return Fraction(scaled, self.scale)


def _seq_key(seq: tuple[str, ...]) -> list:
    return [label_key(x) for x in seq]


def rank_bubbles(ts: TreeSet, max_len: int, cfg: ScoringConfig,
                 table: SequenceTable | None = None) -> list[Bubble]:
    """Top-n bubbles sorted by (similarity, frequency) descending, before shuffling.

    Ties are broken by the natural order of the label sequences.
    """
    k = cfg.context_k
    if table is None:
        table = collect_sequences(ts, max_len, k)
    multi: list[SequenceStats] = list(table.multi.values())
    if not multi:
        return []
    singles: list[SequenceStats] = list(table.singles.values())
    index = ContextIndex([s.contexts for s in multi] + [s.contexts for s in singles], k)
    n_multi = len(multi)
    single_ids = list(range(n_multi, n_multi + len(singles)))
    one_sims = index.best(list(range(n_multi)), single_ids)

    # (neg sim, neg 2*freq, key1, key2, seq1, seq2) with integer-scaled scores
    scored: list[tuple] = []
    for st, sim in zip(multi, one_sims):
        scored.append((-sim, -2 * st.occ, _seq_key(st.sequence), [], st.sequence, None))

    order = sorted(range(n_multi), key=lambda i: (-one_sims[i], -multi[i].occ,
                                                  _seq_key(multi[i].sequence)))
    cand = order[: 2 * cfg.top_n]
    pa, pb = [], []
    for x in range(len(cand)):
        for y in range(x + 1, len(cand)):
            i, j = cand[x], cand[y]
            if not conflicting(multi[i], multi[j]):
                pa.append(i)
                pb.append(j)
    for i, j, sim in zip(pa, pb, index.pairs(pa, pb)):
        s1, s2 = multi[i].sequence, multi[j].sequence
        k1, k2 = _seq_key(s1), _seq_key(s2)
        if k2 < k1:
            s1, s2, k1, k2 = s2, s1, k2, k1
        scored.append((-sim, -(multi[i].occ + multi[j].occ), k1, k2, s1, s2))

    scored.sort(key=lambda t: t[:4])
    return [
        Bubble(s1, s2, index.fraction(-neg_sim), Fraction(-neg_f2, 2))
        for neg_sim, neg_f2, _, _, s1, s2 in scored[: cfg.top_n]
    ]


def get_bubbles(ts: TreeSet, max_len: int, cfg: ScoringConfig, rng: random.Random,
                table: SequenceTable | None = None) -> list[Bubble]:
    """Ranked top-n bubbles, shuffled once with ``rng``."""
    ranked = rank_bubbles(ts, max_len, cfg, table)
    rng.shuffle(ranked)
    return ranked


def label_similarities(ts: TreeSet, target: str, k: int) -> list[tuple[str, Fraction]]:
    """Other labels of ``ts`` ordered by context similarity to ``target`` (desc, then label)."""
    singles = collect_sequences(ts, 2, k, singles_only=True).singles
    labels = [lab for lab in ts.nodes_by_label() if lab != target]
    if target not in singles:
        return [(lab, Fraction(0)) for lab in sorted(labels, key=label_key)]
    sets = [singles[target].contexts] + [singles[lab].contexts if lab in singles else {} for lab in labels]
    index = ContextIndex(sets, k)
    sims = index.pairs([0] * len(labels), list(range(1, len(labels) + 1)))
    ranked = sorted(zip(labels, sims), key=lambda t: (-t[1], label_key(t[0])))
    return [(lab, index.fraction(s)) for lab, s in ranked]
