import random
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bubblegram.scoring import (
    ScoringConfig,
    context_sim,
    get_bubbles,
    k_tuple_sim,
    label_similarities,
    rank_bubbles,
    set_context_sim,
)
from bubblegram.trees import Bubble, KContext, apply_bubble, collect_sequences, conflicting, naive_trees

from conftest import WHILE_EXAMPLES
from test_trees import L, skip_loop_trees


def ctx(left, right):
    return KContext(tuple(left), tuple(right))


class TestKTupleSim:
    def test_equal(self):
        assert k_tuple_sim("abcd", "abcd") == Fraction(1, 2)

    def test_partial(self):
        assert k_tuple_sim("axcy", "abcd") == Fraction(5, 16)

    def test_none(self):
        assert k_tuple_sim("wxyz", "abcd") == 0

    def test_first_position_weighs_most(self):
        assert k_tuple_sim("axxx", "abcd") == Fraction(1, 4)
        assert k_tuple_sim("xxxd", "abcd") == Fraction(1, 32)

    def test_length_mismatch(self):
        with pytest.raises(ValueError):
            k_tuple_sim("abc", "abcd")

    def test_exact_rationals(self):
        assert isinstance(k_tuple_sim("axcy", "abcd"), Fraction)


class TestContextSim:
    def test_identical(self):
        c = ctx("abcd", "efgh")
        assert context_sim(c, c) == 1

    def test_disjoint(self):
        assert context_sim(ctx("abcd", "efgh"), ctx("ijkl", "mnop")) == 0

    def test_left_only(self):
        assert context_sim(ctx("abcd", "efgh"), ctx("abcd", "mnop")) == Fraction(1, 2)


class TestSetContextSim:
    def test_condition_vs_t1(self):
        tab = collect_sequences(skip_loop_trees(), 6, 4)
        assert set_context_sim(tab.multi[L("n == n")].contexts, tab.singles["t1"].contexts) == 1

    def test_singleton_self(self):
        c = ctx("abcd", "efgh")
        assert set_context_sim({c}, {c}) == 1

    def test_disjoint_singletons(self):
        assert set_context_sim({ctx("abcd", "efgh")}, {ctx("ijkl", "mnop")}) == 0

    def test_max_over_pairs(self):
        C0 = {ctx("abcd", "wxyz"), ctx("axxx", "xxxx")}
        C1 = {ctx("abcd", "qqqq")}
        assert set_context_sim(C0, C1) == Fraction(1, 2)

    def test_empty(self):
        with pytest.raises(ValueError):
            set_context_sim(set(), {ctx("a", "b")})


_tuples = st.lists(st.sampled_from("abc"), min_size=3, max_size=3)


@settings(max_examples=200, deadline=None)
@given(_tuples, _tuples, _tuples, _tuples)
def test_symmetry_and_bounds(a, b, c, d):
    assert k_tuple_sim(a, b) == k_tuple_sim(b, a)
    assert 0 <= k_tuple_sim(a, b) <= Fraction(1, 2)
    c0, c1 = ctx(a, c), ctx(b, d)
    assert context_sim(c0, c1) == context_sim(c1, c0)
    assert set_context_sim({c0}, {c0}) >= set_context_sim({c0}, {c1})


class TestConfig:
    def test_defaults(self):
        cfg = ScoringConfig()
        assert (cfg.context_k, cfg.top_n, cfg.max_len_start, cfg.max_len_end) == (4, 100, 3, 10)

    @pytest.mark.parametrize("kw", [dict(max_len_start=1), dict(max_len_start=5, max_len_end=4),
                                    dict(top_n=0), dict(context_k=0)])
    def test_invalid(self, kw):
        with pytest.raises(ValueError):
            ScoringConfig(**kw)


class TestRanking:
    def test_condition_one_bubble_similarity(self):
        ranked = rank_bubbles(skip_loop_trees(), 6, ScoringConfig(top_n=10_000))
        hits = [b for b in ranked if b.seq1 == L("n == n") and b.seq2 is None]
        assert hits and hits[0].similarity == 1

    def test_empty_when_nothing_proper(self):
        ts = naive_trees([list("ab"), list("cd")])
        assert rank_bubbles(ts, 5, ScoringConfig()) == []
        assert get_bubbles(ts, 5, ScoringConfig(), random.Random(0)) == []

    def _ts(self):
        return naive_trees([list(s) for s in WHILE_EXAMPLES])

    def test_sorted_and_truncated(self):
        cfg = ScoringConfig(top_n=40)
        ranked = rank_bubbles(self._ts(), 4, cfg)
        assert len(ranked) == 40
        keys = [(b.similarity, b.frequency) for b in ranked]
        assert keys == sorted(keys, reverse=True)

    def test_shuffle_is_a_permutation_and_deterministic(self):
        cfg = ScoringConfig(top_n=30)
        ranked = rank_bubbles(self._ts(), 4, cfg)
        a = get_bubbles(self._ts(), 4, cfg, random.Random(9))
        b = get_bubbles(self._ts(), 4, cfg, random.Random(9))
        assert a == b
        assert sorted(map(repr, a)) == sorted(map(repr, ranked))

    def test_two_bubbles_never_conflict(self):
        ts = self._ts()
        tab = collect_sequences(ts, 4, 4)
        ranked = rank_bubbles(ts, 4, ScoringConfig(top_n=500), tab)
        pairs = [b for b in ranked if b.seq2 is not None]
        assert pairs
        for b in pairs:
            assert not conflicting(tab.multi[b.seq1], tab.multi[b.seq2])
            assert b.frequency == Fraction(tab.multi[b.seq1].occ + tab.multi[b.seq2].occ, 2)

    def test_frequency_of_one_bubbles(self):
        ts = self._ts()
        tab = collect_sequences(ts, 3, 4)
        for b in rank_bubbles(ts, 3, ScoringConfig(top_n=500), tab):
            if b.seq2 is None:
                assert b.frequency == tab.multi[b.seq1].occ

    def test_one_bubble_similarity_brute_force(self):
        ts = self._ts()
        tab = collect_sequences(ts, 3, 4)
        for b in rank_bubbles(ts, 3, ScoringConfig(top_n=60), tab):
            if b.seq2 is None:
                expect = max(set_context_sim(tab.multi[b.seq1].contexts, s.contexts)
                             for s in tab.singles.values())
                assert b.similarity == expect


def test_label_similarities_order():
    ts = skip_loop_trees()
    out = apply_bubble(ts, Bubble(L("n == n")))
    (new,) = out.introduced
    ranked = label_similarities(out, new, 4)
    assert ranked[0] == ("t1", 1)
    sims = [s for _, s in ranked]
    assert sims == sorted(sims, reverse=True)
    assert new not in [lab for lab, _ in ranked]
