import random
import re

import pytest

from bubblegram.earley import membership
from bubblegram.evaluation import load_benchmark
from bubblegram.grammar import CharClass, TokenClass, deserialize, serialize
from bubblegram.learner import (
    LearnerConfig,
    StartupError,
    accept_bubble,
    compact_labels,
    expand_tokens,
    learn,
    pretokenize,
)
from bubblegram.merging import AuditLog, parse_audit
from bubblegram.oracle import FunctionOracle, GrammarOracle
from bubblegram.trees import Bubble, apply_bubble, naive_trees, yield_of

from conftest import WHILE_EXAMPLES, node, treeset
from test_merging import _single
from test_trees import L, skip_loop_trees, labels_of

CHAR = LearnerConfig(pretokenize=False)


@pytest.fixture(scope="module")
def g_while_skip():
    return deserialize(serialize(load_benchmark("while")) + 'stmt -> "skip"\n')


class TestPretokenize:
    def test_assignment(self):
        assert pretokenize("L = (n+n)") == ["L", " ", "=", " ", "(", "n", "+", "n", ")"]

    def test_runs(self):
        assert pretokenize("while  true") == ["while", "  ", "true"]

    def test_single(self):
        assert pretokenize("x") == ["x"]

    def test_classes_and_other(self):
        assert pretokenize("abCD12\t\né!") == ["ab", "CD", "12", "\t\n", "é", "!"]

    def test_concatenation(self):
        rng = random.Random(0)
        for _ in range(200):
            s = "".join(rng.choice("aZ9 \t(+é") for _ in range(rng.randint(1, 20)))
            assert "".join(pretokenize(s)) == s


class TestAcceptBubble:
    def _ts(self):
        return naive_trees([list(s) for s in WHILE_EXAMPLES])

    def test_paren_sum_accepted(self, g_while):
        ts = self._ts()
        b = Bubble(labels_of(ts, "(n+n)"))
        ok, merged = accept_bubble(apply_bubble(ts, b), b, GrammarOracle(g_while), CHAR, random.Random(0))
        assert ok
        assert membership(merged.grammar(), "L = n ; L = ((n+n)+n)")
        assert labels_of(ts, "n")[0] not in merged.labels()

    def test_hile_rejected(self, g_while):
        ts = self._ts()
        b = Bubble(labels_of(ts, "hile"))
        bbld = apply_bubble(ts, b)
        ok, out = accept_bubble(bbld, b, GrammarOracle(g_while), CHAR, random.Random(0))
        assert not ok and out is bbld

    def test_true_false_two_bubble(self, g_while):
        ts = self._ts()
        b = Bubble(labels_of(ts, "true"), labels_of(ts, "false"))
        ok, merged = accept_bubble(apply_bubble(ts, b), b, GrammarOracle(g_while), CHAR, random.Random(0))
        assert ok
        g = merged.grammar()
        assert membership(g, "while false & true do L = n")
        assert membership(g, "while true & true do L = n")

    def test_condition_else_pair_rejected(self, g_while_skip):
        ts = skip_loop_trees()
        b = Bubble(L("n == n"), L("lse"))
        ok, _ = accept_bubble(apply_bubble(ts, b), b, GrammarOracle(g_while_skip), CHAR, random.Random(0))
        assert not ok

    def test_condition_merges_with_t1(self, g_while_skip):
        ts = skip_loop_trees()
        b = Bubble(L("n == n"))
        ok, merged = accept_bubble(apply_bubble(ts, b), b, GrammarOracle(g_while_skip), CHAR,
                                   random.Random(0))
        assert ok
        assert "t1" not in merged.labels()
        assert membership(merged.grammar(), "if n == n then skip else skip")

    def test_partial_merge_fallback(self, g_while):
        # "n" also occurs inside "then", so only a partial merge can accept "(n+n)"
        ts = naive_trees([list("if n == n then L = n else L = n"), list("L = (n+n)")])
        b = Bubble(labels_of(ts, "(n+n)"))
        ok, merged = accept_bubble(apply_bubble(ts, b), b, GrammarOracle(g_while), CHAR, random.Random(0))
        assert ok
        g = merged.grammar()
        assert membership(g, "if n == n then L = (n+n) else L = n")
        assert "then" in "".join(yield_of(t) for t in merged.trees)
        assert labels_of(ts, "n")[0] in merged.labels()


class TestExpandTokens:
    def _ts(self):
        return treeset(node("t0", "x", _single("t1", "abc"), "y"),
                       node("t0", "x", _single("t1", "cde"), "y"))

    def _expanded(self, ts, pred, seed=0):
        out = expand_tokens(ts, FunctionOracle(pred), LearnerConfig(), random.Random(seed))
        return {r.rhs for r in out.grammar().rules_for("t1")}

    def test_lower(self):
        got = self._expanded(self._ts(), lambda s: re.fullmatch(r"x[a-z]+y", s) is not None)
        assert got == {(TokenClass(CharClass.LOWER),)}

    def test_letters(self):
        got = self._expanded(self._ts(), lambda s: re.fullmatch(r"x[a-zA-Z]+y", s) is not None)
        assert got == {(TokenClass(CharClass.LETTERS),)}

    def test_rejection_keeps_tokens(self):
        ts = self._ts()
        got = self._expanded(ts, lambda s: s in {"xabcy", "xcdey"})
        assert got == {r.rhs for r in ts.grammar().rules_for("t1")}

    def test_multi_token_untouched(self):
        ts = treeset(node("t0", "x", node("t1", "ab"), "y"))
        out = expand_tokens(ts, FunctionOracle(lambda s: True), LearnerConfig(), random.Random(0))
        assert out.grammar().rules_for("t1") == ts.grammar().rules_for("t1")

    def test_digits_ladder(self):
        ts = treeset(node("t0", "x", _single("t1", "12"), "y"))
        got = self._expanded(ts, lambda s: re.fullmatch(r"x[0-9]+y", s) is not None)
        assert got == {(TokenClass(CharClass.DIGITS),)}

    def test_disabled(self):
        ts = self._ts()
        out = expand_tokens(ts, FunctionOracle(lambda s: True), LearnerConfig(token_expand_samples=0),
                            random.Random(0))
        assert out is ts


class TestLearn:
    def test_single_example(self):
        rep = learn(["a"], FunctionOracle(lambda s: s == "a"))
        assert membership(rep.grammar, "a")
        assert all(not membership(rep.grammar, s) for s in ["", "aa", "b"])

    def test_startup_rejection(self):
        with pytest.raises(StartupError):
            learn(["a", "b"], FunctionOracle(lambda s: s == "a"))

    def test_empty(self):
        with pytest.raises(StartupError):
            learn([], FunctionOracle(lambda s: True))
        with pytest.raises(StartupError):
            learn(["a", ""], FunctionOracle(lambda s: True))

    def test_fidelity_and_report(self, g_while):
        log = AuditLog()
        o = GrammarOracle(g_while)
        rep = learn(WHILE_EXAMPLES, o, LearnerConfig(rng_seed=1), log)
        assert all(membership(rep.grammar, s) for s in WHILE_EXAMPLES)
        assert set(rep.phase_times) == {"oracle", "bubble_scoring", "candidate_sampling", "other"}
        assert rep.aborted is None
        rows = parse_audit(log.render())
        assert sum(r["n_new_queries"] for r in rows) == o.stats.total_queries
        d = rep.as_dict()
        assert d["oracle"]["total_queries"] == o.stats.total_queries
        assert len(d["accepted_bubbles"]) == len(rep.accepted_bubbles)

    def test_deterministic(self, g_while):
        a = learn(WHILE_EXAMPLES, GrammarOracle(g_while), LearnerConfig(rng_seed=3))
        b = learn(WHILE_EXAMPLES, GrammarOracle(g_while), LearnerConfig(rng_seed=3))
        assert serialize(a.grammar) == serialize(b.grammar)

    def test_budget_abort(self, g_while):
        rep = learn(WHILE_EXAMPLES, GrammarOracle(g_while, budget=30))
        assert rep.aborted and "budget" in rep.aborted
        assert all(membership(rep.grammar, s) for s in WHILE_EXAMPLES)

    def test_length_schedule(self, g_while):
        seen = []
        learn(WHILE_EXAMPLES, GrammarOracle(g_while), LearnerConfig(rng_seed=0),
              on_rank=lambda it, m, bubbles: seen.append(m))
        assert seen[0] == 3 and seen[-1] == 10
        for prev, cur in zip(seen, seen[1:]):
            assert cur == prev + 1 or cur == 3
        assert seen[-8:] == list(range(3, 11))

    def test_labels_compacted(self, g_while):
        rep = learn(WHILE_EXAMPLES, GrammarOracle(g_while), LearnerConfig(rng_seed=0))
        nts = rep.grammar.nonterminals
        assert nts == ["t0"] + [f"t{i}" for i in range(1, len(nts))]

    def test_monotonic_mode(self, g_while):
        cfg = LearnerConfig(rng_seed=0, check_monotonic=True, monotonic_max_len=6)
        rep = learn(["L = n ; L = n", "L = (n+n)"], GrammarOracle(g_while), cfg)
        assert rep.monotonic_checks >= 1
        assert rep.monotonic_violations == []


def test_compact_labels():
    ts = treeset(node("t0", node("t17", "ab"), node("t4", "cd")))
    out = compact_labels(ts)
    assert set(out.labels()) >= {"t0", "t1", "t2"}
    assert "t17" not in out.labels()
