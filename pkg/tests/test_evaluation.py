import random
from fractions import Fraction

import pytest

from bubblegram.earley import membership
from bubblegram.evaluation import (
    BENCHMARKS,
    EvalReport,
    covering_training_set,
    evaluate,
    f1_score,
    generate_test_set,
    load_benchmark,
    precision,
    recall,
)
from bubblegram.grammar import Grammar, GrammarError, Nonterminal, Rule, Terminal
from bubblegram.oracle import FunctionOracle, GrammarOracle


def single(text):
    return Grammar("t0", [Rule("t0", (Terminal(text),))])


def test_bundled_benchmarks_load():
    for name in BENCHMARKS:
        g = load_benchmark(name)
        assert g.rules
    with pytest.raises(KeyError):
        load_benchmark("nope")


def test_self_recall(g_while):
    test = generate_test_set(g_while, 100, 1)
    assert recall(g_while, test) == 1


def test_zero_recall():
    assert recall(single("a"), ["b"]) == 0


def test_recall_empty():
    with pytest.raises(ValueError):
        recall(single("a"), [])


def test_ideal_grammar_recall(g_while, ideal_while):
    # golden grammar without "if" and "==": exactly what the two examples demonstrate
    no_eq = Grammar(g_while.start, [
        r for r in g_while.rules
        if not any(isinstance(s, Terminal) and s.token in (" == ", "if ", "~") for s in r.rhs)
        and not (len(r.rhs) == 1 and r.rhs == (Terminal("L"),))
    ])
    test = generate_test_set(no_eq, 300, 0)
    assert recall(ideal_while, test) == 1


def test_precision_bounds(g_while, ideal_while):
    assert precision(ideal_while, GrammarOracle(g_while), 200) == 1
    assert precision(single("z"), FunctionOracle(lambda s: s != "z"), 10) == 0
    with pytest.raises(ValueError):
        precision(single("z"), FunctionOracle(lambda s: True), 0)


def test_default_sample_count():
    o = FunctionOracle(lambda s: True)
    precision(single("z"), o)
    assert o.stats.total_queries + o.stats.cache_hits == 1000


def test_f1_identity():
    assert f1_score(Fraction(0), Fraction(0)) == 0
    assert f1_score(Fraction(1, 2), Fraction(1)) == Fraction(2, 3)
    rng = random.Random(0)
    for _ in range(100):
        p, r = Fraction(rng.randint(0, 20), 20), Fraction(rng.randint(0, 20), 20)
        f = f1_score(p, r)
        assert f == (0 if p + r == 0 else 2 * p * r / (p + r))


def test_evaluate_report(g_while, ideal_while):
    test = generate_test_set(g_while, 50, 0)
    rep = evaluate(ideal_while, GrammarOracle(g_while), test, 50, 0)
    assert isinstance(rep, EvalReport)
    assert rep.f1 == f1_score(rep.precision, rep.recall)
    assert rep.test_size == 50 and rep.sample_size == 50
    d = rep.as_dict()
    assert set(d) == {"recall", "precision", "f1", "test_size", "sample_size"}
    assert "recall" in rep.table()


def test_permutation_invariance(g_while, ideal_while):
    test = generate_test_set(g_while, 80, 3)
    shuffled = list(test)
    random.Random(1).shuffle(shuffled)
    assert recall(ideal_while, test) == recall(ideal_while, shuffled)


class TestGenerateTestSet:
    def test_empty(self, g_while):
        assert generate_test_set(g_while, 0, 0) == []

    def test_deterministic(self, g_while):
        assert generate_test_set(g_while, 40, 7) == generate_test_set(g_while, 40, 7)

    def test_valid(self, g_while):
        assert all(membership(g_while, s) for s in generate_test_set(g_while, 100, 2))


class TestCoveringSet:
    @pytest.mark.parametrize("name", BENCHMARKS)
    def test_every_rule_used(self, name):
        g = load_benchmark(name)
        train = covering_training_set(g, seed=0)
        assert len(train) == len(set(train))
        assert all(membership(g, s) for s in train)
        # each rule is needed: dropping it loses some example
        for rule in g.rules:
            rest = [r for r in g.rules if r != rule]
            try:
                h = Grammar(g.start, [r for r in rest
                                      if all(any(x.lhs == n for x in rest) for n in r.nonterminals())])
            except GrammarError:
                continue
            assert not all(membership(h, s) for s in train), rule

    def test_size_and_determinism(self, g_arith):
        a = covering_training_set(g_arith, seed=4)
        assert a == covering_training_set(g_arith, seed=4)
        assert len(a) == 20

    def test_nonterminal_chain(self):
        g = Grammar("s", [Rule("s", (Nonterminal("a"),)), Rule("a", (Terminal("x"),)),
                          Rule("a", (Terminal("y"), Nonterminal("a")))])
        train = covering_training_set(g, size=1)
        assert any("y" in s for s in train) and all(membership(g, s) for s in train)
