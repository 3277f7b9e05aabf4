import math
import random
from collections import Counter, defaultdict
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from scipy import stats

from conftest import corpora, random_corpus
from dopcfg.chart import (inside, inside_outside, monte_carlo_parse, posteriors,
                          sample_derivations, viterbi_derivation)
from dopcfg.errors import NoParse
from dopcfg.reduction import Symbol, build_pcfg, erase_interior, reduce_corpus
from dopcfg.stsg_oracle import (extract_all_subtrees, oracle_posteriors, pcfg_derivations,
                                stsg_language, stsg_to_pcfg, stsg_tree_distribution)
from dopcfg.treebank import Tree, read_penn, spans, write_penn, yield_of


def t(text):
    return read_penn(text)[0]


@pytest.fixture
def worked_pcfg(worked_tree):
    return build_pcfg([worked_tree])


def posteriors_from(dist, exclude=("TOP",)):
    """Aggregated posteriors computed straight from a tree distribution."""
    total = sum(dist.values())
    g = defaultdict(Fraction)
    for tree, p in dist.items():
        for key in set(spans(tree)):
            if key[2] not in exclude:
                g[key] += p
    return {k: v / total for k, v in g.items()}


def test_trivial_grammar_inside():
    pcfg = reduce_corpus([t("(A x)")], keep_root_interior=True)
    chart = inside(pcfg, ["x"])
    assert chart.inside(1, 1, Symbol("A")) == 1.0
    assert chart.inside(1, 1, Symbol("A", 1)) == 1.0
    assert chart.total == 1.0


def test_worked_inside_is_derivation_mass(worked_pcfg, worked_tree):
    chart = inside(worked_pcfg, yield_of(worked_tree))
    assert chart.total == pytest.approx(9 / 16, rel=1e-12)


def test_unparsable_sentence(worked_pcfg):
    chart = inside(worked_pcfg, ["PN", "V"])
    assert chart.total == 0.0 and not chart.parsable
    assert chart.log_total == -math.inf
    inside_outside(worked_pcfg, ["PN", "V"])
    with pytest.raises(NoParse):
        posteriors(chart)
    with pytest.raises(NoParse):
        viterbi_derivation(worked_pcfg, ["PN", "V"])


def test_outside_of_start_is_one(worked_pcfg, worked_tree):
    chart = inside_outside(worked_pcfg, yield_of(worked_tree))
    assert chart.outside(1, 5, worked_pcfg.start) == 1.0


def test_worked_posteriors(worked_pcfg, worked_tree):
    chart = inside_outside(worked_pcfg, yield_of(worked_tree))
    g = posteriors(chart)
    assert g[1, 2, "NP"] == pytest.approx(1.0)
    assert g[3, 5, "VP"] == pytest.approx(1.0)
    assert g[1, 5, "S"] == pytest.approx(1.0)
    # the aggregate splits into exterior and interior contributions
    parts = chart.posterior(1, 2, Symbol("NP")) + chart.posterior(1, 2, Symbol("NP", 2))
    assert parts == pytest.approx(1.0)
    oracle = oracle_posteriors(extract_all_subtrees([worked_tree]), yield_of(worked_tree))
    assert set(g) == set(oracle)


def test_absent_symbol_has_zero_posterior(worked_pcfg, worked_tree):
    chart = inside_outside(worked_pcfg, yield_of(worked_tree))
    assert chart.posterior(1, 2, Symbol("VP")) == 0.0
    assert chart.posterior(2, 4, Symbol("S")) == 0.0


def test_toy_stsg_posteriors_through_compiled_stsg(toy_stsg):
    pcfg = stsg_to_pcfg(toy_stsg)
    g = posteriors(inside_outside(pcfg, ["x", "x"]))
    oracle = oracle_posteriors(toy_stsg, ["x", "x"])
    assert set(g) == set(oracle)
    for k, v in oracle.items():
        assert g[k] == pytest.approx(float(v), abs=1e-12)


@settings(max_examples=60, deadline=None)
@given(corpora(max_nodes=24, max_trees=4))
def test_posteriors_match_oracle(corpus):
    pcfg = build_pcfg(corpus)
    stsg = extract_all_subtrees(corpus)
    exclude = {pcfg.start.label} if pcfg.synthetic_start else set()
    for words in stsg_language(stsg, 6)[:6]:
        chart = inside_outside(pcfg, words)
        dist = stsg_tree_distribution(stsg, words)
        assert chart.total == pytest.approx(float(sum(dist.values())), rel=1e-9)
        want = posteriors_from(dist, exclude)
        got = posteriors(chart, exclude=exclude)
        assert set(got) == set(want)
        for k, v in want.items():
            assert abs(got[k] - float(v)) <= 1e-9
            assert got[k] <= 1 + 1e-9


def _rule_posteriors(pcfg, chart):
    """Sum of f(X) P(rule) e(parts) / Z per (cell, lhs), from the rule list directly."""
    words, n, Z = chart.words, chart.n, chart.total
    out = defaultdict(float)
    for rule in pcfg.rules:
        rhs = rule.rhs
        for s in range(1, n + 1):
            for e in range(s, n + 1):
                f = chart.outside(s, e, rule.lhs)
                if f == 0:
                    continue
                if len(rhs) == 1:
                    if isinstance(rhs[0], Symbol):
                        v = chart.inside(s, e, rhs[0])
                    else:
                        v = 1.0 if s == e and words[s - 1] == rhs[0] else 0.0
                    out[s, e, rule.lhs] += f * rule.prob * v / Z
                    continue
                for k in range(s, e):
                    parts = []
                    for x, (a, b) in zip(rhs, ((s, k), (k + 1, e))):
                        if isinstance(x, Symbol):
                            parts.append(chart.inside(a, b, x))
                        else:
                            parts.append(1.0 if a == b and words[a - 1] == x else 0.0)
                    out[s, e, rule.lhs] += f * rule.prob * parts[0] * parts[1] / Z
    return out


@settings(max_examples=30, deadline=None)
@given(corpora(max_nodes=20, max_trees=3))
def test_local_consistency(corpus):
    pcfg = build_pcfg(corpus)
    stsg = extract_all_subtrees(corpus)
    for words in stsg_language(stsg, 5)[:3]:
        chart = inside_outside(pcfg, words)
        flows = _rule_posteriors(pcfg, chart)
        n = len(words)
        assert flows[1, n, pcfg.start] == pytest.approx(1.0, rel=1e-9)
        for (s, e, sym), v in flows.items():
            assert v == pytest.approx(chart.posterior(s, e, sym), rel=1e-9, abs=1e-12)
            f, ins = chart.outside(s, e, sym), chart.inside(s, e, sym)
            assert f * ins <= chart.total * (1 + 1e-9)


def test_long_sentence_does_not_underflow():
    # P(A -> x) is small, so x^n has probability far below the double range
    corpus = [t("(A x (A x))")] + [Tree("A", [f"y{k}"]) for k in range(5000)]
    pcfg = build_pcfg(corpus)
    words = ["x"] * 200
    chart = inside_outside(pcfg, words)
    assert chart.parsable
    assert chart.log_total < math.log(1e-300)
    g = posteriors(chart)
    assert g[1, 200, "A"] == pytest.approx(1.0, rel=1e-9)
    assert all(v <= 1 + 1e-9 for v in g.values())


def test_viterbi_trivial():
    pcfg = reduce_corpus([t("(A x)")], keep_root_interior=True)
    tree, p = viterbi_derivation(pcfg, ["x"])
    assert write_penn(tree) == "(A x)" and p == 1.0


def test_viterbi_worked(worked_pcfg, worked_tree):
    tree, p = viterbi_derivation(worked_pcfg, yield_of(worked_tree))
    assert erase_interior(tree) == worked_tree
    # four derivations exist, so the best is strictly below the total
    assert p == pytest.approx(2 / 6 * 1 / 2)
    assert p < inside(worked_pcfg, yield_of(worked_tree)).total


@settings(max_examples=40, deadline=None)
@given(corpora(max_nodes=20, max_trees=3))
def test_viterbi_is_best_enumerated_derivation(corpus):
    pcfg = build_pcfg(corpus)
    stsg = extract_all_subtrees(corpus)
    for words in stsg_language(stsg, 5)[:4]:
        derivations = pcfg_derivations(pcfg, words)
        best = max(p for _, p in derivations)
        tree, p = viterbi_derivation(pcfg, words)
        assert p == pytest.approx(best, rel=1e-9)
        assert p <= inside(pcfg, words).total * (1 + 1e-12)
        if len(derivations) == 1:
            assert p == pytest.approx(inside(pcfg, words).total, rel=1e-12)
        assert yield_of(tree) == list(words)


def test_sampler_single_tree(worked_pcfg, worked_tree):
    words = yield_of(worked_tree)
    samples = sample_derivations(worked_pcfg, words, inside(worked_pcfg, words), 200, seed=1)
    assert samples == Counter({worked_tree: 200})


def test_sampler_is_deterministic(toy_stsg):
    pcfg = stsg_to_pcfg(toy_stsg)
    chart = inside(pcfg, ["x", "x"])
    a = sample_derivations(pcfg, ["x", "x"], chart, 500, seed=2**63 + 5)
    b = sample_derivations(pcfg, ["x", "x"], chart, 500, seed=2**63 + 5)
    assert a == b
    with pytest.raises(ValueError):
        sample_derivations(pcfg, ["x", "x"], chart, 0, seed=1)


def test_sampler_two_trees_within_three_sigma():
    corpus = [t("(S (A x) (B y))"), t("(S (C x) (B y))"), t("(S (A x) (D y))")]
    pcfg = build_pcfg(corpus)
    dist = stsg_tree_distribution(extract_all_subtrees(corpus), ["x", "y"])
    total = sum(dist.values())
    count = 10_000
    samples = sample_derivations(pcfg, ["x", "y"], inside(pcfg, ["x", "y"]), count, seed=11)
    assert set(samples) == set(dist)
    for tree, p in dist.items():
        p = float(p / total)
        sigma = math.sqrt(count * p * (1 - p))
        assert abs(samples[tree] - count * p) <= 3 * sigma


@pytest.mark.parametrize("seed", [0, 1, 2])
def test_sampler_chi_square(seed):
    corpus = random_corpus(random.Random(40 + seed), depth=3, max_trees=5)
    pcfg = build_pcfg(corpus)
    stsg = extract_all_subtrees(corpus)
    lang = stsg_language(stsg, 8)
    # the sentence with the most distinct trees
    words = max(lang, key=lambda w: (len(stsg_tree_distribution(stsg, w)), w))
    dist = stsg_tree_distribution(stsg, words)
    trees = sorted(dist, key=write_penn)
    total = sum(dist.values())
    count = 10_000
    samples = sample_derivations(pcfg, words, inside(pcfg, words), count, seed=seed)
    assert set(samples) <= set(trees)
    expected = np.array([float(dist[x] / total) * count for x in trees])
    observed = np.array([samples[x] for x in trees])
    if len(trees) > 1:
        assert stats.chisquare(observed, expected).pvalue > 0.001


def test_monte_carlo_parse():
    a, b = t("(S x y)"), t("(T x y)")
    assert monte_carlo_parse(Counter({a: 7, b: 3})) == a
    assert monte_carlo_parse(Counter({b: 1})) == b
    # ties go to the smaller written form
    assert monte_carlo_parse(Counter({b: 2, a: 2})) == a
    with pytest.raises(ValueError):
        monte_carlo_parse(Counter())
