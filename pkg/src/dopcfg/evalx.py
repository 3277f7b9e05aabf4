"""Experiment protocol: random splits, bracket scoring, paired t-tests, coverage.

Runs are compared as wholes: each metric is computed per run, and the
significance test uses the per-run differences between two systems,
never per-sentence ones.
"""
import json
import math
import statistics
from collections import Counter
from dataclasses import asdict, dataclass, field
from fractions import Fraction

import numpy as np
from scipy import stats

from .errors import CorpusTooSmall, DegenerateVariance, YieldMismatch
from .maxcons import SENTENCE_FINAL, fallback_parse, parse_sentence
from .reduction import build_pcfg
from .treebank import (EMPTY_MARKERS, BinarizationScheme, Tree, binarize, collapse_unary, nodes,
                       pos_terminals, splice_introduced, spans, strip_epsilon, trim_functional_tags,
                       yield_of)

METRICS = (
    ("Cross Brack", "crossing_rate"),
    ("Zero Cross Brack", "zero_crossing_rate"),
    ("Exact Match", "exact_match_rate"),
)


@dataclass
class SplitConfig:
    """Split sizes; ``train=None`` means every sentence not used for testing."""

    train: int | None = 700
    test: int = 88
    max_length: int | None = 30
    runs: int = 10
    seed: int = 0

    def __post_init__(self):
        if self.runs < 1:
            raise ValueError("runs must be >= 1")

    @classmethod
    def bod(cls, **overrides):
        """Preset for Bod's ATIS data: 75-sentence test sets, no length limit."""
        return cls(**{"train": None, "test": 75, "max_length": None, **overrides})


@dataclass
class ScoringPolicy:
    exclude_root: bool = True
    exclude_unit: bool = True
    loose_match: bool = False

    def describe(self):
        parts = ["root " + ("excluded" if self.exclude_root else "included"),
                 "length-1 spans " + ("excluded" if self.exclude_unit else "included")]
        return ", ".join(parts)


def prepare_tree(tree, scheme=BinarizationScheme.CORRECT, retain_unary=False, empty=EMPTY_MARKERS):
    """Strip empty elements, collapse unaries, binarize.  None if nothing is left."""
    tree = strip_epsilon(tree, empty)
    if tree is None:
        return None
    if not retain_unary:
        tree = collapse_unary(tree)
    return binarize(tree, scheme)


def prepare_corpus(trees, scheme=BinarizationScheme.CORRECT, retain_unary=False, strip_words=False,
                   trim_tags=False):
    out = []
    for tree in trees:
        if strip_words:
            tree = pos_terminals(tree)
        if trim_tags:
            tree = trim_functional_tags(tree)
        tree = prepare_tree(tree, scheme, retain_unary)
        if tree is not None:
            out.append(tree)
    return out


def random_split(corpus, config, run):
    """(train, test) for one run; deterministic in (config.seed, run).

    Uses numpy's PCG64 seeded with ``[seed, run]``, which gives the same
    stream on every platform.  Over-long sentences are dropped after the
    split.
    """
    n = len(corpus)
    n_train = n - config.test if config.train is None else config.train
    if n_train < 1 or config.test < 1 or n_train + config.test > n:
        raise CorpusTooSmall(f"need {n_train} + {config.test} sentences, corpus has {n}")
    perm = np.random.default_rng([config.seed, run]).permutation(n)
    train = [corpus[i] for i in perm[:n_train]]
    test = [corpus[i] for i in perm[n_train:n_train + config.test]]
    if config.max_length is not None:
        train = [t for t in train if len(yield_of(t)) <= config.max_length]
        test = [t for t in test if len(yield_of(t)) <= config.max_length]
    return train, test


def _brackets(tree, policy):
    n = len(yield_of(tree))
    out = set()
    for s, t, _ in spans(tree):
        if policy.exclude_unit and s == t:
            continue
        if policy.exclude_root and (s, t) == (1, n):
            continue
        out.add((s, t))
    return out


def _crosses(a, b):
    (s, t), (s2, t2) = a, b
    return s < s2 <= t < t2 or s2 < s <= t2 < t


def crossing_brackets(candidate, gold, policy=None):
    """(number of candidate brackets crossing some gold bracket, number of candidate brackets)."""
    policy = policy or ScoringPolicy()
    if yield_of(candidate) != yield_of(gold):
        raise YieldMismatch(f"{candidate} vs {gold}")
    cand = _brackets(candidate, policy)
    gold_spans = {(s, t) for s, t, _ in spans(gold)}
    crossing = sum(1 for c in cand if any(_crosses(c, g) for g in gold_spans))
    return crossing, len(cand)


def crossing_pairs(a, b):
    """Number of (bracket of a, bracket of b) pairs that cross; symmetric in a and b."""
    sa = {(s, t) for s, t, _ in spans(a)}
    sb = {(s, t) for s, t, _ in spans(b)}
    return sum(1 for x in sa for y in sb if _crosses(x, y))


def exact_match(candidate, gold, loose=False):
    """Strict: identical trees.  Loose: identical after splicing out binarization symbols."""
    if yield_of(candidate) != yield_of(gold):
        raise YieldMismatch(f"{candidate} vs {gold}")
    if loose:
        return splice_introduced(candidate) == splice_introduced(gold)
    return candidate == gold


def paired_t_test(differences):
    """One-sample t on per-run differences: (t, two-sided significance level)."""
    d = [float(x) for x in differences]
    if len(d) < 2:
        raise DegenerateVariance("need at least two runs")
    sd = statistics.stdev(d)
    if sd == 0:
        raise DegenerateVariance("all differences are equal")
    t = statistics.fmean(d) / (sd / math.sqrt(len(d)))
    p = 2 * stats.t.sf(abs(t), len(d) - 1)
    return t, 1 - p


def t_from_summary(mean, sd, n):
    return mean / (sd / math.sqrt(n))


def significance_of(t, n):
    return 1 - 2 * stats.t.sf(abs(t), n - 1)


def productions(tree):
    """(lhs, rhs symbols) for every node."""
    return [(n.label, tuple(c.label if isinstance(c, Tree) else c for c in n.children))
            for n in nodes(tree)]


def prob_one_ungeneratable(p, m=75):
    """m p^(m-1) (1-p): chance that exactly one of m independent draws fails."""
    return m * p ** (m - 1) * (1 - p)


def prob_one_hypergeometric(n_sentences, n_unique, m=75):
    """Same event when drawing m sentences without replacement."""
    if m > n_sentences:
        raise CorpusTooSmall(f"test size {m} exceeds corpus size {n_sentences}")
    num = n_unique * math.comb(n_sentences - n_unique, m - 1)
    return float(Fraction(num, math.comb(n_sentences, m)))


@dataclass
class Coverage:
    sentences: int
    unique_sentences: int
    p: float  # share of sentences whose productions all occur elsewhere
    prob_one: float
    test_size: int
    exact: bool = False


def coverage_analysis(corpus, scheme=BinarizationScheme.CORRECT, retain_unary=False, test_size=75,
                      exact=False, preprocess=True):
    """How likely is a random test set with exactly one ungeneratable sentence?

    A sentence is ungeneratable when one of its productions occurs in no
    other sentence.  ``p`` is the generatable share, and the result uses
    ``m p^(m-1) (1-p)``; ``exact`` switches to sampling without
    replacement.
    """
    trees = prepare_corpus(corpus, scheme, retain_unary) if preprocess else list(corpus)
    per_sentence = [set(productions(t)) for t in trees]
    df = Counter(p for prods in per_sentence for p in prods)
    unique = sum(1 for prods in per_sentence if any(df[p] == 1 for p in prods))
    n = len(per_sentence)
    p = 1 - unique / n if n else 0.0
    if exact:
        prob = prob_one_hypergeometric(n, unique, test_size)
    else:
        prob = prob_one_ungeneratable(p, test_size)
    return Coverage(n, unique, p, prob, test_size, exact)


@dataclass
class RunMetrics:
    crossing_rate: float
    zero_crossing_rate: float
    exact_match_rate: float
    constituents: int
    crossing: int
    sentences: int
    zero_crossing_sentences: int
    exact_matches: int
    fallbacks: int = 0


def score_run(candidates, golds, policy=None, fallbacks=0):
    policy = policy or ScoringPolicy()
    if len(candidates) != len(golds):
        raise YieldMismatch(f"{len(candidates)} candidate trees for {len(golds)} gold trees")
    constituents = crossing = zero = exact = 0
    for cand, gold in zip(candidates, golds):
        c, total = crossing_brackets(cand, gold, policy)
        constituents += total
        crossing += c
        zero += c == 0
        exact += exact_match(cand, gold, policy.loose_match)
    n = len(golds)
    rate = 100.0 * (constituents - crossing) / constituents if constituents else 100.0
    return RunMetrics(rate, 100.0 * zero / n if n else 100.0, 100.0 * exact / n if n else 100.0,
                      constituents, crossing, n, zero, exact, fallbacks)


# A system takes (train trees, gold test trees, run index) and returns
# (candidate trees, number of fallback parses).  Only the oracle system
# looks at more than the yields of the test trees.

def dop_system(punctuation=SENTENCE_FINAL):
    def run(train, test, _run):
        grammar = build_pcfg(train)
        out, fallbacks = [], 0
        for tree in test:
            outcome = parse_sentence(grammar, yield_of(tree), punctuation)
            fallbacks += outcome.method == "fallback"
            out.append(outcome.tree)
        return out, fallbacks
    return run


def right_branching_system(punctuation=SENTENCE_FINAL):
    def run(_train, test, _run):
        return [fallback_parse(yield_of(t), punctuation) for t in test], len(test)
    return run


def gold_system():
    def run(_train, test, _run):
        return list(test), 0
    return run


def external_system(trees_by_run):
    """Candidates produced elsewhere, one list of trees per run in test-set order."""
    def run(_train, test, r):
        trees = trees_by_run[r]
        if len(trees) != len(test):
            raise YieldMismatch(f"run {r}: {len(trees)} candidate trees for {len(test)} sentences")
        return list(trees), 0
    return run


@dataclass
class SummaryRow:
    criteria: str
    values: list
    min: float
    max: float
    range: float
    mean: float
    stddev: float


@dataclass
class TTestRow:
    criteria: str
    t: float | None
    df: int
    significance: float | None


@dataclass
class EvalReport:
    config: dict
    systems: list
    runs: list  # one {system: RunMetrics} per run
    rows: list = field(default_factory=list)
    tests: list = field(default_factory=list)

    def row(self, criteria):
        return next(r for r in self.rows if r.criteria == criteria)


def summarize(criteria, values):
    values = [float(v) for v in values]
    lo, hi = min(values), max(values)
    sd = float(np.std(values, ddof=1)) if len(values) > 1 else 0.0
    return SummaryRow(criteria, values, lo, hi, hi - lo, float(np.mean(values)), sd)


def run_experiment(corpus, config=None, systems=None, scheme=BinarizationScheme.CORRECT, policy=None,
                   punctuation=SENTENCE_FINAL, progress=None):
    """Split, train, parse and score ``config.runs`` times.

    ``corpus`` holds trees already passed through ``prepare_corpus``.
    ``systems`` maps display names to system callables; the default is
    DOP alone.  The first system is the reference for paired differences.
    """
    config = config or SplitConfig()
    policy = policy or ScoringPolicy()
    scheme = BinarizationScheme.parse(scheme)
    systems = systems if systems is not None else {"DOP": dop_system(punctuation)}
    names = list(systems)
    splits = [random_split(corpus, config, r) for r in range(config.runs)]
    runs = []
    for r, (train, test) in enumerate(splits):
        per = {}
        for name in names:
            candidates, fallbacks = systems[name](train, test, r)
            candidates = [binarize(collapse_unary(c), scheme) for c in candidates]
            per[name] = score_run(candidates, test, policy, fallbacks)
        runs.append(per)
        if progress:
            progress(r, per)

    header = {
        "train": config.train if config.train is not None else "rest",
        "test": config.test,
        "max_length": config.max_length if config.max_length is not None else "none",
        "runs": config.runs,
        "seed": config.seed,
        "scheme": scheme.value,
        "crossing_denominator": policy.describe(),
        "exact_match": "loose" if policy.loose_match else "strict",
        "systems": ",".join(names),
        "corpus_size": len(corpus),
    }
    report = EvalReport(header, names, runs)
    for label, attr in METRICS:
        for name in names:
            report.rows.append(summarize(f"{label} {name}", [run[name].__dict__[attr] for run in runs]))
        for other in names[1:]:
            diffs = [run[names[0]].__dict__[attr] - run[other].__dict__[attr] for run in runs]
            criteria = f"{label} {names[0]}-{other}"
            report.rows.append(summarize(criteria, diffs))
            if config.runs >= 2:
                try:
                    t, sig = paired_t_test(diffs)
                except DegenerateVariance:
                    t, sig = None, None
                report.tests.append(TTestRow(criteria, t, config.runs - 1, sig))
    return report


def _pct(x):
    return f"{x:.2f}%"


def format_table(report):
    """Tab-separated text in the Min/Max/Range/Mean/StdDev layout."""
    lines = [f"# {k}: {v}" for k, v in report.config.items()]
    lines.append("Criteria\tMin\tMax\tRange\tMean\tStdDev")
    for row in report.rows:
        lines.append("\t".join([row.criteria, _pct(row.min), _pct(row.max), _pct(row.range),
                                _pct(row.mean), _pct(row.stddev)]))
    if report.tests:
        lines.append("")
        lines.append("Paired t-test\tt\tdf\tSignificance")
        for test in report.tests:
            if test.t is None:
                lines.append(f"{test.criteria}\tn/a\t{test.df}\tn/a")
            else:
                lines.append(f"{test.criteria}\t{test.t:.4f}\t{test.df}\t{100 * test.significance:.2f}%")
    fallbacks = {name: sum(run[name].fallbacks for run in report.runs) for name in report.systems}
    lines.append("")
    lines.append("# fallback parses: " + ", ".join(f"{k}={v}" for k, v in fallbacks.items()))
    return "\n".join(lines) + "\n"


def format_structured(report):
    data = {
        "config": report.config,
        "systems": report.systems,
        "runs": [{name: asdict(m) for name, m in run.items()} for run in report.runs],
        "rows": [asdict(r) for r in report.rows],
        "tests": [asdict(t) for t in report.tests],
    }
    return json.dumps(data, indent=2, sort_keys=True) + "\n"
