"""Maximum Constituents parsing over a posterior matrix.

``maxc[s][t]`` is the largest expected number of correct constituents
of any binary bracketing of ``s..t``: the best label's posterior at the
span plus the best split of the remainder.  Length-1 spans score the
best label posterior there, which is 0 when the grammar has no
preterminal constituents.

The routine only does arithmetic (``+``, ``>``), so it runs unchanged on
``Fraction`` posteriors.
"""
from dataclasses import dataclass

from .chart import inside, outside, posteriors
from .errors import ZeroLength
from .treebank import UNKNOWN_LABEL, Tree

SENTENCE_FINAL = frozenset(["."])


@dataclass
class MaxcTable:
    maxc: dict  # (s, t) -> score
    label: dict  # (s, t) -> label or None
    split: dict  # (s, t) -> r


@dataclass
class ParseOutcome:
    tree: Tree
    method: str  # "maxcons" or "fallback"
    score: float


def best_labels(g):
    """{(s, t): (label, score)}, ties to the lexicographically smallest label."""
    best = {}
    for (s, t, label), v in g.items():
        cur = best.get((s, t))
        if cur is None or v > cur[1] or (v == cur[1] and label < cur[0]):
            best[s, t] = (label, v)
    return best


def fill_table(g, n):
    if n < 1:
        raise ZeroLength("cannot parse an empty sentence")
    best = best_labels(g)
    maxc, label, split = {}, {}, {}
    for s in range(1, n + 1):
        lab, v = best.get((s, s), (None, 0))
        maxc[s, s] = v if v > 0 else 0
        label[s, s] = lab if v > 0 else None
    for length in range(2, n + 1):
        for s in range(1, n - length + 2):
            t = s + length - 1
            r_best, best_split = s, maxc[s, s] + maxc[s + 1, t]
            for r in range(s + 1, t):
                v = maxc[s, r] + maxc[r + 1, t]
                if v > best_split:
                    r_best, best_split = r, v
            lab, v = best.get((s, t), (None, 0))
            if not v > 0:
                lab, v = None, 0
            maxc[s, t] = v + best_split
            label[s, t] = lab
            split[s, t] = r_best
    return MaxcTable(maxc, label, split)


def maximum_constituents_parse(g, n, words=None):
    """Return (tree, expected correct constituents) for posteriors ``g``.

    ``g`` maps 1-based ``(s, t, label)`` to aggregated posteriors.  Spans
    of length >= 2 with no positive posterior get the label ``X?``;
    length-1 spans without one are left as bare terminals.  The tree need
    not be derivable by the grammar.
    """
    table = fill_table(g, n)
    if words is None:
        words = [f"w{i}" for i in range(1, n + 1)]

    def build(s, t):
        lab = table.label[s, t]
        if s == t:
            return Tree(lab, [words[s - 1]]) if lab is not None else words[s - 1]
        r = table.split[s, t]
        return Tree(lab if lab is not None else UNKNOWN_LABEL, [build(s, r), build(r + 1, t)])

    tree = build(1, n)
    if not isinstance(tree, Tree):
        tree = Tree(UNKNOWN_LABEL, [tree])
    return tree, table.maxc[1, n]


def _right_branching(words):
    if len(words) == 1:
        return Tree(UNKNOWN_LABEL, [words[0]])
    if len(words) == 2:
        return Tree(UNKNOWN_LABEL, list(words))
    return Tree(UNKNOWN_LABEL, [words[0], _right_branching(words[1:])])


def fallback_parse(sentence, punctuation=SENTENCE_FINAL):
    """Right-branching tree with sentence-final punctuation attached at the top."""
    words = list(sentence)
    if not words:
        raise ZeroLength("cannot parse an empty sentence")
    if len(words) > 1 and words[-1] in punctuation:
        body = words[:-1]
        head = body[0] if len(body) == 1 else _right_branching(body)
        return Tree("TOP", [head, words[-1]])
    return _right_branching(words)


def parse_sentence(pcfg, sentence, punctuation=SENTENCE_FINAL):
    """Maximum Constituents parse, or the fallback tree when there is no parse."""
    words = list(sentence)
    if not words:
        raise ZeroLength("cannot parse an empty sentence")
    if all(w in pcfg.terminals for w in words):
        chart = inside(pcfg, words)
        if chart.parsable:
            outside(pcfg, words, chart)
            exclude = {pcfg.start.label} if pcfg.synthetic_start else ()
            g = posteriors(chart, exclude=exclude)
            tree, score = maximum_constituents_parse(g, len(words), words)
            return ParseOutcome(tree, "maxcons", score)
    return ParseOutcome(fallback_parse(words, punctuation), "fallback", 0.0)
