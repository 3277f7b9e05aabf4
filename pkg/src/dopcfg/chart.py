"""CKY-style inside, outside and posterior computation over a PCFG.

Grammars come in the shape the reduction produces: ``X -> Y Z``,
``X -> Y t``, ``X -> t Y``, ``X -> t1 t2``, ``X -> t`` and, only above
the whole sentence, ``TOP -> R``.  Chart cells are indexed 0-based
internally; every public accessor takes 1-based inclusive spans.

Each cell stores a vector of mantissas together with one binary
exponent, so the true inside value is ``mantissa * 2**exponent``.
Derivation probabilities of the reduced grammar are products of many
``1/a_j`` factors and would underflow plain doubles on long sentences.
"""
import math
from bisect import bisect_right
from collections import Counter, defaultdict
from dataclasses import dataclass

import numpy as np

from .errors import DopError, NoParse
from .reduction import Symbol
from .treebank import Tree, write_penn


@dataclass
class _RuleSet:
    lhs: np.ndarray
    prob: np.ndarray
    logp: np.ndarray
    index: np.ndarray  # position in Pcfg.rules
    left: np.ndarray = None
    right: np.ndarray = None


def _ruleset(entries, fields):
    cols = list(zip(*entries)) if entries else [[] for _ in range(len(fields) + 3)]
    lhs = np.asarray(cols[0], dtype=np.int64)
    prob = np.asarray(cols[1], dtype=np.float64)
    index = np.asarray(cols[2], dtype=np.int64)
    with np.errstate(divide="ignore"):
        logp = np.log(prob)
    rs = _RuleSet(lhs, prob, logp, index)
    for name, col in zip(fields, cols[3:]):
        setattr(rs, name, np.asarray(col, dtype=np.int64))
    return rs


class CompiledGrammar:
    """Dense integer encoding of a ``Pcfg`` for the chart loops."""

    def __init__(self, pcfg):
        self.pcfg = pcfg
        self.symbols = list(pcfg.nonterminals)
        self.index = {s: i for i, s in enumerate(self.symbols)}
        self.labels = sorted({s.label for s in self.symbols})
        label_id = {l: i for i, l in enumerate(self.labels)}
        self.base = np.array([label_id[s.label] for s in self.symbols], dtype=np.int64)
        self.start = self.index[pcfg.start]
        self.size = len(self.symbols)

        binary, unary = [], []
        lexical, double = defaultdict(list), defaultdict(list)
        right_term, left_term = defaultdict(list), defaultdict(list)
        ix = self.index
        for r, rule in enumerate(pcfg.rules):
            lhs, rhs, p = ix[rule.lhs], rule.rhs, rule.prob
            nt = [isinstance(x, Symbol) for x in rhs]
            if nt == [True, True]:
                binary.append((lhs, p, r, ix[rhs[0]], ix[rhs[1]]))
            elif nt == [True, False]:
                right_term[rhs[1]].append((lhs, p, r, ix[rhs[0]]))
            elif nt == [False, True]:
                left_term[rhs[0]].append((lhs, p, r, ix[rhs[1]]))
            elif nt == [False, False]:
                double[rhs].append((lhs, p, r))
            elif nt == [False]:
                lexical[rhs[0]].append((lhs, p, r))
            elif nt == [True]:
                unary.append((lhs, p, r, ix[rhs[0]]))
            else:
                raise DopError(f"rule {rule} is not in binary/lexical form")
        self.binary = _ruleset(binary, ["left", "right"])
        self.unary = _ruleset(unary, ["left"])
        if set(self.unary.lhs.tolist()) & set(self.unary.left.tolist()):
            raise DopError("unary rule chains are not supported")
        self.lexical = {t: _ruleset(v, []) for t, v in lexical.items()}
        self.double = {t: _ruleset(v, []) for t, v in double.items()}
        self.right_term = {t: _ruleset(v, ["left"]) for t, v in right_term.items()}
        self.left_term = {t: _ruleset(v, ["right"]) for t, v in left_term.items()}

        by_lhs = defaultdict(list)
        for r, rule in enumerate(pcfg.rules):
            by_lhs[ix[rule.lhs]].append((r, rule.prob, tuple(ix[x] if isinstance(x, Symbol) else x
                                                              for x in rule.rhs)))
        self.by_lhs = dict(by_lhs)


class _Acc:
    """Sum of vectors that each carry their own binary exponent."""

    __slots__ = ("vec", "exp")

    def __init__(self):
        self.vec = None
        self.exp = 0

    def add(self, v, ex):
        m = v.max()
        if m <= 0:
            return
        _, fe = math.frexp(m)
        ex += fe
        if self.vec is None:
            self.vec = np.ldexp(v, -fe)
            self.exp = ex
            return
        d = ex - self.exp
        if d > 0:
            self.vec = np.ldexp(self.vec, -d) + np.ldexp(v, -fe)
            self.exp = ex
        else:
            self.vec += np.ldexp(v, d - fe)

    def result(self):
        if self.vec is None:
            return None
        m = self.vec.max()
        if m <= 0:
            return None
        _, fe = math.frexp(m)
        return np.ldexp(self.vec, -fe), self.exp + fe


class Chart:
    """Inside (``e``) and outside (``f``) tables of one sentence.

    Cells where no symbol has positive inside probability are absent.
    Outside values are only kept for cells present in ``e``; elsewhere
    they cannot contribute to a posterior.
    """

    def __init__(self, grammar, words):
        self.grammar = grammar
        self.words = tuple(words)
        self.n = len(self.words)
        self.e = {}
        self.f = None

    def _value(self, table, s, t, symbol):
        cell = table.get((s - 1, t - 1))
        if cell is None:
            return 0.0
        x = self.grammar.index[symbol] if isinstance(symbol, Symbol) else symbol
        return float(np.ldexp(cell[0][x], cell[1]))

    def inside(self, s, t, symbol):
        return self._value(self.e, s, t, symbol)

    def outside(self, s, t, symbol):
        if self.f is None:
            raise DopError("outside probabilities not computed")
        return self._value(self.f, s, t, symbol)

    def _root(self):
        cell = self.e.get((0, self.n - 1))
        if cell is None or cell[0][self.grammar.start] <= 0:
            return None
        return cell[0][self.grammar.start], cell[1]

    @property
    def total(self):
        """Sentence probability e(1, n, start); may underflow to 0 for long input."""
        root = self._root()
        return 0.0 if root is None else float(np.ldexp(root[0], root[1]))

    @property
    def log_total(self):
        root = self._root()
        return -math.inf if root is None else math.log(root[0]) + root[1] * math.log(2)

    @property
    def parsable(self):
        return self._root() is not None

    def posterior(self, s, t, symbol):
        """g(s, t, X) for a single (possibly interior) symbol."""
        root = self._root()
        if root is None:
            raise NoParse("sentence has no parse")
        key = (s - 1, t - 1)
        if key not in self.e or key not in self.f:
            return 0.0
        x = self.grammar.index[symbol] if isinstance(symbol, Symbol) else symbol
        (em, ex), (fm, fx) = self.e[key], self.f[key]
        return float(np.ldexp(em[x] * fm[x], ex + fx - root[1]) / root[0])


class PosteriorMatrix(dict):
    """Aggregated posteriors ``{(s, t, label): g}``, 1-based, nonzero entries only."""

    def __init__(self, entries=(), n=None):
        super().__init__(entries)
        self.n = n

    def best(self, s, t):
        """(label, score) of the highest posterior at a span; ties go to the smaller label."""
        found = None
        for (a, b, label), v in self.items():
            if (a, b) == (s, t) and (found is None or v > found[1] or (v == found[1] and label < found[0])):
                found = (label, v)
        return found


def _compiled(grammar):
    if isinstance(grammar, CompiledGrammar):
        return grammar
    return grammar.compiled


def inside(pcfg, sentence):
    """Fill the inside table; e(1, n, start) is the sentence probability."""
    G = _compiled(pcfg)
    chart = Chart(G, sentence)
    words, n, N = chart.words, chart.n, G.size
    B, U = G.binary, G.unary
    e = chart.e
    for length in range(1, n + 1):
        for i in range(n - length + 1):
            j = i + length - 1
            acc = _Acc()
            if length == 1:
                rs = G.lexical.get(words[i])
                if rs is not None:
                    acc.add(np.bincount(rs.lhs, rs.prob, N), 0)
            elif length == 2:
                rs = G.double.get((words[i], words[j]))
                if rs is not None:
                    acc.add(np.bincount(rs.lhs, rs.prob, N), 0)
            for k in range(i, j):
                L, R = e.get((i, k)), e.get((k + 1, j))
                if L is not None and R is not None and len(B.lhs):
                    c = B.prob * L[0][B.left] * R[0][B.right]
                    acc.add(np.bincount(B.lhs, c, N), L[1] + R[1])
                if L is not None and k + 1 == j:
                    rs = G.right_term.get(words[j])
                    if rs is not None:
                        acc.add(np.bincount(rs.lhs, rs.prob * L[0][rs.left], N), L[1])
                if R is not None and k == i:
                    rs = G.left_term.get(words[i])
                    if rs is not None:
                        acc.add(np.bincount(rs.lhs, rs.prob * R[0][rs.right], N), R[1])
            cell = acc.result()
            if cell is None:
                continue
            if len(U.lhs):
                vec = cell[0] + np.bincount(U.lhs, U.prob * cell[0][U.left], N)
                acc = _Acc()
                acc.add(vec, cell[1])
                cell = acc.result()
            e[i, j] = cell
    return chart


def outside(pcfg, sentence, chart):
    """Fill ``chart.f`` top-down; f(1, n, start) = 1."""
    G = chart.grammar
    words, n, N = chart.words, chart.n, G.size
    B, U = G.binary, G.unary
    e = chart.e
    chart.f = f = {}
    if chart._root() is None:
        return chart
    accs = defaultdict(_Acc)
    top = np.zeros(N)
    top[G.start] = 1.0
    accs[0, n - 1].add(top, 0)
    for length in range(n, 0, -1):
        for i in range(n - length + 1):
            j = i + length - 1
            acc = accs.pop((i, j), None)
            if acc is None or (i, j) not in e:
                continue
            cell = acc.result()
            if cell is None:
                continue
            fm, fx = cell
            if len(U.lhs):
                fm = fm + np.bincount(U.left, U.prob * fm[U.lhs], N)
            f[i, j] = (fm, fx)
            wb = B.prob * fm[B.lhs] if len(B.lhs) else None
            for k in range(i, j):
                L, R = e.get((i, k)), e.get((k + 1, j))
                if L is not None and R is not None and wb is not None:
                    accs[i, k].add(np.bincount(B.left, wb * R[0][B.right], N), fx + R[1])
                    accs[k + 1, j].add(np.bincount(B.right, wb * L[0][B.left], N), fx + L[1])
                if L is not None and k + 1 == j:
                    rs = G.right_term.get(words[j])
                    if rs is not None:
                        accs[i, k].add(np.bincount(rs.left, rs.prob * fm[rs.lhs], N), fx)
                if R is not None and k == i:
                    rs = G.left_term.get(words[i])
                    if rs is not None:
                        accs[k + 1, j].add(np.bincount(rs.right, rs.prob * fm[rs.lhs], N), fx)
    return chart


def posteriors(chart, exclude=()):
    """g(s,t,X) = f*e/e(1,n,start), with interior variants added into their base label.

    Labels listed in ``exclude`` are dropped from the result.
    """
    root = chart._root()
    if root is None:
        raise NoParse("sentence has no parse")
    G = chart.grammar
    nlab = len(G.labels)
    out = PosteriorMatrix(n=chart.n)
    for (i, j), (em, ex) in chart.e.items():
        cell = chart.f.get((i, j))
        if cell is None:
            continue
        fm, fx = cell
        g = np.ldexp(em * fm, ex + fx - root[1]) / root[0]
        agg = np.bincount(G.base, g, nlab)
        for lab in np.flatnonzero(agg > 0):
            label = G.labels[lab]
            if label not in exclude:
                out[i + 1, j + 1, label] = float(agg[lab])
    return out


def inside_outside(pcfg, sentence):
    chart = inside(pcfg, sentence)
    return outside(pcfg, sentence, chart)


def viterbi_derivation(pcfg, sentence):
    """Most probable derivation, labels as grammar symbols (``NP@4``).

    Max-product CKY in log space.  Ties go to the lower rule index, then
    the smaller split point.
    """
    G = pcfg if isinstance(pcfg, CompiledGrammar) else pcfg.compiled
    words = tuple(sentence)
    n, N = len(words), G.size
    B, U = G.binary, G.unary
    best = {}  # (i,j) -> (score array, rule array, split array)

    for length in range(1, n + 1):
        for i in range(n - length + 1):
            j = i + length - 1
            cands = []  # (score, lhs, rule, split)
            if length == 1 and words[i] in G.lexical:
                rs = G.lexical[words[i]]
                cands.append((rs.logp, rs.lhs, rs.index, np.full(len(rs.lhs), -1)))
            if length == 2 and (words[i], words[j]) in G.double:
                rs = G.double[words[i], words[j]]
                cands.append((rs.logp, rs.lhs, rs.index, np.full(len(rs.lhs), -1)))
            for k in range(i, j):
                L, R = best.get((i, k)), best.get((k + 1, j))
                if L is not None and R is not None and len(B.lhs):
                    cands.append((B.logp + L[0][B.left] + R[0][B.right], B.lhs, B.index,
                                  np.full(len(B.lhs), k)))
                if L is not None and k + 1 == j and words[j] in G.right_term:
                    rs = G.right_term[words[j]]
                    cands.append((rs.logp + L[0][rs.left], rs.lhs, rs.index, np.full(len(rs.lhs), k)))
                if R is not None and k == i and words[i] in G.left_term:
                    rs = G.left_term[words[i]]
                    cands.append((rs.logp + R[0][rs.right], rs.lhs, rs.index, np.full(len(rs.lhs), k)))
            if not cands:
                continue
            cell = _resolve(cands, N)
            if len(U.lhs):
                cands = [(cell[0], np.arange(N), cell[1], cell[2]),
                         (U.logp + cell[0][U.left], U.lhs, U.index, np.full(len(U.lhs), -1))]
                cell = _resolve(cands, N)
            if np.isfinite(cell[0]).any():
                best[i, j] = cell

    root = best.get((0, n - 1))
    if root is None or not np.isfinite(root[0][G.start]):
        raise NoParse("sentence has no parse")
    rules = G.pcfg.rules

    def build(i, j, x):
        _, rule_at, split_at = best[i, j]
        rule = rules[rule_at[x]]
        k = split_at[x]
        rhs = rule.rhs
        label = str(rule.lhs)
        if len(rhs) == 1:
            if isinstance(rhs[0], Symbol):
                return Tree(label, [build(i, j, G.index[rhs[0]])])
            return Tree(label, [rhs[0]])
        a, b = rhs
        if not isinstance(a, Symbol) and not isinstance(b, Symbol):
            return Tree(label, [a, b])
        if not isinstance(b, Symbol):
            return Tree(label, [build(i, j - 1, G.index[a]), b])
        if not isinstance(a, Symbol):
            return Tree(label, [a, build(i + 1, j, G.index[b])])
        return Tree(label, [build(i, k, G.index[a]), build(k + 1, j, G.index[b])])

    return build(0, n - 1, G.start), math.exp(root[0][G.start])


def _resolve(cands, N):
    """Per lhs: max score, then lowest rule index, then lowest split."""
    score = np.concatenate([c[0] for c in cands])
    lhs = np.concatenate([c[1] for c in cands])
    rule = np.concatenate([c[2] for c in cands])
    split = np.concatenate([c[3] for c in cands])
    keep = np.isfinite(score)
    score, lhs, rule, split = score[keep], lhs[keep], rule[keep], split[keep]
    order = np.lexsort((split, rule, -score, lhs))
    lhs_sorted = lhs[order]
    first = order[np.r_[True, lhs_sorted[1:] != lhs_sorted[:-1]]] if len(order) else order
    out_score = np.full(N, -np.inf)
    out_rule = np.full(N, -1, dtype=np.int64)
    out_split = np.full(N, -1, dtype=np.int64)
    out_score[lhs[first]] = score[first]
    out_rule[lhs[first]] = rule[first]
    out_split[lhs[first]] = split[first]
    return out_score, out_rule, out_split


def sample_derivations(pcfg, sentence, chart, count, seed):
    """Draw ``count`` derivations from P(derivation | sentence); returns a Counter of exterior trees.

    Top-down: at a cell, a rule and split point are chosen with
    probability proportional to rule probability times the inside
    values of the parts.  Seeded through numpy's PCG64 generator.
    """
    if count < 1:
        raise ValueError("count must be positive")
    if not chart.parsable:
        raise NoParse("sentence has no parse")
    G = chart.grammar
    words, e = chart.words, chart.e
    rng = np.random.default_rng(seed)
    cache = {}

    def inside_at(i, j, y):
        cell = e.get((i, j))
        if cell is None or cell[0][y] <= 0:
            return None
        return cell[0][y], cell[1]

    def options(i, j, x):
        key = (i, j, x)
        if key in cache:
            return cache[key]
        opts, mant, expo = [], [], []
        for r, p, rhs in G.by_lhs.get(x, ()):
            sym = [not isinstance(y, str) for y in rhs]
            if sym == [False]:
                if i == j and words[i] == rhs[0]:
                    opts.append((rhs, None))
                    mant.append(p), expo.append(0)
            elif sym == [True]:
                v = inside_at(i, j, rhs[0])
                if v:
                    opts.append((rhs, (i, j)))
                    mant.append(p * v[0]), expo.append(v[1])
            elif sym == [False, False]:
                if j == i + 1 and (words[i], words[j]) == rhs:
                    opts.append((rhs, None))
                    mant.append(p), expo.append(0)
            elif sym == [True, False]:
                if j > i and words[j] == rhs[1]:
                    v = inside_at(i, j - 1, rhs[0])
                    if v:
                        opts.append((rhs, j - 1))
                        mant.append(p * v[0]), expo.append(v[1])
            elif sym == [False, True]:
                if j > i and words[i] == rhs[0]:
                    v = inside_at(i + 1, j, rhs[1])
                    if v:
                        opts.append((rhs, i))
                        mant.append(p * v[0]), expo.append(v[1])
            else:
                for k in range(i, j):
                    a, b = inside_at(i, k, rhs[0]), inside_at(k + 1, j, rhs[1])
                    if a and b:
                        opts.append((rhs, k))
                        mant.append(p * a[0] * b[0]), expo.append(a[1] + b[1])
        expo = np.asarray(expo)
        w = np.ldexp(np.asarray(mant), expo - expo.max())
        cum = np.cumsum(w).tolist()
        cache[key] = (opts, cum)
        return cache[key]

    labels = [s.label for s in G.symbols]

    def draw(i, j, x):
        opts, cum = options(i, j, x)
        idx = min(bisect_right(cum, rng.random() * cum[-1]), len(cum) - 1)
        rhs, k = opts[idx]
        label = labels[x]
        sym = [not isinstance(y, str) for y in rhs]
        if sym == [True]:
            return Tree(label, [draw(i, j, rhs[0])])
        if not any(sym):
            return Tree(label, list(rhs))
        if sym == [True, False]:
            return Tree(label, [draw(i, j - 1, rhs[0]), rhs[1]])
        if sym == [False, True]:
            return Tree(label, [rhs[0], draw(i + 1, j, rhs[1])])
        return Tree(label, [draw(i, k, rhs[0]), draw(k + 1, j, rhs[1])])

    n = chart.n
    return Counter(draw(0, n - 1, G.start) for _ in range(count))


def monte_carlo_parse(samples):
    """Most frequent tree in a sample; ties go to the smaller written form."""
    samples = Counter(samples)
    if not samples:
        raise ValueError("empty sample")
    return min(samples, key=lambda t: (-samples[t], write_penn(t)))
