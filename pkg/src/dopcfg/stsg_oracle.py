"""Explicit stochastic tree-substitution grammars, by brute force.

This is the reference the reduced PCFG is checked against.  Every
subtree of the corpus is materialized and every derivation of a
sentence can be listed, with exact rational probabilities.  It is
exponential and meant for toy corpora only.

Substitution sites are ``Site`` leaves inside an elementary tree.
"""
import itertools
from collections import Counter, defaultdict
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

from .errors import DopError, EnumerationCapExceeded, NoParse, SubtreeCapExceeded
from .reduction import START_LABEL, Pcfg, Rule, Symbol
from .treebank import Tree, nodes, read_penn, spans, write_penn, yield_of

DEFAULT_SUBTREE_CAP = 10**6
DEFAULT_LENGTH_CAP = 10
DEFAULT_DERIVATION_CAP = 10**6


@dataclass(frozen=True)
class Site:
    """An open nonterminal leaf of an elementary tree."""

    label: str

    def __str__(self):
        return self.label


@dataclass(frozen=True)
class ElementaryTree:
    tree: Tree
    weight: Fraction

    @property
    def root(self):
        return self.tree.label


@dataclass(frozen=True)
class Derivation:
    steps: tuple  # ElementaryTrees in leftmost-substitution order
    tree: Tree
    prob: Fraction


class ExplicitStsg:
    """Elementary trees grouped by root label, weights normalized per root."""

    def __init__(self, elementary, start):
        self.start = start
        self.by_root = defaultdict(list)
        for et in elementary:
            self.by_root[et.root].append(et)
        for label in self.by_root:
            self.by_root[label].sort(key=lambda et: write_penn(et.tree))
        self.by_root = dict(self.by_root)
        self.normalizer = {label: sum(et.weight for et in ets) for label, ets in self.by_root.items()}

    def __iter__(self):
        for label in sorted(self.by_root):
            yield from self.by_root[label]

    def __len__(self):
        return sum(len(v) for v in self.by_root.values())

    def prob(self, et):
        return Fraction(et.weight) / self.normalizer[et.root]

    def distribution(self):
        """{written tree: probability}; duplicates (unmerged mode) are summed."""
        out = defaultdict(Fraction)
        for et in self:
            out[write_penn(et.tree)] += self.prob(et)
        return dict(out)

    def to_text(self):
        lines = [f"# start: {self.start}"]
        lines.extend(f"{et.weight} {write_penn(et.tree)}" for et in self)
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text, start=None):
        """Read ``<weight> <tree>`` lines.

        A bare leaf is a substitution site when its symbol labels some
        node anywhere in the grammar; otherwise it is a terminal.
        """
        if hasattr(text, "read"):
            text = text.read()
        entries = []
        for line in text.splitlines():
            line = line.strip()
            if not line:
                continue
            if line.startswith("#"):
                key, _, value = line[1:].partition(":")
                if key.strip() == "start":
                    start = start or value.strip()
                continue
            weight, _, body = line.partition(" ")
            (tree,) = read_penn(body, allow_reserved=True)
            entries.append((Fraction(weight), tree))
        labels = {n.label for _, t in entries for n in nodes(t)}

        def mark(tree):
            return Tree(tree.label, [mark(c) if isinstance(c, Tree) else (Site(c) if c in labels else c)
                                     for c in tree.children])

        elementary = [ElementaryTree(mark(t), w) for w, t in entries]
        if start is None:
            if not elementary:
                raise DopError("empty grammar needs an explicit start symbol")
            start = elementary[0].root
        return cls(elementary, start)


def node_subtrees(tree):
    """All subtrees of depth >= 1 headed by the root of ``tree``."""
    options = []
    for child in tree.children:
        if isinstance(child, Tree):
            options.append([Site(child.label)] + node_subtrees(child))
        else:
            options.append([child])
    return [Tree(tree.label, combo) for combo in itertools.product(*options)]


def _subtree_count(tree):
    n = 1
    for child in tree.children:
        if isinstance(child, Tree):
            n *= _subtree_count(child) + 1
    return n


def extract_all_subtrees(corpus, merge=True, cap=DEFAULT_SUBTREE_CAP):
    """The DOP grammar of a corpus: every subtree, weighted by occurrences.

    With ``merge=False`` each occurrence stays a separate elementary tree
    of weight 1.  Several root labels get a ``TOP`` start symbol with
    ``(TOP R)`` elementary trees weighted by the number of trees rooted
    in R, mirroring the reduced grammar.
    """
    corpus = list(corpus)
    total = sum(_subtree_count(n) for t in corpus for n in nodes(t))
    if total > cap:
        raise SubtreeCapExceeded(total, cap)
    occurrences = []
    for t in corpus:
        for n in nodes(t):
            occurrences.extend(node_subtrees(n))
    if merge:
        elementary = [ElementaryTree(t, Fraction(c)) for t, c in Counter(occurrences).items()]
    else:
        elementary = [ElementaryTree(t, Fraction(1)) for t in occurrences]
    roots = Counter(t.label for t in corpus)
    if len(roots) > 1:
        labels = {n.label for t in corpus for n in nodes(t)}
        start = START_LABEL
        while start in labels:
            start += "'"
        elementary.extend(ElementaryTree(Tree(start, [Site(r)]), Fraction(c)) for r, c in roots.items())
    elif roots:
        start = next(iter(roots))
    else:
        start = START_LABEL
    return ExplicitStsg(elementary, start)


def _fringe(tree):
    out = []
    for child in tree.children:
        if isinstance(child, Tree):
            out.extend(_fringe(child))
        else:
            out.append(child)
    return out


def _fits(fringe, words):
    """Can each Site cover >= 1 word so that the terminals line up?"""
    n, m = len(words), len(fringe)

    @lru_cache(maxsize=None)
    def ok(i, j):
        if j == m:
            return i == n
        if i == n:
            return False
        item = fringe[j]
        if isinstance(item, Site):
            return any(ok(k, j + 1) for k in range(i + 1, n - (m - j - 1) + 1))
        return item == words[i] and ok(i + 1, j + 1)

    return ok(0, 0)


def _substitute_leftmost(tree, et):
    """Replace the leftmost Site of ``tree``; returns (new tree, done flag)."""
    children = list(tree.children)
    for i, child in enumerate(children):
        if isinstance(child, Site):
            children[i] = et.tree
            return Tree(tree.label, children), True
        if isinstance(child, Tree):
            new, done = _substitute_leftmost(child, et)
            if done:
                children[i] = new
                return Tree(tree.label, children), True
    return tree, False


def _leftmost_site(tree):
    for child in tree.children:
        if isinstance(child, Site):
            return child
        if isinstance(child, Tree):
            site = _leftmost_site(child)
            if site is not None:
                return site
    return None


def enumerate_derivations(stsg, sentence, max_length=DEFAULT_LENGTH_CAP, cap=DEFAULT_DERIVATION_CAP):
    """Every complete leftmost derivation of ``sentence`` from the start symbol."""
    words = tuple(sentence)
    if len(words) > max_length:
        raise EnumerationCapExceeded(f"sentence length {len(words)} exceeds {max_length}")
    found = []
    todo = [(Tree("_", [Site(stsg.start)]), (), Fraction(1))]
    expanded = 0
    while todo:
        partial, steps, prob = todo.pop()
        site = _leftmost_site(partial)
        if site is None:
            found.append(Derivation(steps, partial.children[0], prob))
            if len(found) > cap:
                raise EnumerationCapExceeded(f"more than {cap} derivations")
            continue
        for et in reversed(stsg.by_root.get(site.label, ())):
            new, _ = _substitute_leftmost(partial, et)
            expanded += 1
            if expanded > 50 * cap:
                raise EnumerationCapExceeded("search space too large")
            if _fits(tuple(_fringe(new)), words):
                todo.append((new, steps + (et,), prob * stsg.prob(et)))
    return found


def tree_distribution(derivations):
    """Group derivation probabilities by the tree they produce."""
    out = defaultdict(Fraction)
    for d in derivations:
        out[d.tree] += d.prob
    return dict(out)


def _posteriors_from_trees(dist):
    total = sum(dist.values())
    if not total:
        raise NoParse("no derivation")
    g = defaultdict(Fraction)
    for tree, p in dist.items():
        for key in set(spans(tree)):
            g[key] += p
    return {k: v / total for k, v in g.items()}


def oracle_posteriors(stsg, sentence, **caps):
    """P(some node labelled L spans s..t | sentence), keyed by ``(s, t, L)``, 1-based."""
    return _posteriors_from_trees(tree_distribution(enumerate_derivations(stsg, sentence, **caps)))


def oracle_mpd(stsg, sentence, **caps):
    derivations = enumerate_derivations(stsg, sentence, **caps)
    if not derivations:
        raise NoParse("no derivation")
    return min(derivations, key=lambda d: (-d.prob, write_penn(d.tree)))


def oracle_mpp(stsg, sentence, **caps):
    dist = tree_distribution(enumerate_derivations(stsg, sentence, **caps))
    if not dist:
        raise NoParse("no derivation")
    return min(dist, key=lambda t: (-dist[t], write_penn(t)))


def _compositions(total, parts):
    """Ordered tuples of ``parts`` positive ints summing to ``total``."""
    if parts == 0:
        if total == 0:
            yield ()
        return
    for first in range(1, total - parts + 2):
        for rest in _compositions(total - first, parts - 1):
            yield (first,) + rest


def _fill_by_length(items, length, lookup, build):
    """Fill a child sequence to cover exactly ``length`` words.

    ``lookup(item, l)`` gives {tree: prob} for an item of width ``l``.
    Terminals have width 1.  Yields (children, prob).
    """
    for widths in _compositions(length, len(items)):
        options = []
        for item, w in zip(items, widths):
            table = lookup(item, w)
            if not table:
                break
            options.append(table.items())
        else:
            for combo in itertools.product(*options):
                prob = Fraction(1) if not combo else combo[0][1]
                for _, q in combo[1:]:
                    prob = prob * q
                yield tuple(build(t) for t, _ in combo), prob


def stsg_tree_language(stsg, max_length):
    """{sentence: {tree: P(tree)}} for every sentence of length <= max_length.

    Trees are grown by yield length, so no sentence has to be guessed in
    advance.  A site-only unary elementary tree such as ``(TOP S)`` may
    wrap other trees but not another such wrapper.
    """
    weighted = {label: [(et.tree, stsg.prob(et)) for et in ets] for label, ets in stsg.by_root.items()}
    by_label = defaultdict(dict)  # (label, length) -> {tree: prob}
    fills = {}

    def lookup(item, w):
        if isinstance(item, Site):
            return by_label.get((item.label, w), {})
        if isinstance(item, Tree):
            return fill(item, w)
        return {item: Fraction(1)} if w == 1 else {}

    def fill(tree, w):
        key = (tree, w)
        if key not in fills:
            out = defaultdict(Fraction)
            for kids, q in _fill_by_length(tree.children, w, lookup, lambda t: t):
                out[Tree(tree.label, kids)] += q
            fills[key] = dict(out)
        return fills[key]

    def unary(tree):
        return len(tree.children) == 1 and isinstance(tree.children[0], Site)

    for length in range(1, max_length + 1):
        for label, ets in weighted.items():
            out = defaultdict(Fraction)
            for tree, p in ets:
                if not unary(tree):
                    for t, q in fill(tree, length).items():
                        out[t] += p * q
            if out:
                by_label[label, length] = dict(out)
        # (TOP R) start trees wrap a tree of the same width; one level only
        for label, ets in weighted.items():
            for tree, p in ets:
                if unary(tree):
                    out = by_label.setdefault((label, length), {})
                    for t, q in by_label.get((tree.children[0].label, length), {}).items():
                        key = Tree(label, [t])
                        out[key] = out.get(key, 0) + p * q
    result = defaultdict(dict)
    for length in range(1, max_length + 1):
        for tree, prob in by_label.get((stsg.start, length), {}).items():
            result[tuple(yield_of(tree))][tree] = prob
    return dict(result)


def stsg_language(stsg, max_length):
    """Sentences of length <= max_length the grammar derives, shortest first."""
    return sorted(stsg_tree_language(stsg, max_length), key=lambda w: (len(w), w))


def pcfg_tree_language(pcfg, max_length):
    """{sentence: {exterior tree: P}} from the PCFG's own derivations, erased node by node."""
    by_sym = {}  # (symbol, length) -> {erased tree: prob}
    rules = defaultdict(list)
    for rule in pcfg.rules:
        rules[rule.lhs].append(rule)

    def lookup(item, w):
        if isinstance(item, Symbol):
            return by_sym.get((item, w), {})
        return {item: Fraction(1)} if w == 1 else {}

    for length in range(1, max_length + 1):
        for lhs in rules:
            out = defaultdict(float)
            for rule in rules[lhs]:
                if len(rule.rhs) == 1 and isinstance(rule.rhs[0], Symbol):
                    continue
                for kids, q in _fill_by_length(rule.rhs, length, lookup, lambda t: t):
                    out[Tree(lhs.label, kids)] += rule.prob * float(q)
            if out:
                by_sym[lhs, length] = dict(out)
        # unary start rules (TOP -> R) wrap trees of the same width
        for lhs in rules:
            for rule in rules[lhs]:
                if len(rule.rhs) == 1 and isinstance(rule.rhs[0], Symbol):
                    out = by_sym.setdefault((lhs, length), {})
                    for t, q in by_sym.get((rule.rhs[0], length), {}).items():
                        key = Tree(lhs.label, [t])
                        out[key] = out.get(key, 0.0) + rule.prob * q
    result = defaultdict(dict)
    for length in range(1, max_length + 1):
        for tree, prob in by_sym.get((pcfg.start, length), {}).items():
            result[tuple(yield_of(tree))][tree] = prob
    return dict(result)


# Memoized forms of the same sums, for test sentences where listing every
# derivation is too slow.  Both still build each exterior tree explicitly.

def stsg_tree_distribution(stsg, sentence):
    """{tree: P(tree, sentence)} by recursive matching of elementary trees."""
    words = tuple(sentence)
    weighted = {label: [(et.tree, stsg.prob(et)) for et in ets] for label, ets in stsg.by_root.items()}

    @lru_cache(maxsize=None)
    def width(item):
        # fewest words an item can cover; there are no empty yields
        if isinstance(item, Tree):
            return sum(width(c) for c in item.children)
        return 1

    @lru_cache(maxsize=None)
    def cell(label, i, j):
        out = defaultdict(Fraction)
        for tree, p in weighted.get(label, ()):
            for filled, q in fill(tree, i, j).items():
                out[filled] += p * q
        return dict(out)

    @lru_cache(maxsize=None)
    def fill(tree, i, j):
        return {Tree(tree.label, kids): q for kids, q in fill_seq(tree.children, i, j)}

    @lru_cache(maxsize=None)
    def fill_seq(items, i, j):
        if not items:
            return [((), Fraction(1))] if i == j else []
        first, rest = items[0], items[1:]
        if not isinstance(first, (Tree, Site)):
            if i < j and words[i] == first:
                return [((first,) + kids, q) for kids, q in fill_seq(rest, i + 1, j)]
            return []
        out = []
        need = sum(width(x) for x in rest)
        for k in range(i + width(first), j - need + 1):
            if isinstance(first, Site):
                heads = cell(first.label, i, k)
            else:
                heads = fill(first, i, k)
            if not heads:
                continue
            tails = fill_seq(rest, k, j)
            for (h, p), (kids, q) in itertools.product(heads.items(), tails):
                out.append(((h,) + kids, p * q))
        return out

    return cell(stsg.start, 0, len(words))


def pcfg_derivations(pcfg, sentence, cap=DEFAULT_DERIVATION_CAP):
    """Every derivation tree of the PCFG over ``sentence``, labels like ``NP@4``."""
    words = tuple(sentence)
    by_lhs = defaultdict(list)
    for rule in pcfg.rules:
        by_lhs[rule.lhs].append(rule)

    @lru_cache(maxsize=None)
    def cell(sym, i, j):
        out = []
        for rule in by_lhs.get(sym, ()):
            for kids, p in seq(rule.rhs, i, j):
                out.append((Tree(str(sym), kids), rule.prob * p))
                if len(out) > cap:
                    raise EnumerationCapExceeded(f"more than {cap} derivations")
        return out

    def seq(items, i, j):
        if not items:
            if i == j:
                yield (), 1.0
            return
        first, rest = items[0], items[1:]
        if not isinstance(first, Symbol):
            if i < j and words[i] == first:
                for kids, q in seq(rest, i + 1, j):
                    yield (first,) + kids, q
            return
        for k in range(i + 1, j - len(rest) + 1):
            heads = cell(first, i, k)
            if not heads:
                continue
            for (h, p), (kids, q) in itertools.product(heads, list(seq(rest, k, j))):
                yield (h,) + kids, p * q

    return cell(pcfg.start, 0, len(words))


def pcfg_tree_distribution(pcfg, sentence):
    """{exterior tree: probability}, grouping derivations after erasing interior labels.

    The erasure is done cell by cell so identical exterior subtrees merge
    early; the result equals grouping the full derivation list.
    """
    words = tuple(sentence)
    by_lhs = defaultdict(list)
    for rule in pcfg.rules:
        by_lhs[rule.lhs].append(rule)

    @lru_cache(maxsize=None)
    def cell(sym, i, j):
        out = defaultdict(float)
        for rule in by_lhs.get(sym, ()):
            for kids, p in seq(rule.rhs, i, j):
                out[Tree(sym.label, kids)] += rule.prob * p
        return dict(out)

    def seq(items, i, j):
        if not items:
            if i == j:
                yield (), 1.0
            return
        first, rest = items[0], items[1:]
        if not isinstance(first, Symbol):
            if i < j and words[i] == first:
                for kids, q in seq(rest, i + 1, j):
                    yield (first,) + kids, q
            return
        for k in range(i + 1, j - len(rest) + 1):
            heads = cell(first, i, k)
            if not heads:
                continue
            for (h, p), (kids, q) in itertools.product(heads.items(), list(seq(rest, k, j))):
                yield (h,) + kids, p * q

    return cell(pcfg.start, 0, len(words))


def stsg_to_pcfg(stsg):
    """Compile an explicit STSG into a PCFG with one derivation per STSG derivation.

    Each internal node of each elementary tree gets its own interior
    symbol with a single probability-1 rule; the root rule carries the
    elementary tree's probability.  Elementary trees must be binary or
    preterminal at every node.
    """
    rules = []
    counter = itertools.count(1)

    def child_symbol(child):
        if isinstance(child, Site):
            return Symbol(child.label)
        if isinstance(child, Tree):
            sym = Symbol(child.label, next(counter))
            rules.append(Rule(sym, tuple(child_symbol(c) for c in child.children), 1.0))
            return sym
        return child

    for et in stsg:
        rhs = tuple(child_symbol(c) for c in et.tree.children)
        rules.append(Rule(Symbol(et.root), rhs, float(stsg.prob(et))))
    return Pcfg(rules, Symbol(stsg.start), synthetic_start=False)
