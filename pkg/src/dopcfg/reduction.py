"""Reduction of the all-subtrees DOP model to an equivalent PCFG.

Every corpus node ``A@j`` gets an address ``j`` and a private interior
nonterminal ``A@j`` (written with the address) next to the shared
exterior nonterminal ``A``.  With ``a_j`` the number of subtrees headed
by the node and ``a`` the sum of ``a_j`` over all nodes labelled ``A``,
a node with nonterminal children ``B@k`` and ``C@l`` yields::

    A@j -> B C      1/a_j         A -> B C      1/a
    A@j -> B@k C    b_k/a_j       A -> B@k C    b_k/a
    A@j -> B C@l    c_l/a_j       A -> B C@l    c_l/a
    A@j -> B@k C@l  b_k c_l/a_j   A -> B@k C@l  b_k c_l/a

Terminal children have no interior variant, so they only ever appear
literally.  Counts are exact Python integers; probabilities become
floats when a rule is emitted.
"""
import itertools
import re
from collections import Counter, defaultdict
from dataclasses import dataclass, field
from functools import cached_property

from .errors import ArityViolation, DopError
from .treebank import Tree

START_LABEL = "TOP"


@dataclass(frozen=True, order=True)
class Symbol:
    """A nonterminal: exterior when ``address`` is None, interior otherwise."""

    label: str
    address: int | None = None

    @property
    def interior(self):
        return self.address is not None

    def __str__(self):
        if self.address is None:
            return self.label
        return f"{self.label}@{self.address}"


@dataclass(frozen=True)
class Rule:
    lhs: Symbol
    rhs: tuple  # Symbols and terminal strings
    prob: float

    def __str__(self):
        return f"{self.lhs} → {' '.join(map(str, self.rhs))}\t{self.prob!r}"


def _sym_key(x):
    if isinstance(x, Symbol):
        return (0, x.label, -1 if x.address is None else x.address)
    return (1, x, -1)


def rule_key(rule):
    return (_sym_key(rule.lhs), tuple(_sym_key(x) for x in rule.rhs))


class Pcfg:
    """Weighted grammar over binary, mixed, lexical and root-unary rules.

    Rules are kept in a fixed order (by lhs, then rhs); the position of a
    rule in ``rules`` is its index for tie-breaking.  ``synthetic_start``
    marks a ``TOP`` symbol added above several corpus root labels.
    """

    def __init__(self, rules, start, node_count=None, synthetic_start=False):
        self.rules = tuple(sorted(rules, key=rule_key))
        self.start = start
        self.node_count = node_count
        self.synthetic_start = synthetic_start

    def __len__(self):
        return len(self.rules)

    @cached_property
    def by_lhs(self):
        out = defaultdict(list)
        for i, rule in enumerate(self.rules):
            out[rule.lhs].append(i)
        return dict(out)

    @cached_property
    def nonterminals(self):
        found = {self.start}
        for rule in self.rules:
            found.add(rule.lhs)
            found.update(x for x in rule.rhs if isinstance(x, Symbol))
        return sorted(found, key=_sym_key)

    @cached_property
    def terminals(self):
        return frozenset(x for r in self.rules for x in r.rhs if not isinstance(x, Symbol))

    @cached_property
    def compiled(self):
        from .chart import CompiledGrammar

        return CompiledGrammar(self)

    def lhs_sums(self):
        sums = defaultdict(float)
        for rule in self.rules:
            sums[rule.lhs] += rule.prob
        return dict(sums)

    def to_text(self):
        lines = [f"# start: {self.start}"]
        if self.node_count is not None:
            lines.append(f"# nodes: {self.node_count}")
        if self.synthetic_start:
            lines.append("# synthetic-start: yes")
        lines.extend(str(rule) for rule in self.rules)
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text):
        """Inverse of ``to_text``; also accepts ``->`` for the arrow."""
        if hasattr(text, "read"):
            text = text.read()
        meta = {}
        raw = []
        for lineno, line in enumerate(text.splitlines(), 1):
            line = line.strip()
            if not line:
                continue
            if line.startswith("#"):
                key, _, value = line[1:].partition(":")
                meta[key.strip()] = value.strip()
                continue
            try:
                body, prob = line.rsplit("\t", 1)
                lhs, rhs = re.split(r"\s*(?:→|->)\s*", body, maxsplit=1)
                raw.append((lhs.strip(), rhs.split(), float(prob)))
            except ValueError:
                raise DopError(f"line {lineno}: malformed rule {line!r}") from None
        lhs_names = {lhs for lhs, _, _ in raw}
        if "start" in meta:
            lhs_names.add(meta["start"])

        def symbol(name):
            label, at, addr = name.rpartition("@")
            if at and addr.isdigit():
                return Symbol(label, int(addr))
            return Symbol(name)

        rules = [Rule(symbol(lhs), tuple(symbol(x) if x in lhs_names else x for x in rhs), p)
                 for lhs, rhs, p in raw]
        if not rules:
            raise DopError("grammar has no rules")
        start = symbol(meta["start"]) if "start" in meta else rules[0].lhs
        nodes = int(meta["nodes"]) if "nodes" in meta else None
        return cls(rules, start, nodes, meta.get("synthetic-start") == "yes")


@dataclass(eq=False)
class AddressedNode:
    label: str
    address: int
    children: list = field(default_factory=list)  # AddressedNodes and terminals
    count: int = 1

    def __repr__(self):
        return f"AddressedNode({self.label}@{self.address}, count={self.count})"


@dataclass
class AddressedCorpus:
    roots: list
    nodes: list  # nodes[i] has address i + 1

    def node(self, address):
        return self.nodes[address - 1]

    def label_totals(self):
        totals = defaultdict(int)
        for n in self.nodes:
            totals[n.label] += n.count
        return dict(totals)


def assign_addresses(corpus):
    """Number every node depth-first, left to right, continuing across trees.

    Addresses start at 1.  Counts are filled in as well, since they only
    depend on the structure.
    """
    nodes = []

    def visit(tree):
        if not 1 <= len(tree.children) <= 2 or (
                len(tree.children) == 1 and isinstance(tree.children[0], Tree)):
            raise ArityViolation(f"node {tree.label} has children {len(tree.children)} "
                                 f"({tree}); binarize and collapse unaries first")
        node = AddressedNode(tree.label, len(nodes) + 1)
        nodes.append(node)
        node.children = [visit(c) if isinstance(c, Tree) else c for c in tree.children]
        return node

    roots = [visit(t) for t in corpus]
    corpus = AddressedCorpus(roots, nodes)
    count_subtrees(corpus)
    return corpus


def count_subtrees(corpus):
    """Fill ``count`` bottom-up; returns (per-address counts, per-label totals)."""
    # children always carry larger addresses than their parent
    for node in reversed(corpus.nodes):
        n = 1
        for child in node.children:
            if isinstance(child, AddressedNode):
                n *= child.count + 1
        node.count = n
    counts = {node.address: node.count for node in corpus.nodes}
    return counts, corpus.label_totals()


def _child_options(child):
    """(rhs symbol, multiplicity) pairs for one child position."""
    if isinstance(child, AddressedNode):
        return [(Symbol(child.label), 1), (Symbol(child.label, child.address), child.count)]
    return [(child, 1)]


def build_pcfg(corpus, keep_root_interior=False):
    """Emit the reduced grammar for an addressed corpus.

    Interior rules of root nodes are unreachable (no parent ever names
    them) and are left out unless ``keep_root_interior`` is set.
    Exterior rules with the same lhs and rhs are merged by summing.
    When the corpus has several root labels a ``TOP`` start symbol is
    added, with ``TOP -> R`` weighted by the share of trees rooted in R.
    """
    if not isinstance(corpus, AddressedCorpus):
        corpus = assign_addresses(corpus)
    if not corpus.roots:
        raise DopError("cannot build a grammar from an empty corpus")
    totals = corpus.label_totals()
    root_addresses = {r.address for r in corpus.roots}
    exterior = defaultdict(int)  # (lhs label, rhs) -> numerator over totals[label]
    rules = []
    for node in corpus.nodes:
        lhs_int = Symbol(node.label, node.address)
        emit_interior = keep_root_interior or node.address not in root_addresses
        for combo in itertools.product(*[_child_options(c) for c in node.children]):
            rhs = tuple(sym for sym, _ in combo)
            weight = 1
            for _, w in combo:
                weight *= w
            if emit_interior:
                rules.append(Rule(lhs_int, rhs, weight / node.count))
            exterior[node.label, rhs] += weight
    for (label, rhs), weight in exterior.items():
        rules.append(Rule(Symbol(label), rhs, weight / totals[label]))

    root_labels = Counter(r.label for r in corpus.roots)
    synthetic = len(root_labels) > 1
    if synthetic:
        start = Symbol(_fresh_start(totals))
        for label, n in root_labels.items():
            rules.append(Rule(start, (Symbol(label),), n / len(corpus.roots)))
    else:
        start = Symbol(corpus.roots[0].label)
    return Pcfg(rules, start, node_count=len(corpus.nodes), synthetic_start=synthetic)


def _fresh_start(labels):
    name = START_LABEL
    while name in labels:
        name += "'"
    return name


_INTERIOR = re.compile(r"^(.*)@\d+$")


def erase_interior(tree):
    """Relabel interior symbols ``A@k`` to their exterior label ``A``."""
    m = _INTERIOR.match(tree.label)
    label = m.group(1) if m else tree.label
    return Tree(label, [erase_interior(c) if isinstance(c, Tree) else c for c in tree.children])


def grammar_stats(pcfg):
    exterior = {r.lhs for r in pcfg.rules if not r.lhs.interior}
    interior = {r.lhs for r in pcfg.rules if r.lhs.interior}
    stats = {
        "nodes": pcfg.node_count,
        "rules": len(pcfg.rules),
        "exterior_nonterminals": len(exterior),
        "interior_nonterminals": len(interior),
        "terminals": len(pcfg.terminals),
        "start": str(pcfg.start),
    }
    stats["rules_per_node"] = len(pcfg.rules) / pcfg.node_count if pcfg.node_count else None
    return stats


def reduce_corpus(trees, keep_root_interior=False):
    """Address, count and build in one call."""
    return build_pcfg(assign_addresses(trees), keep_root_interior=keep_root_interior)
