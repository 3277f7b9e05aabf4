"""Bracketed treebank trees: reading, writing, cleaning and binarization.

Trees are immutable.  A node has a label and a non-empty tuple of
children; a child is either another ``Tree`` or a terminal string.
Terminals here are normally part-of-speech tags, since the parser works
on tag sequences rather than words.

Three right-branching binarization schemes are offered.  For a node
``(A B C D E)``::

    CORRECT    (A B (*_CDE C (*_DE D E)))
    CONTINUED  (A B (A_* C (A_* D E)))
    SIMPLE     (A B (A C (A D E)))

CORRECT adds one symbol per right-hand-side suffix and introduces no
overgeneration; CONTINUED adds one symbol per original label; SIMPLE
reuses the label and cannot be undone.
"""
import enum
import re

from .errors import EmptyNode, IrreversibleScheme, ReservedLabel, TreebankError, UnbalancedParens

RESERVED_CHARS = "*@"
EMPTY_MARKERS = frozenset(["-NONE-"])
UNKNOWN_LABEL = "X?"


class Tree:
    """An n-ary labelled tree node."""

    __slots__ = ("label", "children", "_hash")

    def __init__(self, label, children):
        children = tuple(children)
        if not children:
            raise EmptyNode(f"node {label!r} has no children")
        self.label = label
        self.children = children
        self._hash = None

    def __eq__(self, other):
        if self is other:
            return True
        if not isinstance(other, Tree):
            return NotImplemented
        return self.label == other.label and self.children == other.children

    def __hash__(self):
        if self._hash is None:
            self._hash = hash((self.label, self.children))
        return self._hash

    def __str__(self):
        return write_penn(self)

    def __repr__(self):
        return f"Tree({write_penn(self)!r})"

    def is_preterminal(self):
        return len(self.children) == 1 and not isinstance(self.children[0], Tree)


class BinarizationScheme(enum.Enum):
    CORRECT = "correct"
    CONTINUED = "continued"
    SIMPLE = "simple"

    @classmethod
    def parse(cls, name):
        if isinstance(name, cls):
            return name
        return cls(name.lower())


_TOKEN = re.compile(r"\(|\)|[^()\s]+")


def read_penn(text, allow_reserved=False):
    """Parse every top-level bracketed tree in ``text`` (a string or file).

    A Penn-style outer wrapper with an empty label, ``( (S ...) )``, is
    removed.  Labels may not contain ``*`` or ``@`` unless
    ``allow_reserved`` is set; those characters mark symbols introduced
    by binarization and by the grammar reduction.
    """
    if hasattr(text, "read"):
        text = text.read()
    trees = []
    # each frame: [label, children, offset of its open paren]
    stack = []
    expect_label = False
    for m in _TOKEN.finditer(text):
        tok, pos = m.group(), m.start()
        if tok == "(":
            if expect_label:
                # "( (" : the outer node has no label
                stack[-1][0] = ""
            stack.append([None, [], pos])
            expect_label = True
        elif tok == ")":
            if not stack:
                raise UnbalancedParens("unexpected ')'", pos)
            label, children, start = stack.pop()
            expect_label = False
            if label is None or not children:
                raise EmptyNode("empty node", start)
            if label == "":
                if len(children) != 1 or not isinstance(children[0], Tree):
                    raise TreebankError("unlabelled node", start)
                node = children[0]
            else:
                node = Tree(label, children)
            if stack:
                stack[-1][1].append(node)
            else:
                trees.append(node)
        else:
            if not stack:
                raise TreebankError(f"token {tok!r} outside brackets", pos)
            if expect_label:
                if not allow_reserved and any(c in tok for c in RESERVED_CHARS):
                    raise ReservedLabel(f"label {tok!r} uses a reserved character", pos)
                stack[-1][0] = tok
                expect_label = False
            else:
                stack[-1][1].append(tok)
    if stack:
        raise UnbalancedParens("unclosed '('", stack[-1][2])
    return trees


def write_penn(tree):
    """Single-line bracketed form of ``tree``."""
    parts = []

    def visit(node):
        parts.append("(")
        parts.append(node.label)
        for child in node.children:
            parts.append(" ")
            if isinstance(child, Tree):
                visit(child)
            else:
                parts.append(str(child))
        parts.append(")")

    visit(tree)
    return "".join(parts)


def write_treebank(trees):
    return "".join(write_penn(t) + "\n" for t in trees)


def nodes(tree):
    """Nonterminal nodes of ``tree`` in preorder."""
    todo = [tree]
    while todo:
        node = todo.pop()
        yield node
        todo.extend(reversed([c for c in node.children if isinstance(c, Tree)]))


def yield_of(tree):
    out = []

    def visit(node):
        for child in node.children:
            if isinstance(child, Tree):
                visit(child)
            else:
                out.append(child)

    visit(tree)
    return out


def spans(tree):
    """``(start, end, label)`` for every nonterminal node, 1-based and inclusive."""
    out = []

    def visit(node, start):
        pos = start
        mine = len(out)
        out.append(None)
        for child in node.children:
            if isinstance(child, Tree):
                pos = visit(child, pos)
            else:
                pos += 1
        out[mine] = (start, pos - 1, node.label)
        return pos

    visit(tree, 1)
    return out


def strip_epsilon(tree, empty=EMPTY_MARKERS):
    """Delete empty terminals and every node left without children.

    A terminal is empty if its symbol is in ``empty``; a node whose label
    is in ``empty`` (Penn's ``(-NONE- *T*-1)``) is removed with its
    contents.  Returns None when nothing is left.
    """
    if tree.label in empty:
        return None
    kept = []
    for child in tree.children:
        if isinstance(child, Tree):
            child = strip_epsilon(child, empty)
            if child is not None:
                kept.append(child)
        elif child not in empty:
            kept.append(child)
    if not kept:
        return None
    return Tree(tree.label, kept)


def collapse_unary(tree):
    """Remove unary nonterminal-over-nonterminal nodes; the lower label wins."""
    children = [collapse_unary(c) if isinstance(c, Tree) else c for c in tree.children]
    if len(children) == 1 and isinstance(children[0], Tree):
        return children[0]
    return Tree(tree.label, children)


def pos_terminals(tree):
    """Replace each preterminal ``(TAG word)`` by the terminal ``TAG``.

    For raw corpora that carry words under their tags.  A tree that is a
    single preterminal is returned unchanged.
    """
    if tree.is_preterminal():
        return tree

    def visit(node):
        out = []
        for child in node.children:
            if isinstance(child, Tree):
                out.append(child.label if child.is_preterminal() else visit(child))
            else:
                out.append(child)
        return Tree(node.label, out)

    return visit(tree)


_FUNCTION_TAG = re.compile(r"^([^-=]+)[-=].*$")


def trim_functional_tags(tree):
    """``NP-SBJ-1`` -> ``NP``; labels starting with '-' (``-NONE-``) are kept."""

    def trim(label):
        m = _FUNCTION_TAG.match(label)
        return m.group(1) if m else label

    return Tree(trim(tree.label),
                [trim_functional_tags(c) if isinstance(c, Tree) else c for c in tree.children])


def _symbol(child):
    return child.label if isinstance(child, Tree) else child


def _suffix_label(children):
    names = [_symbol(c) for c in children]
    # single-character names join unambiguously; longer ones need a separator
    if all(len(n) == 1 for n in names):
        return "*_" + "".join(names)
    return "*_" + "*".join(names)


def binarize(tree, scheme=BinarizationScheme.CORRECT):
    """Right-branching binarization of every node with more than two children.

    Unary nonterminal chains are left alone, so callers should run
    ``collapse_unary`` first unless they want them kept.
    """
    scheme = BinarizationScheme.parse(scheme)
    children = [binarize(c, scheme) if isinstance(c, Tree) else c for c in tree.children]
    label = tree.label
    if len(children) <= 2:
        return Tree(label, children)

    def cascade(rest):
        if len(rest) == 2:
            node_children = rest
        else:
            node_children = [rest[0], cascade(rest[1:])]
        if scheme is BinarizationScheme.CORRECT:
            return Tree(_suffix_label(rest), node_children)
        if scheme is BinarizationScheme.CONTINUED:
            return Tree(label + "_*", node_children)
        return Tree(label, node_children)

    return Tree(label, [children[0], cascade(children[1:])])


def is_introduced(label):
    """True for symbols created by the CORRECT or CONTINUED schemes."""
    return label.startswith("*_") or label.endswith("_*")


def splice_introduced(tree):
    """Flatten every node whose label was introduced by binarization."""
    out = []
    for child in tree.children:
        if isinstance(child, Tree):
            child = splice_introduced(child)
            if is_introduced(child.label):
                out.extend(child.children)
                continue
        out.append(child)
    return Tree(tree.label, out)


def debinarize(tree, scheme=BinarizationScheme.CORRECT):
    scheme = BinarizationScheme.parse(scheme)
    if scheme is BinarizationScheme.SIMPLE:
        raise IrreversibleScheme("the simple scheme reuses labels; n-ary structure is lost")
    return splice_introduced(tree)


def is_binarized(tree):
    """Every node has two children or exactly one terminal child."""
    for node in nodes(tree):
        if len(node.children) == 2:
            continue
        if not node.is_preterminal():
            return False
    return True
