import random

import pytest
from hypothesis import strategies as st

from dopcfg.stsg_oracle import ExplicitStsg
from dopcfg.treebank import Tree, nodes, read_penn

WORKED = "(S (NP PN PN) (VP V (NP DET N)))"

# weights 3, 2, 2, 2 over 9 for S; the bare B is a substitution site
TOY_STSG = """\
# start: S
3 (S (A x) (C x))
2 (S (A x) (D x))
2 (S (E x) (B x))
2 (S (E x) B)
1 (B x)
"""

LABELS = ("S", "A", "B", "C")
TERMINALS = ("a", "b", "c", "d")


@pytest.fixture
def worked_tree():
    return read_penn(WORKED)[0]


@pytest.fixture
def toy_stsg():
    return ExplicitStsg.from_text(TOY_STSG)


def random_binary_tree(rng, depth=3, labels=LABELS, terminals=TERMINALS, root=None, recursion=0.0):
    """A tree obeying the reduction's arity constraint (binary or preterminal).

    Child labels are drawn from later in ``labels`` than the parent's, so
    the corpus language is finite; ``recursion`` is the chance that a
    child may take any label instead.
    """
    label = root or rng.choice(labels)
    rank = labels.index(label) if label in labels else 0
    if depth <= 1 or rank == len(labels) - 1:
        kind = rng.choice(["pre", "tt"])
    else:
        kind = rng.choice(["pre", "tt", "nt", "tn", "nn", "nn"])

    def term():
        return rng.choice(terminals)

    def sub():
        pool = labels if rng.random() < recursion else labels[rank + 1:]
        return random_binary_tree(rng, depth - 1, labels, terminals, rng.choice(pool), recursion)

    if kind == "pre":
        return Tree(label, [term()])
    if kind == "tt":
        return Tree(label, [term(), term()])
    if kind == "nt":
        return Tree(label, [sub(), term()])
    if kind == "tn":
        return Tree(label, [term(), sub()])
    return Tree(label, [sub(), sub()])


def random_corpus(rng, max_nodes=50, max_trees=4, depth=3, recursion=0.0):
    """1..max_trees trees with at most max_nodes nodes; roots are S or A, so TOP gets exercised."""
    trees, total = [], 0
    for _ in range(rng.randint(1, max_trees)):
        t = random_binary_tree(rng, depth, root=rng.choice(["S", "S", "A"]), recursion=recursion)
        size = sum(1 for _ in nodes(t))
        if total + size > max_nodes:
            break
        trees.append(t)
        total += size
    if not trees:
        trees.append(Tree("S", ["a"]))
    return trees


@st.composite
def binary_trees(draw, depth=3):
    return random_binary_tree(random.Random(draw(st.integers(0, 2**32 - 1))), depth)


@st.composite
def corpora(draw, max_nodes=30, max_trees=3, depth=3):
    return random_corpus(random.Random(draw(st.integers(0, 2**32 - 1))), max_nodes, max_trees, depth)


_LABEL = st.sampled_from(["S", "NP", "VP", "PP", "A", "B-2", "X"])
_TERM = st.sampled_from(["x", "y", "DT", "NN", ".", "-NONE-"])


def nary_trees(max_leaves=12):
    """n-ary trees with arbitrary fan-out, unary chains and preterminals."""
    leaf = st.builds(lambda l, w: Tree(l, [w]), _LABEL, _TERM)
    return st.recursive(
        leaf,
        lambda kids: st.builds(lambda l, cs: Tree(l, cs), _LABEL,
                               st.lists(st.one_of(kids, _TERM), min_size=1, max_size=4)),
        max_leaves=max_leaves,
    )


# acceptance criteria report one line each at the end of the session
ACCEPTANCE = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(ACCEPTANCE):
        ok, text = ACCEPTANCE[number]
        terminalreporter.write_line(f"[{'PASS' if ok else 'FAIL'}] {number}. {text}")
