import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import WORKED, nary_trees
from dopcfg.errors import EmptyNode, IrreversibleScheme, ReservedLabel, UnbalancedParens
from dopcfg.treebank import (BinarizationScheme, Tree, binarize, collapse_unary, debinarize,
                             is_binarized, nodes, pos_terminals, read_penn, spans, strip_epsilon,
                             trim_functional_tags, write_penn, write_treebank, yield_of)

SCHEMES = list(BinarizationScheme)


def t(text):
    (tree,) = read_penn(text)
    return tree


def test_read_worked(worked_tree):
    assert worked_tree.label == "S"
    assert [c.label for c in worked_tree.children] == ["NP", "VP"]
    assert write_penn(worked_tree) == WORKED


def test_read_minimal():
    assert t("(A x)") == Tree("A", ["x"])
    assert write_penn(Tree("A", ["x"])) == "(A x)"


def test_read_several_with_odd_whitespace():
    trees = read_penn("(A x)\n\n  (B\n  (C y)\tz)")
    assert [write_penn(x) for x in trees] == ["(A x)", "(B (C y) z)"]


def test_penn_outer_wrapper_is_removed():
    assert t("( (S (NP x) (VP y)) )") == t("(S (NP x) (VP y))")


@pytest.mark.parametrize("text", ["(S (NP", "(S (NP x)", "(A x))"])
def test_unbalanced(text):
    with pytest.raises(UnbalancedParens):
        read_penn(text)


def test_unbalanced_reports_position():
    with pytest.raises(UnbalancedParens) as info:
        read_penn("(A x)\n(S (NP")
    assert info.value.position in (6, 9)


def test_empty_node():
    with pytest.raises(EmptyNode):
        read_penn("(S ())")
    with pytest.raises(EmptyNode):
        read_penn("(S)")


def test_reserved_labels_rejected():
    with pytest.raises(ReservedLabel):
        read_penn("(S (*_AB x y))")
    with pytest.raises(ReservedLabel):
        read_penn("(NP@4 x)")
    assert read_penn("(S (*_AB x y))", allow_reserved=True)[0].children[0].label == "*_AB"


def test_tree_rejects_no_children():
    with pytest.raises(EmptyNode):
        Tree("A", [])


def test_yield_of(worked_tree):
    assert yield_of(worked_tree) == ["PN", "PN", "V", "DET", "N"]
    assert yield_of(t("(A x)")) == ["x"]
    assert yield_of(t("(S (A x) (B x))")) == ["x", "x"]


def test_spans_are_one_based_preorder(worked_tree):
    assert list(spans(worked_tree)) == [(1, 5, "S"), (1, 2, "NP"), (3, 5, "VP"), (4, 5, "NP")]


def test_strip_epsilon():
    assert strip_epsilon(t("(S (NP -NONE-) (VP V))")) == t("(S (VP V))")
    assert strip_epsilon(t("(S (NP -NONE-))")) is None
    tree = t("(S (NP x) (VP y))")
    assert strip_epsilon(tree) == tree
    # Penn-style empty element with its own trace index
    assert strip_epsilon(t("(S (NP (-NONE- *T*-1)) (VP y))")) == t("(S (VP y))")


def test_collapse_unary():
    assert collapse_unary(t("(S (X (NP PN PN)) (VP V))")) == t("(S (NP PN PN) (VP V))")
    assert collapse_unary(t("(A x)")) == t("(A x)")
    assert collapse_unary(t("(X (Y (Z (A x))))")) == t("(A x)")


def test_pos_terminals_and_tag_trimming():
    raw = t("(S (NP-SBJ (DT the) (NN flight)) (VP (VBZ leaves)) (. .))")
    assert pos_terminals(raw) == t("(S (NP-SBJ DT NN) (VP VBZ) .)")
    assert trim_functional_tags(t("(S (NP-SBJ-1 x) (-NONE- y))")) == t("(S (NP x) (-NONE- y))")


def test_binarize_table():
    flat = t("(A B C D E)")
    assert write_penn(binarize(flat, "correct")) == "(A B (*_CDE C (*_DE D E)))"
    assert write_penn(binarize(flat, "continued")) == "(A B (A_* C (A_* D E)))"
    assert write_penn(binarize(flat, "simple")) == "(A B (A C (A D E)))"


def test_correct_scheme_multichar_labels_stay_unambiguous():
    a = binarize(t("(S NP VP PP)"), "correct")
    b = binarize(t("(S N PV PPP)"), "correct")
    assert a.children[1].label == "*_VP*PP"
    assert a.children[1].label != b.children[1].label


def test_correct_scheme_shares_suffix_symbols():
    # one fresh symbol per distinct remaining suffix
    a = binarize(t("(X A C D E)"), "correct")
    b = binarize(t("(Y B C D E)"), "correct")
    assert a.children[1] == b.children[1]


def test_debinarize_table():
    correct = read_penn("(A B (*_CDE C (*_DE D E)))", allow_reserved=True)[0]
    assert debinarize(correct, "correct") == t("(A B C D E)")
    cont = read_penn("(A B (A_* C (A_* D E)))", allow_reserved=True)[0]
    assert debinarize(cont, "continued") == t("(A B C D E)")
    with pytest.raises(IrreversibleScheme):
        debinarize(t("(A B (A C (A D E)))"), "simple")


def test_binary_trees_unchanged():
    tree = t("(S (NP x y) (VP z))")
    for scheme in SCHEMES:
        assert binarize(tree, scheme) == tree


def test_write_treebank_one_per_line():
    text = write_treebank([t("(A x)"), t("(B y z)")])
    assert text.splitlines() == ["(A x)", "(B y z)"]


@settings(max_examples=100)
@given(nary_trees())
def test_round_trip(tree):
    assert read_penn(write_penn(tree)) == [tree]


@given(nary_trees(), st.sampled_from(SCHEMES))
def test_binarize_arity_and_yield(tree, scheme):
    tree = collapse_unary(tree)
    out = binarize(tree, scheme)
    assert is_binarized(out)
    assert yield_of(out) == yield_of(tree)


@given(nary_trees(), st.sampled_from(SCHEMES))
def test_binarize_preserves_yield_with_unaries(tree, scheme):
    assert yield_of(binarize(tree, scheme)) == yield_of(tree)


@given(nary_trees(), st.sampled_from([BinarizationScheme.CORRECT, BinarizationScheme.CONTINUED]))
def test_debinarize_inverts_binarize(tree, scheme):
    tree = collapse_unary(tree)
    assert debinarize(binarize(tree, scheme), scheme) == tree


@given(nary_trees())
def test_collapse_unary_leaves_no_unary_chain(tree):
    out = collapse_unary(tree)
    for node in nodes(out):
        assert not (len(node.children) == 1 and isinstance(node.children[0], Tree))
    assert yield_of(out) == yield_of(tree)


@given(nary_trees())
def test_strip_epsilon_removes_every_empty(tree):
    out = strip_epsilon(tree)
    if out is None:
        assert set(yield_of(tree)) <= {"-NONE-"}
    else:
        assert yield_of(out) == [w for w in yield_of(tree) if w != "-NONE-"]
