from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings

from vsdstruct.blocks import Label, make_annotation
from vsdstruct.tree import (
    DocumentTree,
    ParagraphNode,
    Relation,
    TreeError,
    boundary_vector,
    build_tree,
    relationship_matrix,
    tree_to_annotation,
)

from conftest import lca_relation_oracle, trees

R = Relation


def shape(tree: DocumentTree):
    def node(p):
        return (tuple(p.block_indices), tuple(node(c) for c in p.children))

    return tuple(node(p) for p in tree.top_level), tuple(sorted(tree.debris))


def P(blocks, *children):
    return ParagraphNode(list(blocks), list(children))


class TestBuildTree:
    def test_all_continuous(self):
        tree = build_tree(make_annotation("ccs"))
        assert shape(tree) == ((((0, 1, 2), ()),), ())
        assert tree.depth() == 1

    def test_figure_fragment_with_debris(self):
        ann = make_annotation("dcsdsosus", [None] * 7 + [3, None])
        tree = build_tree(ann)
        assert tree.debris == {5}
        expected = P([0], P([1, 2]), P([3], P([4]), P([6]), P([7])), P([8]))
        assert shape(tree) == shape(DocumentTree([expected], frozenset({5})))

    def test_up_opens_sibling_of_pointer_paragraph(self):
        tree = build_tree(make_annotation("ddus", [None, None, 0, None]))
        assert shape(tree) == shape(DocumentTree([P([0], P([1], P([2]))), P([3])]))

    def test_up_without_pointer(self):
        with pytest.raises(TreeError, match="UP without pointer"):
            build_tree(make_annotation("dus"))

    def test_pointer_not_open(self):
        with pytest.raises(TreeError, match="not an open ancestor"):
            # block 1's paragraph is closed once block 2 returns to the top level
            build_tree(make_annotation("ddudus", [None, None, 0, None, 1, None]))


class TestTreeToAnnotation:
    def test_single_paragraph(self):
        ann = tree_to_annotation(DocumentTree([P([0, 1, 2])]))
        assert ann.labels == (Label.CONTINUOUS, Label.CONTINUOUS, Label.CONSECUTIVE)

    def test_two_top_level(self):
        ann = tree_to_annotation(DocumentTree([P([0]), P([1])]))
        assert ann.labels == (Label.CONSECUTIVE, Label.CONSECUTIVE)

    def test_nested(self):
        ann = tree_to_annotation(DocumentTree([P([0], P([1]), P([2])), P([3])]))
        assert [lab.letter for lab in ann.labels] == list("dsus")
        assert ann.pointers == (None, None, 0, None)

    def test_non_increasing_preorder(self):
        with pytest.raises(TreeError):
            tree_to_annotation(DocumentTree([P([1]), P([0])]))

    def test_trailing_debris(self):
        ann = tree_to_annotation(DocumentTree([P([0, 1])], frozenset({2})))
        assert [lab.letter for lab in ann.labels] == list("cso")

    @settings(max_examples=300, deadline=None)
    @given(trees())
    def test_round_trip(self, tree):
        ann = tree_to_annotation(tree)
        rebuilt = build_tree(ann)
        assert shape(rebuilt) == shape(tree)
        assert tree_to_annotation(rebuilt) == ann

    @settings(max_examples=200, deadline=None)
    @given(trees())
    def test_pointers_target_down_blocks(self, tree):
        ann = tree_to_annotation(tree)
        for i, (lab, ptr) in enumerate(zip(ann.labels, ann.pointers)):
            assert (ptr is not None) == (lab == Label.UP)
            if ptr is not None:
                assert ptr < i and ann.labels[ptr] == Label.DOWN


class TestRelationshipMatrix:
    def test_small_tree(self):
        tree = DocumentTree([P([0], P([1]), P([2])), P([3])])
        m = relationship_matrix(tree)
        assert m[0, 1] == m[0, 2] == R.ANCESTOR_DESCENDANT
        assert m[1, 2] == R.SIBLING
        assert m[0, 3] == R.SIBLING
        assert m[1, 3] == m[2, 3] == R.NONE

    def test_single_paragraph(self):
        m = relationship_matrix(DocumentTree([P([0, 1, 2])]))
        assert (m == R.SAME_PARAGRAPH).all()

    def test_cousin_is_none(self):
        # grandchild 2 vs its uncle 3
        tree = DocumentTree([P([0], P([1], P([2])), P([3]))])
        m = relationship_matrix(tree)
        assert m[2, 3] == R.NONE
        assert m[1, 3] == R.SIBLING

    def test_debris_pairs_none(self):
        m = relationship_matrix(DocumentTree([P([0, 2])], frozenset({1})))
        assert m[0, 1] == m[1, 2] == R.NONE
        assert m[0, 2] == R.SAME_PARAGRAPH

    @settings(max_examples=200, deadline=None)
    @given(trees())
    def test_matches_lca_oracle(self, tree):
        n = tree.n_blocks
        m = relationship_matrix(tree)
        assert np.array_equal(m, lca_relation_oracle(tree, n))
        assert np.array_equal(m, m.T)
        for d in tree.debris:
            others = [j for j in range(n) if j != d]
            assert (m[d, others] == R.NONE).all()


class TestBoundaryVector:
    def test_same_paragraph(self):
        assert boundary_vector(make_annotation("cs")) == [False]

    def test_new_paragraph(self):
        assert boundary_vector(make_annotation("ss")) == [True]

    def test_debris_in_middle(self):
        assert boundary_vector(make_annotation("cos")) == [True, True]

    @settings(max_examples=100, deadline=None)
    @given(trees())
    def test_false_exactly_within_paragraph(self, tree):
        ann = tree_to_annotation(tree)
        m = relationship_matrix(tree)
        for i, b in enumerate(boundary_vector(ann)):
            joined = i not in tree.debris and i + 1 not in tree.debris and m[i, i + 1] == R.SAME_PARAGRAPH
            assert b == (not joined)


def test_tree_json_round_trip():
    tree = DocumentTree([P([0], P([1]))], frozenset({2}))
    obj = tree.to_json()
    assert obj == {"children": [{"blocks": [0], "children": [{"blocks": [1], "children": []}]}], "debris": [2]}
    assert shape(DocumentTree.from_json(obj)) == shape(tree)
