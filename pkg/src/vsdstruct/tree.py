"""Paragraph trees and their correspondence with transition labels.

Top-level paragraphs hang under an implicit root, so two top-level paragraphs
are siblings of each other.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Iterator

import numpy as np

from .blocks import Label, TransitionAnnotation


class TreeError(ValueError):
    pass


@dataclass
class ParagraphNode:
    block_indices: list[int]
    children: list[ParagraphNode] = field(default_factory=list)

    def to_json(self) -> dict:
        return {"blocks": list(self.block_indices), "children": [c.to_json() for c in self.children]}

    @classmethod
    def from_json(cls, obj: dict) -> ParagraphNode:
        return cls([int(b) for b in obj["blocks"]], [cls.from_json(c) for c in obj.get("children", [])])


@dataclass
class DocumentTree:
    top_level: list[ParagraphNode]
    debris: frozenset[int] = frozenset()

    def __post_init__(self) -> None:
        self.debris = frozenset(self.debris)

    def walk(self) -> Iterator[tuple[ParagraphNode, ParagraphNode | None, int]]:
        """Preorder (node, parent, depth); parent is None at the top level."""
        stack = [(node, None, 0) for node in reversed(self.top_level)]
        while stack:
            node, parent, depth = stack.pop()
            yield node, parent, depth
            stack.extend((c, node, depth + 1) for c in reversed(node.children))

    def paragraphs(self) -> list[ParagraphNode]:
        return [node for node, _, _ in self.walk()]

    @property
    def n_blocks(self) -> int:
        return sum(len(p.block_indices) for p in self.paragraphs()) + len(self.debris)

    def depth(self) -> int:
        return max((d + 1 for _, _, d in self.walk()), default=0)

    def to_json(self) -> dict:
        return {"children": [p.to_json() for p in self.top_level], "debris": sorted(self.debris)}

    @classmethod
    def from_json(cls, obj: dict) -> DocumentTree:
        return cls([ParagraphNode.from_json(c) for c in obj["children"]], frozenset(obj.get("debris", ())))


class TreeBuilder:
    """Incremental stack machine shared by gold parsing, repairs and baselines."""

    def __init__(self) -> None:
        self.top_level: list[ParagraphNode] = []
        self.stack: list[ParagraphNode] = []
        self.debris: set[int] = set()
        self.paragraph_of: dict[int, ParagraphNode] = {}

    @property
    def current(self) -> ParagraphNode | None:
        return self.stack[-1] if self.stack else None

    def _open(self, block: int, parent_level: int) -> ParagraphNode:
        # parent_level = number of stack entries kept; the new node is their child
        del self.stack[parent_level:]
        node = ParagraphNode([block])
        (self.stack[-1].children if self.stack else self.top_level).append(node)
        self.stack.append(node)
        self.paragraph_of[block] = node
        return node

    def start(self, block: int) -> None:
        self._open(block, 0)

    def omit(self, block: int) -> None:
        self.debris.add(block)

    def continue_(self, block: int) -> None:
        self.stack[-1].block_indices.append(block)
        self.paragraph_of[block] = self.stack[-1]

    def sibling(self, block: int) -> None:
        self._open(block, len(self.stack) - 1)

    def child(self, block: int) -> None:
        self._open(block, len(self.stack))

    def open_level(self, target: int) -> int | None:
        """Stack position of the open ancestor paragraph containing ``target``.

        The current (innermost) paragraph is not an ancestor and never matches.
        """
        node = self.paragraph_of.get(target)
        for k in range(len(self.stack) - 1):
            if self.stack[k] is node:
                return k
        return None

    def up(self, block: int, target: int) -> None:
        k = self.open_level(target)
        if k is None:
            raise TreeError(f"block {block}: pointer target {target} not an open ancestor")
        self._open(block, k)

    def ancestor_down_block(self) -> int | None:
        """Last block of the parent of the current paragraph, if any."""
        if len(self.stack) < 2:
            return None
        return self.stack[-2].block_indices[-1]

    def tree(self) -> DocumentTree:
        return DocumentTree(self.top_level, frozenset(self.debris))


def build_tree(ann: TransitionAnnotation) -> DocumentTree:
    builder = TreeBuilder()
    prev: int | None = None
    for i, label in enumerate(ann.labels):
        if label == Label.OMITTED:
            builder.omit(i)
            continue
        if prev is None:
            builder.start(i)
        else:
            move = ann.labels[prev]
            if move == Label.CONTINUOUS:
                builder.continue_(i)
            elif move == Label.CONSECUTIVE:
                builder.sibling(i)
            elif move == Label.DOWN:
                builder.child(i)
            else:
                target = ann.pointers[prev]
                if target is None:
                    raise TreeError(f"block {prev}: UP without pointer")
                builder.up(i, target)
        prev = i
    return builder.tree()


def tree_to_annotation(tree: DocumentTree) -> TransitionAnnotation:
    parent: dict[int, ParagraphNode | None] = {}
    owner: list[tuple[int, ParagraphNode]] = []
    for node, par, _ in tree.walk():
        if not node.block_indices:
            raise TreeError("empty paragraph")
        parent[id(node)] = par
        owner.extend((b, node) for b in node.block_indices)

    n = len(owner) + len(tree.debris)
    seen = sorted([b for b, _ in owner] + list(tree.debris))
    if seen != list(range(n)):
        raise TreeError("tree blocks and debris must cover 0..n-1 exactly once")
    for (a, _), (b, _) in zip(owner, owner[1:]):
        if b <= a:
            raise TreeError(f"preorder block order is non-increasing at {a} -> {b}")

    labels: list[Label] = [Label.OMITTED] * n
    pointers: list[int | None] = [None] * n
    for (a, pa), (b, pb) in zip(owner, owner[1:]):
        if pa is pb:
            labels[a] = Label.CONTINUOUS
        elif parent[id(pb)] is pa:
            labels[a] = Label.DOWN
        elif parent[id(pb)] is parent[id(pa)]:
            labels[a] = Label.CONSECUTIVE
        else:
            node = pa
            while parent[id(node)] is not parent[id(pb)]:
                node = parent[id(node)]
                if node is None:
                    raise TreeError(f"block {b} is not reachable from block {a}")
            labels[a] = Label.UP
            pointers[a] = node.block_indices[-1]
    if owner:
        labels[owner[-1][0]] = Label.CONSECUTIVE
    return TransitionAnnotation(tuple(labels), tuple(pointers))


class Relation(enum.IntEnum):
    NONE = 0
    SAME_PARAGRAPH = 1
    SIBLING = 2
    ANCESTOR_DESCENDANT = 3


def relationship_matrix(tree: DocumentTree, n_blocks: int | None = None) -> np.ndarray:
    """Symmetric n x n matrix of :class:`Relation` codes (int8)."""
    n = tree.n_blocks if n_blocks is None else n_blocks
    mat = np.zeros((n, n), dtype=np.int8)
    children_of_root = tree.top_level

    def subtree_blocks(node: ParagraphNode) -> list[int]:
        out = list(node.block_indices)
        for c in node.children:
            out.extend(subtree_blocks(c))
        return out

    groups = [children_of_root] + [node.children for node in tree.paragraphs()]
    for siblings in groups:
        for x in range(len(siblings)):
            for y in range(x + 1, len(siblings)):
                a = np.array(siblings[x].block_indices)
                b = np.array(siblings[y].block_indices)
                mat[np.ix_(a, b)] = Relation.SIBLING
                mat[np.ix_(b, a)] = Relation.SIBLING

    for node in tree.paragraphs():
        own = np.array(node.block_indices)
        mat[np.ix_(own, own)] = Relation.SAME_PARAGRAPH
        below = [b for c in node.children for b in subtree_blocks(c)]
        if below:
            desc = np.array(below)
            mat[np.ix_(own, desc)] = Relation.ANCESTOR_DESCENDANT
            mat[np.ix_(desc, own)] = Relation.ANCESTOR_DESCENDANT

    idx = np.arange(n)
    mat[idx, idx] = Relation.SAME_PARAGRAPH
    return mat


def boundary_vector(ann: TransitionAnnotation) -> list[bool]:
    """Entry i is True when blocks i and i+1 are not joined in one paragraph."""
    labs = ann.labels
    return [
        not (labs[i] == Label.CONTINUOUS and labs[i + 1] != Label.OMITTED)
        for i in range(len(labs) - 1)
    ]
