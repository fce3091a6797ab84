from __future__ import annotations

import numpy as np
import pytest
from hypothesis import strategies as st

from vsdstruct.blocks import Document, TextBlock
from vsdstruct.tree import DocumentTree, ParagraphNode, Relation

ACTIONS = ("continue", "sibling", "child", "up", "debris")


def tree_from_actions(actions: list[tuple[str, int]], max_depth: int = 5) -> DocumentTree:
    """Build a tree block by block. ``up`` pops ``k`` levels (at least one)."""
    top: list[ParagraphNode] = []
    stack: list[ParagraphNode] = []
    debris: set[int] = set()
    for i, (act, k) in enumerate(actions):
        if act == "debris":
            debris.add(i)
            continue
        if not stack:
            node = ParagraphNode([i])
            top.append(node)
            stack.append(node)
            continue
        if act == "continue":
            stack[-1].block_indices.append(i)
            continue
        if act == "child" and len(stack) < max_depth:
            keep = len(stack)
        elif act == "up" and len(stack) > 1:
            keep = max(len(stack) - 1 - k, 0)
        else:
            keep = len(stack) - 1
        del stack[keep:]
        node = ParagraphNode([i])
        (stack[-1].children if stack else top).append(node)
        stack.append(node)
    if not top:
        # every block drew debris: keep the last one as the only paragraph
        last = len(actions) - 1
        debris.discard(last)
        top.append(ParagraphNode([last]))
    return DocumentTree(top, frozenset(debris))


def random_tree(rng: np.random.Generator, max_blocks: int = 50, max_depth: int = 5, debris_rate: float = 0.15) -> DocumentTree:
    n = int(rng.integers(1, max_blocks + 1))
    actions = []
    for _ in range(n):
        if rng.random() < debris_rate:
            actions.append(("debris", 0))
        else:
            actions.append((str(rng.choice(ACTIONS[:4])), int(rng.integers(0, 4))))
    return tree_from_actions(actions, max_depth)


@st.composite
def trees(draw, max_blocks: int = 30, max_depth: int = 5):
    n = draw(st.integers(1, max_blocks))
    actions = draw(
        st.lists(st.tuples(st.sampled_from(ACTIONS), st.integers(0, 3)), min_size=n, max_size=n)
    )
    return tree_from_actions(actions, max_depth)


def lca_relation_oracle(tree: DocumentTree, n: int) -> np.ndarray:
    """Pairwise relations from explicit parent pointers and ancestor paths."""
    parent: dict[int, int | None] = {}
    para_of: dict[int, int] = {}
    for node, par, _ in tree.walk():
        parent[id(node)] = id(par) if par is not None else None
        for b in node.block_indices:
            para_of[b] = id(node)

    def path(pid: int) -> list[int | None]:
        out = [pid]
        while out[-1] is not None:
            out.append(parent[out[-1]])
        return out  # ends with None, the virtual root

    mat = np.zeros((n, n), dtype=np.int8)
    for a in range(n):
        for b in range(n):
            if a == b:
                mat[a, b] = Relation.SAME_PARAGRAPH
                continue
            if a not in para_of or b not in para_of:
                continue
            pa, pb = para_of[a], para_of[b]
            path_a, path_b = path(pa), path(pb)
            lca = next(x for x in path_a if x in path_b)
            if pa == pb:
                mat[a, b] = Relation.SAME_PARAGRAPH
            elif lca in (pa, pb):
                mat[a, b] = Relation.ANCESTOR_DESCENDANT
            elif parent[pa] == parent[pb]:
                mat[a, b] = Relation.SIBLING
    return mat


def make_doc(rows, doc_type: str = "contract-pdf-en", doc_id: str = "d") -> Document:
    """rows: (text, page, x0, y0, x1, y1) tuples."""
    blocks = tuple(TextBlock(i, r[0], r[1], tuple(float(v) for v in r[2:6])) for i, r in enumerate(rows))
    return Document(doc_id, doc_type, blocks)


def lines_doc(texts, x0s=None, doc_type: str = "contract-pdf-en", gap: float = 3.0, line_h: float = 10.0) -> Document:
    """One block per text on a single page, stacked downwards."""
    x0s = x0s or [72.0] * len(texts)
    rows, y = [], 720.0
    for text, x0 in zip(texts, x0s):
        rows.append((text, 1, x0, y - line_h, x0 + 6 * max(len(text), 1), y))
        y -= line_h + gap
    return make_doc(rows, doc_type)


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(12345)


# one line per acceptance criterion, printed after the run
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
