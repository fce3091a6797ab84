"""Synthetic contract-like documents with gold structure.

A paragraph tree is sampled first and then rendered to blocks, so the gold
annotation comes straight from the tree. Page breaks insert running headers
and page-number footers, which are the debris blocks.
"""

from __future__ import annotations

import textwrap
from dataclasses import dataclass, field

import numpy as np

from .blocks import DOC_TYPES, TEXT_DOC_TYPES, Document, TextBlock, TransitionAnnotation, ingest_plaintext
from .tree import DocumentTree, ParagraphNode, tree_to_annotation

STYLES = ("indented", "flush")

# page geometry for PDF-like documents, in points
LEFT, RIGHT, TOP, BOTTOM = 72.0, 540.0, 720.0, 72.0
CHAR_W, LINE_H = 6.0, 10.0
LINE_GAP, PARA_GAP = 3.0, 14.0
HEADER_Y, FOOTER_Y = 750.0, 40.0
TEXT_WIDTH = 72

_WORDS = (
    "agreement party parties shall may not any all such other provided that "
    "this the of to in by for with under pursuant notice written consent term "
    "termination obligation obligations right rights license fee fees payment "
    "services company customer supplier confidential information law state "
    "court breach remedy liability damages indemnify warrant represent covenant "
    "effective date period days prior subject hereto hereunder thereof herein "
    "each either respective successors assigns limited including without "
    "reasonable efforts material extent applicable deliver performance"
).split()
_JA_CHARS = "本契約当事者はにおいて甲乙の義務を負うものとする権利通知書面同意期間解除秘密情報損害賠償責任"
_TITLES = ("SERVICES AGREEMENT", "LICENSE AGREEMENT", "SUPPLY AGREEMENT", "CONSULTING AGREEMENT",
           "NON-DISCLOSURE AGREEMENT", "MASTER AGREEMENT")
_HEADERS = ("CONFIDENTIAL", "EXECUTION VERSION", "Confidential Treatment Requested")
_FOOTERS = ("Page {n} of {m}", "{n}", "- {n} -")


@dataclass(frozen=True)
class SynthSpec:
    n_docs: int = 40
    doc_type: str = "contract-pdf-en"
    max_depth: int = 3
    styles: tuple[str, ...] = STYLES
    indent_step: float = 24.0  # points; plain text uses 4 columns
    debris_rate: float = 0.05
    p_children: float = 0.45
    p_trailing_text: float = 0.25
    sections: tuple[int, int] = (4, 8)
    children: tuple[int, int] = (2, 4)
    lines_per_paragraph: tuple[int, int] = (1, 4)

    def __post_init__(self) -> None:
        if self.doc_type not in DOC_TYPES:
            raise ValueError(f"unknown doc_type {self.doc_type!r}")
        if self.max_depth < 1:
            raise ValueError("max_depth must be at least 1")
        for name in ("debris_rate", "p_children", "p_trailing_text"):
            if not 0.0 <= getattr(self, name) <= 1.0:
                raise ValueError(f"{name} must be within [0, 1]")
        if self.debris_rate >= 1.0:
            raise ValueError("debris_rate must be below 1")
        unknown = set(self.styles) - set(STYLES)
        if not self.styles or unknown:
            raise ValueError(f"styles must be drawn from {STYLES}")
        for lo, hi in (self.sections, self.children, self.lines_per_paragraph):
            if not 1 <= lo <= hi:
                raise ValueError("ranges must satisfy 1 <= low <= high")


@dataclass
class _Para:
    kind: str  # title, text, item, signature
    text: str
    depth: int
    children: list[_Para] = field(default_factory=list)
    label: str = ""


def _roman(n: int) -> str:
    out = ""
    for v, s in ((10, "x"), (9, "ix"), (5, "v"), (4, "iv"), (1, "i")):
        while n >= v:
            out += s
            n -= v
    return out


def _label(style: str, language: str, path: list[int]) -> str:
    depth, n = len(path) - 1, path[-1]
    if language == "ja":
        return (f"第{n}条", f"（{n}）", chr(ord("①") + n - 1), f"（{n}）")[min(depth, 3)]
    if style == "indented":
        return (f"{n}.", f"({chr(96 + n)})", f"({_roman(n)})", f"({chr(64 + n)})")[min(depth, 3)]
    if depth < 3:
        return ".".join(str(p) for p in path) + ("." if depth == 0 else "")
    return f"({chr(96 + n)})"


class _Writer:
    def __init__(self, rng: np.random.Generator, language: str):
        self.rng = rng
        self.language = language

    def sentence(self, n_words: int) -> str:
        if self.language == "ja":
            return "".join(self.rng.choice(list(_JA_CHARS), n_words * 2)) + "。"
        words = [str(w) for w in self.rng.choice(_WORDS, n_words)]
        words[0] = words[0].capitalize()
        return " ".join(words)

    def body(self, n_lines: int, width: int, ending: str) -> str:
        if self.language == "ja":
            return self.sentence(max(3, n_lines * width // 3))
        n_words = max(4, int(n_lines * width / 7.2) - int(self.rng.integers(0, 6)))
        return self.sentence(n_words) + ending


def _sample_tree(spec: SynthSpec, rng: np.random.Generator, style: str, language: str) -> list[_Para]:
    w = _Writer(rng, language)
    lines = lambda: int(rng.integers(spec.lines_per_paragraph[0], spec.lines_per_paragraph[1] + 1))
    width = 70

    def items(depth: int, path: list[int]) -> list[_Para]:
        out = []
        count = int(rng.integers(spec.children[0], spec.children[1] + 1)) if depth else int(
            rng.integers(spec.sections[0], spec.sections[1] + 1)
        )
        for k in range(1, count + 1):
            p = path + [k]
            has_kids = depth + 1 < spec.max_depth and rng.random() < spec.p_children
            ending = ":" if has_kids else (";" if depth and k < count else ".")
            node = _Para("item", w.body(lines(), width, ending), depth, label=_label(style, language, p))
            if has_kids:
                node.children = items(depth + 1, p)
                if rng.random() < spec.p_trailing_text:
                    node.children.append(_Para("text", w.body(lines(), width, "."), depth))
            out.append(node)
        return out

    paras = [
        _Para("title", str(rng.choice(_TITLES)) if language == "en" else "業務委託契約書", 0),
        _Para("text", w.body(lines(), width, "."), 0),
    ]
    if language == "en":
        for _ in range(int(rng.integers(1, 4))):
            paras.append(_Para("text", "WHEREAS, " + w.body(lines(), width, ";").lower(), 0))
        paras.append(_Para("text", "NOW, THEREFORE, the parties agree as follows:", 0))
    paras.extend(items(0, []))
    paras.append(_Para("text", w.body(lines(), width, "."), 0))
    for field_name in ("By:", "Name:", "Title:"):
        paras.append(_Para("signature", f"{field_name} ________________", 0))
    return paras


def _flatten(paras: list[_Para], spec: SynthSpec, style: str, text_mode: bool, language: str):
    """Yield (para_id, parent_id, lines) with lines as (indent_units, text, is_last, centered)."""
    out = []

    def visit(p: _Para, parent: int | None, depth: int) -> None:
        pid = len(out)
        indent = depth if style == "indented" or language == "ja" else 0
        if p.kind == "item" and style == "indented" and depth == 0:
            indent = 0
        text = f"{p.label} {p.text}" if p.label else p.text
        if language == "ja" and p.label:
            text = f"{p.label}{p.text}"
        step_chars = 4 if text_mode else int(spec.indent_step / CHAR_W)
        width = (TEXT_WIDTH if text_mode else int((RIGHT - LEFT) / CHAR_W)) - indent * step_chars
        if language == "ja":
            width = width // 2
            wrapped = [text[i : i + width] for i in range(0, len(text), width)]
        else:
            wrapped = textwrap.wrap(text, width) or [text]
        centered = p.kind == "title"
        lines = [(indent, line, k == len(wrapped) - 1, centered) for k, line in enumerate(wrapped)]
        out.append((pid, parent, lines))
        for c in p.children:
            visit(c, pid, depth + 1)

    for p in paras:
        visit(p, None, 0)
    return out


def _page_breaks(rng: np.random.Generator, n_lines: int, rate: float, debris_per_page: float) -> set[int]:
    """Line positions that start a new page, sized so debris makes up ``rate`` of all blocks."""
    if rate <= 0 or n_lines < 2:
        return set()
    expected = rate * n_lines / ((1 - rate) * debris_per_page)
    pages = int(expected) + int(rng.random() < expected - int(expected))
    pages = min(max(pages, 1), n_lines)
    return {int(k) for k in rng.choice(np.arange(1, n_lines), pages - 1, replace=False)}


def synth_document(spec: SynthSpec, rng: np.random.Generator, doc_id: str, style: str) -> tuple[Document, TransitionAnnotation, DocumentTree]:
    language = "ja" if spec.doc_type.endswith("-ja") else "en"
    text_mode = spec.doc_type in TEXT_DOC_TYPES
    paras = _sample_tree(spec, rng, style, language)
    flat = _flatten(paras, spec, style, text_mode, language)
    has_header = not text_mode and rng.random() < 0.5
    debris_per_page = 2.0 if has_header else 1.0
    breaks = _page_breaks(rng, sum(len(lines) for _, _, lines in flat), spec.debris_rate, debris_per_page)
    footer_fmt = str(rng.choice(_FOOTERS[1:] if text_mode else _FOOTERS))
    header_text = str(rng.choice(_HEADERS))

    # assign lines to pages
    pages: list[list[tuple[int, int, str, bool, bool, float]]] = [[]]
    y = TOP
    position = 0
    for pid, _, lines in flat:
        for k, (indent, line, is_last, centered) in enumerate(lines):
            gap = (PARA_GAP if k == 0 else LINE_GAP) if pages[-1] else 0.0
            forced = not text_mode and y - gap - LINE_H < BOTTOM
            position += 1
            if pages[-1] and (forced or position - 1 in breaks):
                pages.append([])
                y, gap = TOP, 0.0
            y -= gap
            pages[-1].append((pid, indent, line, is_last, centered, y))
            y -= LINE_H
    n_pages = len(pages)
    debris_on = spec.debris_rate > 0

    # emit blocks in reading order
    para_blocks: dict[int, list[int]] = {pid: [] for pid, _, _ in flat}
    debris: list[int] = []
    records: list[tuple[str, int, float, float, float, float]] = []  # text, page, bbox
    text_lines: list[str] = []
    step = 4 if text_mode else spec.indent_step

    def emit(text: str, page: int, x0: float, y1: float, x1: float) -> int:
        records.append((text, page, x0, y1 - LINE_H, x1, y1))
        return len(records) - 1

    for pno, page in enumerate(pages, start=1):
        if debris_on and has_header:
            w = len(header_text) * CHAR_W
            debris.append(emit(header_text, pno, RIGHT - w, HEADER_Y + LINE_H, RIGHT))
        for pid, indent, line, is_last, centered, y1 in page:
            if text_mode:
                col = (TEXT_WIDTH - len(line)) // 2 if centered else indent * step
                para_blocks[pid].append(emit(line, 1, col, 0, col + len(line)))
                if text_lines and len(para_blocks[pid]) == 1:
                    text_lines.append("")
                text_lines.append(" " * col + line)
                continue
            width = len(line) * CHAR_W * (2 if language == "ja" else 1)
            x0 = LEFT + indent * step
            if centered:
                x0 = (LEFT + RIGHT) / 2 - width / 2
            x1 = RIGHT if not is_last and not centered else x0 + width
            para_blocks[pid].append(emit(line, pno, x0, y1, x1))
        if debris_on:
            label = footer_fmt.format(n=pno, m=n_pages)
            if text_mode:
                text_lines.extend(["", " " * ((TEXT_WIDTH - len(label)) // 2) + label, ""])
                debris.append(emit(label, 1, 0, 0, 0))
            else:
                w = len(label) * CHAR_W
                debris.append(emit(label, pno, (LEFT + RIGHT) / 2 - w / 2, FOOTER_Y + LINE_H, (LEFT + RIGHT) / 2 + w / 2))

    if text_mode:
        doc = ingest_plaintext("\n".join(text_lines) + "\n", doc_id, spec.doc_type)
        if len(doc) != len(records):
            raise AssertionError("plain-text rendering lost blocks")
    else:
        blocks = tuple(
            TextBlock(i, text, page, (x0, y0, x1, y1)) for i, (text, page, x0, y0, x1, y1) in enumerate(records)
        )
        doc = Document(doc_id, spec.doc_type, blocks)

    nodes = {pid: ParagraphNode(list(para_blocks[pid])) for pid, _, _ in flat}
    top: list[ParagraphNode] = []
    for pid, parent, _ in flat:
        (top if parent is None else nodes[parent].children).append(nodes[pid])
    tree = DocumentTree(top, frozenset(debris))
    return doc, tree_to_annotation(tree), tree


def synth(spec: SynthSpec, seed: int = 0) -> list[tuple[Document, TransitionAnnotation]]:
    """Corpus of documents; rendering styles alternate across documents."""
    return [(doc, ann) for doc, ann, _ in synth_with_trees(spec, seed)]


def synth_with_trees(spec: SynthSpec, seed: int = 0) -> list[tuple[Document, TransitionAnnotation, DocumentTree]]:
    out = []
    for k in range(spec.n_docs):
        rng = np.random.default_rng([seed, k])
        style = spec.styles[k % len(spec.styles)]
        out.append(synth_document(spec, rng, f"synth-{seed}-{k:04d}", style))
    return out
