"""Feature registry and feature-matrix assembly.

Every feature is a function of one to three blocks drawn from a four-block
context ``(s1, s2, s3, s4)`` around the transition being classified: s2 is
the block whose outgoing label we predict and s3 the block it transitions to.
A feature declares the slot groups it reads (``(1, 2)`` and ``(2, 3)`` give
two independent column sets) and the document types it applies to.
"""

from __future__ import annotations

import csv
import hashlib
import re
from dataclasses import dataclass, field
from typing import IO, Callable, Sequence

import numpy as np

from . import textcues as tc
from .blocks import DOC_TYPES, Document, Label, TextBlock
from .layout import (
    Indent,
    PageFrame,
    breaks_before_margin,
    centered,
    compare_positions,
    in_footer,
    in_header,
    indentation_relation,
    larger_spacing,
    left_aligned,
    page_frame,
    similar_position_flags,
)
from .semantic import Scorer, coherence_features

PDF_EN = frozenset({"contract-pdf-en", "law-pdf-en"})
TXT_EN = frozenset({"contract-txt-en"})
PDF_JA = frozenset({"contract-pdf-ja"})
ALL_TYPES = PDF_EN | TXT_EN | PDF_JA
NULLABLE_SLOTS = frozenset({1, 3, 4})
INDENT_LEVELS = tuple(i.value for i in Indent)


@dataclass(frozen=True)
class FeatureDescriptor:
    name: str
    description: str
    groups: tuple[tuple[int, ...], ...]
    kind: str  # "bool", "cat" or "num"
    func: Callable = field(compare=False, repr=False)
    levels: tuple[str, ...] = ()  # categorical levels, or output names for "num"
    doc_types: frozenset[str] = ALL_TYPES
    null_safe: bool = False  # func receives None for empty slots

    def __post_init__(self) -> None:
        for g in self.groups:
            if not g or any(s not in (1, 2, 3, 4) for s in g):
                raise ValueError(f"{self.name}: slot indices must be in 1..4")

    @staticmethod
    def group_label(group: tuple[int, ...]) -> str:
        return "-".join(str(s) for s in group)

    def columns(self, group: tuple[int, ...]) -> list[str]:
        base = f"{self.name}.{self.group_label(group)}"
        nullable = bool(NULLABLE_SLOTS.intersection(group))
        if self.kind == "bool":
            cols = [base]
        else:
            cols = [f"{base}.{lvl}" for lvl in self.levels]
        if self.kind == "cat":
            return cols + ([f"{base}.ABSENT"] if nullable else [])
        return cols + ([f"{base}.absent"] if nullable or self.kind == "num" else [])

    def encode(self, ext: DocumentFeatures, blocks: Sequence[TextBlock | None], group: tuple[int, ...]) -> list[float]:
        nullable = bool(NULLABLE_SLOTS.intersection(group))
        absent = any(b is None for b in blocks)
        value = None
        if not absent or self.null_safe:
            value = self.func(ext, *blocks)
        if self.kind == "bool":
            out = [1.0 if value else 0.0]
            return out + ([1.0 if absent else 0.0] if nullable else [])
        if self.kind == "cat":
            out = [1.0 if value == lvl else 0.0 for lvl in self.levels]
            return out + ([1.0 if absent else 0.0] if nullable else [])
        if value is None:
            return [0.0] * len(self.levels) + [1.0]
        return [float(v) for v in value] + [0.0]


_ALL_FEATURES: list[FeatureDescriptor] = []


def feature(name, description, groups, kind="bool", levels=(), doc_types=ALL_TYPES, null_safe=False):
    def register(fn):
        _ALL_FEATURES.append(
            FeatureDescriptor(name, description, tuple(tuple(g) for g in groups), kind, fn, tuple(levels), frozenset(doc_types), null_safe)
        )
        return fn

    return register


def _natural_key(name: str) -> tuple[str, int]:
    m = re.match(r"([A-Za-z]+)(\d+)", name)
    return (m.group(1), int(m.group(2))) if m else (name, 0)


class DocumentFeatures:
    """Per-document caches that the feature functions read from."""

    def __init__(self, doc: Document, frame: PageFrame | None = None, scorer: Scorer | None = None):
        self.doc = doc
        self.frame = frame or page_frame(doc)
        self.scorer = scorer
        self.language = doc.language
        self.numberings = [tc.numbering_candidates(b.text, self.language) for b in doc.blocks]
        self.t1 = self._run_automaton()
        self._similar: list[bool] | None = None
        self._scores: dict[tuple[str, str], float] = {}

    def _run_automaton(self) -> list[str]:
        memory: tc.NumberingMemory = ()
        out = []
        for cands in self.numberings:
            outcome, memory, _ = tc.numbering_transition(memory, cands)
            out.append(outcome)
        return out

    @property
    def similar(self) -> list[bool]:
        if self._similar is None:
            self._similar = similar_position_flags(self.doc)
        return self._similar

    def score(self, context: str, target: str) -> float:
        """Memoized scorer call; doubles as a Scorer for coherence_features."""
        key = (context, target)
        if key not in self._scores:
            self._scores[key] = self.scorer.score(context, target)
        return self._scores[key]

    def coherence(self, a: TextBlock, b: TextBlock, c: TextBlock) -> tuple[float, float] | None:
        if self.scorer is None:
            return None
        return coherence_features(a, b, c, self)

    def erased_x(self, b: TextBlock) -> float:
        """Left edge of the text after removing a leading numbering token."""
        cands = self.numberings[b.index]
        if not cands or not b.text:
            return b.x0
        frac = cands[0].end / len(b.text)
        return b.x0 + frac * b.width


# --------------------------------------------------------------------------
# Visual features
# --------------------------------------------------------------------------


@feature("V1", "Indentation (up, down or same)", [(1, 2), (2, 3)], "cat", INDENT_LEVELS)
def _indentation(ext, a, b):
    return indentation_relation(a, b, ext.frame).value


@feature("V2", "Indentation after erasing numbering", [(1, 2), (2, 3)], "cat", INDENT_LEVELS, TXT_EN)
def _erased_indentation(ext, a, b):
    return compare_positions(ext.erased_x(a), ext.erased_x(b), ext.frame.tau_x).value


@feature("V3", "Centered", [(2,), (3,)])
def _centered(ext, b):
    return centered(b, ext.frame)


@feature("V4", "Line break before right margin", [(1,), (2,)])
def _breaks_early(ext, b):
    return breaks_before_margin(b, ext.frame)


@feature("V5", "Page change", [(1, 2), (2, 3)], doc_types=PDF_EN | PDF_JA, null_safe=True)
def _page_change(ext, a, b):
    if a is None or b is None:
        return True
    return a.page != b.page


@feature("V6", "Within top 15% of a page", [(2,)], doc_types=PDF_EN | PDF_JA)
def _header_region(ext, b):
    return in_header(b, ext.frame)


@feature("V7", "Within bottom 15% of a page", [(2,)], doc_types=PDF_EN | PDF_JA)
def _footer_region(ext, b):
    return in_footer(b, ext.frame)


@feature("V8", "Larger line spacing", [(1, 2), (2, 3)])
def _larger_spacing(ext, a, b):
    return larger_spacing(a, b, ext.frame)


@feature("V9", "Justified with spaces in middle", [(2,), (3,)])
def _spaces_in_middle(ext, b):
    return tc.spaces_in_middle(b.text)


@feature("V10", "Similar text in a similar position", [(2,)], doc_types=PDF_EN | PDF_JA)
def _similar_position(ext, b):
    return ext.similar[b.index]


@feature("V11", "Emphasis by spaces between characters", [(1,), (2,)], doc_types=PDF_JA)
def _spaced_emphasis(ext, b):
    return tc.spaced_emphasis(b.text)


@feature("V12", "Emphasis by parentheses", [(1,), (2,)], doc_types=PDF_JA)
def _bracketed(ext, b):
    return tc.bracketed(b.text)


# --------------------------------------------------------------------------
# Textual features
# --------------------------------------------------------------------------


@feature("T1", "Numbering transition", [(2, 3)], "cat", tc.T1_LEVELS)
def _numbering_transition(ext, a, b):
    return ext.t1[b.index]


@feature("T2", "Punctuated", [(1,), (2,)])
def _punctuated(ext, b):
    return tc.punctuated(b.text)


@feature("T3", "List start", [(1,), (2,)])
def _list_start(ext, b):
    return tc.list_start(b.text)


@feature("T4", "List elements", [(2,)], doc_types=PDF_EN | TXT_EN)
def _list_element(ext, b):
    return tc.list_element(b.text)


@feature("T5", "Page number (strict)", [(1,), (2,), (3,)])
def _page_strict(ext, b):
    return tc.page_number_strict(b.text)


@feature("T6", "Page number (tolerant)", [(1,), (2,), (3,)])
def _page_tolerant(ext, b):
    return tc.page_number_tolerant(b.text)


@feature("T7", "Starts with whereas", [(3,)], doc_types=PDF_EN | TXT_EN)
def _whereas(ext, b):
    return tc.starts_whereas(b.text)


@feature("T8", "Starts with now, therefore", [(3,)], doc_types=PDF_EN | TXT_EN)
def _now_therefore(ext, b):
    return tc.starts_now_therefore(b.text)


@feature("T9", "Dictionary-like", [(2,), (3,)], doc_types=PDF_EN | TXT_EN)
def _dictionary_like(ext, b):
    return tc.dictionary_like(b.text, breaks_before_margin(b, ext.frame))


@feature("T10", "All capital", [(2,), (3,)], doc_types=PDF_EN | TXT_EN)
def _all_capital(ext, b):
    return tc.all_capital(b.text)


@feature("T11", "Contiguous blank field", [(1, 2), (2, 3)])
def _blank_fields(ext, a, b):
    return tc.blank_field_pair(a.text, b.text)


@feature("T12", "Horizontal line", [(1,), (2,), (3,)], doc_types=TXT_EN)
def _horizontal_line(ext, b):
    return tc.horizontal_line(b.text)


# --------------------------------------------------------------------------
# Semantic feature
# --------------------------------------------------------------------------


@feature("S1", "Language model coherence", [(1, 2, 3)], "num", ("f1", "f2"))
def _coherence(ext, a, b, c):
    return ext.coherence(a, b, c)


# --------------------------------------------------------------------------
# Registry
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class Registry:
    doc_type: str
    descriptors: tuple[FeatureDescriptor, ...]

    @property
    def names(self) -> list[str]:
        return [d.name for d in self.descriptors]

    @property
    def schema(self) -> list[str]:
        return [col for d in self.descriptors for g in d.groups for col in d.columns(g)]

    @property
    def fingerprint(self) -> str:
        return schema_fingerprint(self.schema)

    def __contains__(self, name: str) -> bool:
        return name in self.names


def schema_fingerprint(schema: Sequence[str]) -> str:
    return hashlib.sha256("\n".join(schema).encode("utf-8")).hexdigest()


def all_feature_names() -> list[str]:
    return sorted({d.name for d in _ALL_FEATURES}, key=_natural_key)


def build_registry(doc_type: str, disabled: Sequence[str] = ()) -> Registry:
    if doc_type not in DOC_TYPES:
        raise ValueError(f"unknown doc_type {doc_type!r}")
    known = set(all_feature_names())
    unknown = sorted(set(disabled) - known)
    if unknown:
        raise ValueError(f"unknown feature name(s): {', '.join(unknown)}")
    chosen = [d for d in _ALL_FEATURES if doc_type in d.doc_types and d.name not in set(disabled)]
    chosen.sort(key=lambda d: _natural_key(d.name))
    return Registry(doc_type, tuple(chosen))


# --------------------------------------------------------------------------
# Transition rows
# --------------------------------------------------------------------------


def transition_context(n: int, i: int, omitted_mask: Sequence[bool]) -> tuple[int | None, ...]:
    """Slot indices (s1, s2, s3, s4) for block i.

    An omitted block sees its literal neighbours. Any other block transitions
    to the next block not marked omitted; s1 and s4 stay literal neighbours.
    """
    def at(k: int) -> int | None:
        return k if 0 <= k < n else None

    if omitted_mask[i]:
        return at(i - 1), i, at(i + 1), at(i + 2)
    j = i + 1
    while j < n and omitted_mask[j]:
        j += 1
    if j >= n:
        return at(i - 1), i, None, None
    return at(i - 1), i, j, at(j + 1)


def transition_feature_matrix(
    doc: Document,
    omitted_mask: Sequence[bool] | None,
    registry: Registry,
    frame: PageFrame | None = None,
    scorer: Scorer | None = None,
    ext: DocumentFeatures | None = None,
) -> tuple[np.ndarray, list[str]]:
    """One row per block with the registry's column schema."""
    if ext is None:
        ext = DocumentFeatures(doc, frame, scorer)
    n = len(doc)
    mask = list(omitted_mask) if omitted_mask is not None else [False] * n
    if len(mask) != n:
        raise ValueError("omitted mask length differs from block count")
    schema = registry.schema
    rows = np.zeros((n, len(schema)))
    for i in range(n):
        slots = transition_context(n, i, mask)
        blocks = [doc.blocks[s] if s is not None else None for s in slots]
        row: list[float] = []
        for d in registry.descriptors:
            for g in d.groups:
                row.extend(d.encode(ext, [blocks[s - 1] for s in g], g))
        rows[i] = row
    return rows, schema


def write_feature_csv(matrix: np.ndarray, schema: Sequence[str], stream: IO[str]) -> None:
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(["block"] + list(schema))
    for i, row in enumerate(matrix):
        writer.writerow([i] + [f"{v:g}" for v in row])


# --------------------------------------------------------------------------
# Pointer rows
# --------------------------------------------------------------------------

POINTER_SCHEMA = (
    ["P.num_contiguous.tb1", "P.num_contiguous.head"]
    + [f"P.indent.tb1-tb2.{lvl}" for lvl in INDENT_LEVELS]
    + [f"P.indent.head-tb3.{lvl}" for lvl in INDENT_LEVELS]
    + ["P.indent.head-tb3.ABSENT"]
    + ["P.left_aligned.tb1", "P.left_aligned.tb3", "P.left_aligned.tb3.absent", "P.left_aligned.head"]
    + ["P.count.down", "P.count.up", "P.count.diff"]
)


def _retained(labels: Sequence[Label], k: int, step: int) -> int | None:
    k += step
    while 0 <= k < len(labels):
        if labels[k] != Label.OMITTED:
            return k
        k += step
    return None


def paragraph_head(labels: Sequence[Label], j: int) -> int:
    """First block of the paragraph containing block j."""
    head = j
    while (prev := _retained(labels, head, -1)) is not None and labels[prev] == Label.CONTINUOUS:
        head = prev
    return head


def pointer_candidates(labels: Sequence[Label], i: int) -> list[int]:
    return [j for j in range(i) if labels[j] == Label.DOWN]


def pointer_row(ext: DocumentFeatures, labels: Sequence[Label], j: int, i: int) -> list[float]:
    doc, frame = ext.doc, ext.frame
    head_i = paragraph_head(labels, j)
    tb1, tb2, head = doc.blocks[j], doc.blocks[i], doc.blocks[head_i]
    nxt = _retained(labels, i, 1)
    tb3 = doc.blocks[nxt] if nxt is not None else None
    num3 = ext.numberings[nxt] if nxt is not None else []

    row = [
        float(tc.contiguous(ext.numberings[j], num3)),
        float(tc.contiguous(ext.numberings[head_i], num3)),
    ]
    rel = indentation_relation(tb1, tb2, frame).value
    row += [float(rel == lvl) for lvl in INDENT_LEVELS]
    rel = indentation_relation(head, tb3, frame).value if tb3 is not None else None
    row += [float(rel == lvl) for lvl in INDENT_LEVELS] + [float(tb3 is None)]
    row += [
        float(left_aligned(tb1, frame)),
        float(tb3 is not None and left_aligned(tb3, frame)),
        float(tb3 is None),
        float(left_aligned(head, frame)),
    ]
    downs = sum(1 for k in range(j + 1, i) if labels[k] == Label.DOWN)
    ups = sum(1 for k in range(j + 1, i) if labels[k] == Label.UP)
    row += [float(downs), float(ups), float(downs - ups)]
    return row


def pointer_feature_rows(
    ext: DocumentFeatures, labels: Sequence[Label], targets: Sequence[int] | None = None
) -> tuple[list[tuple[int, int]], np.ndarray]:
    """Rows for every (candidate j, UP block i) pair.

    ``targets`` restricts the UP blocks considered; by default every block
    labelled UP is used.
    """
    if targets is None:
        targets = [i for i, lab in enumerate(labels) if lab == Label.UP]
    pairs = [(j, i) for i in targets for j in pointer_candidates(labels, i)]
    rows = np.array([pointer_row(ext, labels, j, i) for j, i in pairs], dtype=float).reshape(len(pairs), len(POINTER_SCHEMA))
    return pairs, rows
