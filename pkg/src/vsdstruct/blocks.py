"""Blocks, documents and transition annotations, plus their on-disk formats.

Two ingestion paths exist. Block JSON carries pre-extracted lines with real
geometry (PDF sources). Plain text is split into one block per non-blank line
and given synthetic geometry so the same visual features apply:

    x0 = leading spaces, x1 = one past the last non-space column,
    y0 = -(zero-based line number), y1 = y0 + 1.
"""

from __future__ import annotations

import enum
import io
import json
from dataclasses import dataclass, field
from typing import IO, Iterable, Sequence

DOC_TYPES = ("contract-pdf-en", "law-pdf-en", "contract-txt-en", "contract-pdf-ja")
TEXT_DOC_TYPES = frozenset({"contract-txt-en"})
TAB_SIZE = 8


class FormatError(ValueError):
    """Malformed input file or annotation; ``line`` is 1-based when known."""

    def __init__(self, message: str, *, source: str | None = None, line: int | None = None):
        self.message = message
        self.source = source
        self.line = line
        where = ""
        if source is not None:
            where = f"{source}:{line}: " if line is not None else f"{source}: "
        elif line is not None:
            where = f"line {line}: "
        super().__init__(where + message)


class Label(enum.IntEnum):
    """Transition from a block to the next retained block.

    Integer values double as class indices for the classifiers.
    """

    CONTINUOUS = 0
    CONSECUTIVE = 1
    DOWN = 2
    UP = 3
    OMITTED = 4

    @property
    def letter(self) -> str:
        return _LETTERS[self]

    @classmethod
    def from_letter(cls, letter: str) -> Label:
        try:
            return _FROM_LETTER[letter.lower()]
        except KeyError:
            raise ValueError(f"unknown label letter {letter!r}") from None


_LETTERS = {
    Label.CONTINUOUS: "c",
    Label.CONSECUTIVE: "s",
    Label.DOWN: "d",
    Label.UP: "u",
    Label.OMITTED: "o",
}
_FROM_LETTER = {v: k for k, v in _LETTERS.items()}


@dataclass(frozen=True)
class TextBlock:
    index: int
    text: str
    page: int
    bbox: tuple[float, float, float, float]
    blank_lines_before: int = 0

    @property
    def x0(self) -> float:
        return self.bbox[0]

    @property
    def y0(self) -> float:
        return self.bbox[1]

    @property
    def x1(self) -> float:
        return self.bbox[2]

    @property
    def y1(self) -> float:
        return self.bbox[3]

    @property
    def width(self) -> float:
        return self.bbox[2] - self.bbox[0]

    @property
    def height(self) -> float:
        return self.bbox[3] - self.bbox[1]

    @property
    def center_x(self) -> float:
        return (self.bbox[0] + self.bbox[2]) / 2

    @property
    def area(self) -> float:
        return self.width * self.height


@dataclass(frozen=True)
class Document:
    doc_id: str
    doc_type: str
    blocks: tuple[TextBlock, ...]

    def __post_init__(self) -> None:
        if self.doc_type not in DOC_TYPES:
            raise FormatError(f"unknown doc_type {self.doc_type!r}")
        if not self.blocks:
            raise FormatError("empty document")
        for i, b in enumerate(self.blocks):
            if b.index != i:
                raise FormatError(f"block indices must be contiguous; got {b.index} at position {i}")

    def __len__(self) -> int:
        return len(self.blocks)

    @property
    def language(self) -> str:
        return "ja" if self.doc_type.endswith("-ja") else "en"

    @property
    def is_text(self) -> bool:
        return self.doc_type in TEXT_DOC_TYPES

    @property
    def page_count(self) -> int:
        return len({b.page for b in self.blocks})


@dataclass(frozen=True)
class TransitionAnnotation:
    """One label per block and a pointer for every UP block.

    No validation happens here so that broken gold files can still be loaded
    and reported on; see :func:`validate_annotation`.
    """

    labels: tuple[Label, ...]
    pointers: tuple[int | None, ...] = field(default=())

    def __post_init__(self) -> None:
        object.__setattr__(self, "labels", tuple(Label(x) for x in self.labels))
        if not self.pointers:
            object.__setattr__(self, "pointers", (None,) * len(self.labels))
        else:
            object.__setattr__(self, "pointers", tuple(self.pointers))
        if len(self.pointers) != len(self.labels):
            raise ValueError("labels and pointers differ in length")

    def __len__(self) -> int:
        return len(self.labels)

    @property
    def omitted_mask(self) -> list[bool]:
        return [lab == Label.OMITTED for lab in self.labels]

    def last_retained(self) -> int | None:
        """Index of the final non-OMITTED block (the sentinel holder)."""
        for i in range(len(self.labels) - 1, -1, -1):
            if self.labels[i] != Label.OMITTED:
                return i
        return None


# --------------------------------------------------------------------------
# Block JSON
# --------------------------------------------------------------------------


def _read_stream(stream: str | bytes | IO) -> str:
    if isinstance(stream, bytes):
        return stream.decode("utf-8")
    if isinstance(stream, str):
        return stream
    data = stream.read()
    return data.decode("utf-8") if isinstance(data, bytes) else data


def ingest_pdf_blocks(stream: str | bytes | IO | dict, *, source: str | None = None) -> Document:
    """Parse a block-JSON document. Block order is file order."""
    if isinstance(stream, dict):
        obj = stream
    else:
        text = _read_stream(stream)
        if not text.strip():
            raise FormatError("empty stream", source=source)
        try:
            obj = json.loads(text)
        except json.JSONDecodeError as exc:
            raise FormatError(f"malformed JSON: {exc.msg}", source=source, line=exc.lineno) from None
    if not isinstance(obj, dict):
        raise FormatError("top level must be an object", source=source)
    for key in ("doc_id", "doc_type", "blocks"):
        if key not in obj:
            raise FormatError(f"missing field {key!r}", source=source)
    if obj["doc_type"] not in DOC_TYPES:
        raise FormatError(f"unknown doc_type {obj['doc_type']!r}", source=source)
    raw_blocks = obj["blocks"]
    if not isinstance(raw_blocks, list) or not raw_blocks:
        raise FormatError("empty block list", source=source)

    blocks = []
    for i, raw in enumerate(raw_blocks):
        if not isinstance(raw, dict):
            raise FormatError(f"block {i}: expected an object", source=source)
        for key in ("text", "page", "bbox"):
            if key not in raw:
                raise FormatError(f"block {i}: missing field {key!r}", source=source)
        text = raw["text"]
        if not isinstance(text, str) or not text.strip():
            raise FormatError(f"block {i}: empty text", source=source)
        page = raw["page"]
        if isinstance(page, bool) or not isinstance(page, int) or page < 1:
            raise FormatError(f"block {i}: page must be a positive integer", source=source)
        bbox = raw["bbox"]
        if (
            not isinstance(bbox, list)
            or len(bbox) != 4
            or not all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in bbox)
        ):
            raise FormatError(f"block {i}: bbox must be four numbers", source=source)
        x0, y0, x1, y1 = (float(v) for v in bbox)
        if x0 >= x1 or y0 >= y1:
            raise FormatError(f"block {i}: degenerate bbox", source=source)
        blocks.append(TextBlock(i, text.strip(), page, (x0, y0, x1, y1)))
    return Document(str(obj["doc_id"]), obj["doc_type"], tuple(blocks))


def document_to_json(doc: Document) -> dict:
    return {
        "doc_id": doc.doc_id,
        "doc_type": doc.doc_type,
        "blocks": [{"text": b.text, "page": b.page, "bbox": list(b.bbox)} for b in doc.blocks],
    }


# --------------------------------------------------------------------------
# Plain text
# --------------------------------------------------------------------------


def ingest_plaintext(text: str, doc_id: str, doc_type: str = "contract-txt-en") -> Document:
    """One block per non-blank line, with synthetic geometry."""
    if doc_type not in TEXT_DOC_TYPES:
        raise FormatError(f"{doc_type!r} is not a plain-text document type")
    blocks = []
    blanks = 0
    for lineno, line in enumerate(text.replace("\r\n", "\n").replace("\r", "\n").split("\n")):
        line = line.expandtabs(TAB_SIZE)
        stripped = line.strip()
        if not stripped:
            blanks += 1
            continue
        x0 = len(line) - len(line.lstrip())
        x1 = len(line.rstrip())
        y0 = -float(lineno)
        blocks.append(
            TextBlock(
                len(blocks),
                stripped,
                1,
                (float(x0), y0, float(x1), y0 + 1.0),
                blank_lines_before=blanks if blocks else 0,
            )
        )
        blanks = 0
    if not blocks:
        raise FormatError("empty document")
    return Document(doc_id, doc_type, tuple(blocks))


def render_plaintext(doc: Document) -> str:
    """Inverse of :func:`ingest_plaintext` for text-sourced documents."""
    lines: list[str] = []
    for b in doc.blocks:
        lineno = int(-b.y0)
        lines.extend([""] * (lineno - len(lines)))
        lines.append(" " * int(b.x0) + b.text)
    return "\n".join(lines) + "\n"


# --------------------------------------------------------------------------
# Annotation TSV
# --------------------------------------------------------------------------


def parse_annotation(stream: str | IO, *, source: str | None = None) -> TransitionAnnotation:
    """Syntax-level parse of annotation rows; semantic checks are separate."""
    text = _read_stream(stream)
    labels: list[Label] = []
    pointers: list[int | None] = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        cols = line.split("\t") if "\t" in line else line.split()
        if len(cols) != 3:
            raise FormatError(f"expected 3 columns, got {len(cols)}", source=source, line=lineno)
        idx, letter, ptr = (c.strip() for c in cols)
        if not idx.isdigit() or int(idx) != len(labels):
            raise FormatError(f"expected index {len(labels)}, got {idx!r}", source=source, line=lineno)
        try:
            labels.append(Label.from_letter(letter))
        except ValueError as exc:
            raise FormatError(str(exc), source=source, line=lineno) from None
        if ptr == "-":
            pointers.append(None)
        elif ptr.isdigit():
            pointers.append(int(ptr))
        else:
            raise FormatError(f"bad pointer {ptr!r}", source=source, line=lineno)
    return TransitionAnnotation(tuple(labels), tuple(pointers))


def pointer_violations(ann: TransitionAnnotation) -> list[str]:
    out = []
    for i, (lab, ptr) in enumerate(zip(ann.labels, ann.pointers)):
        if lab == Label.UP:
            if ptr is None:
                if not any(ann.labels[j] == Label.DOWN for j in range(i)):
                    out.append(f"block {i}: UP with no DOWN candidate")
                else:
                    out.append(f"block {i}: UP requires pointer")
            elif ptr >= i:
                out.append(f"block {i}: pointer {ptr} must precede the block")
            elif ann.labels[ptr] != Label.DOWN:
                out.append(f"block {i}: pointer {ptr} does not target a DOWN block")
        elif ptr is not None:
            out.append(f"block {i}: pointer on non-UP row")
    return out


def read_annotation(
    stream: str | IO, n_blocks: int | None = None, *, source: str | None = None
) -> TransitionAnnotation:
    ann = parse_annotation(stream, source=source)
    if n_blocks is not None and len(ann) != n_blocks:
        raise FormatError(f"annotation has {len(ann)} rows but document has {n_blocks} blocks", source=source)
    problems = pointer_violations(ann)
    if problems:
        raise FormatError(problems[0], source=source)
    return ann


def write_annotation(ann: TransitionAnnotation, stream: IO | None = None) -> str:
    buf = io.StringIO()
    for i, (lab, ptr) in enumerate(zip(ann.labels, ann.pointers)):
        buf.write(f"{i}\t{lab.letter}\t{'-' if ptr is None else ptr}\n")
    out = buf.getvalue()
    if stream is not None:
        stream.write(out)
    return out


def validate_annotation(doc: Document | int, ann: TransitionAnnotation) -> list[str]:
    """All invariant violations, empty when the annotation yields a valid tree."""
    from .tree import TreeError, build_tree

    n = doc if isinstance(doc, int) else len(doc)
    if len(ann) != n:
        return [f"annotation has {len(ann)} rows but document has {n} blocks"]
    problems = pointer_violations(ann)
    last = ann.last_retained()
    if last is None:
        problems.append("every block is OMITTED")
    elif ann.labels[last] != Label.CONSECUTIVE:
        problems.append(f"block {last}: final retained block must carry the CONSECUTIVE sentinel")
    if not problems:
        try:
            build_tree(ann)
        except TreeError as exc:
            problems.append(str(exc))
    return problems


def labels_from_letters(letters: Iterable[str]) -> tuple[Label, ...]:
    return tuple(Label.from_letter(c) for c in letters)


def make_annotation(labels: Sequence[Label | str], pointers: Sequence[int | None] | None = None) -> TransitionAnnotation:
    labs = tuple(Label.from_letter(x) if isinstance(x, str) else Label(x) for x in labels)
    return TransitionAnnotation(labs, tuple(pointers) if pointers is not None else ())
