"""Textual cues: numbering detection, the numbering-transition automaton,
regex predicates and edit distance."""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Sequence, Union

NumberValue = Union[int, tuple[int, ...]]

CONTINUOUS = "continuous"
CONSECUTIVE = "consecutive"
UP = "up"
DOWN = "down"
OTHER = "other"
T1_LEVELS = (CONTINUOUS, CONSECUTIVE, DOWN, UP, OTHER)


def levenshtein(a: str, b: str) -> int:
    """Unit-cost edit distance over code points."""
    if len(a) < len(b):
        a, b = b, a
    if not b:
        return len(a)
    prev = list(range(len(b) + 1))
    for i, ca in enumerate(a, start=1):
        cur = [i]
        for j, cb in enumerate(b, start=1):
            cur.append(min(prev[j] + 1, cur[j - 1] + 1, prev[j - 1] + (ca != cb)))
        prev = cur
    return prev[-1]


# --------------------------------------------------------------------------
# Numbering detection
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class Numbering:
    kind: str
    value: NumberValue
    end: int  # offset just past the numbering token and following spaces

    @property
    def is_initial(self) -> bool:
        return is_initial(self.value)


def is_initial(value: NumberValue) -> bool:
    return value == 1 if isinstance(value, int) else value[-1] == 1


def is_successor(prev: NumberValue, nxt: NumberValue) -> bool:
    if isinstance(prev, int) or isinstance(nxt, int):
        return isinstance(prev, int) and isinstance(nxt, int) and nxt == prev + 1
    return len(prev) == len(nxt) and prev[:-1] == nxt[:-1] and nxt[-1] == prev[-1] + 1


_ROMAN = {"i": 1, "v": 5, "x": 10, "l": 50, "c": 100, "d": 500, "m": 1000}
_ROMAN_RE = re.compile(r"^m{0,3}(cm|cd|d?c{0,3})(xc|xl|l?x{0,3})(ix|iv|v?i{0,3})$")


def roman_value(s: str) -> int | None:
    s = s.lower()
    if not s or not _ROMAN_RE.match(s):
        return None
    total = 0
    for ch, nxt in zip(s, s[1:] + " "):
        v = _ROMAN[ch]
        total += -v if nxt != " " and _ROMAN[nxt] > v else v
    return total


_KATAKANA = "アイウエオカキクケコサシスセソタチツテトナニヌネノハヒフヘホマミムメモヤユヨラリルレロワヲン"
_KANJI_DIGITS = {"一": 1, "二": 2, "三": 3, "四": 4, "五": 5, "六": 6, "七": 7, "八": 8, "九": 9}
_FULLWIDTH = str.maketrans("０１２３４５６７８９．", "0123456789.")


def kanji_number(s: str) -> int | None:
    if s.isdigit():
        return int(s)
    if "十" in s:
        tens, _, ones = s.partition("十")
        t = _KANJI_DIGITS.get(tens, None) if tens else 1
        o = _KANJI_DIGITS.get(ones, None) if ones else 0
        if t is None or o is None:
            return None
        return t * 10 + o
    if len(s) == 1:
        return _KANJI_DIGITS.get(s)
    return None


_END = r"(?=\s|$)"
_LATIN_PATTERNS: list[tuple[str, re.Pattern, str]] = [
    ("multilevel", re.compile(r"(\d{1,3}(?:\.\d{1,3})+)\.?" + _END), "multi"),
    ("arabic-dot", re.compile(r"(\d{1,3})\." + _END), "int"),
    ("arabic-paren", re.compile(r"\((\d{1,3})\)"), "int"),
    ("arabic-rparen", re.compile(r"(\d{1,3})\)"), "int"),
    ("roman-lower-dot", re.compile(r"([ivxlcdm]{1,7})\." + _END), "roman"),
    ("roman-lower-paren", re.compile(r"\(([ivxlcdm]{1,7})\)"), "roman"),
    ("roman-lower-rparen", re.compile(r"([ivxlcdm]{1,7})\)"), "roman"),
    ("roman-upper-dot", re.compile(r"([IVXLCDM]{1,7})\." + _END), "roman"),
    ("roman-upper-paren", re.compile(r"\(([IVXLCDM]{1,7})\)"), "roman"),
    ("roman-upper-rparen", re.compile(r"([IVXLCDM]{1,7})\)"), "roman"),
    ("alpha-lower-dot", re.compile(r"([a-z])\." + _END), "alpha"),
    ("alpha-lower-paren", re.compile(r"\(([a-z])\)"), "alpha"),
    ("alpha-lower-rparen", re.compile(r"([a-z])\)"), "alpha"),
    ("alpha-upper-dot", re.compile(r"([A-Z])\." + _END), "alpha"),
    ("alpha-upper-paren", re.compile(r"\(([A-Z])\)"), "alpha"),
    ("alpha-upper-rparen", re.compile(r"([A-Z])\)"), "alpha"),
    ("section", re.compile(r"(?i:section|sec\.)\s+(\d{1,3})(?=[\s:]|\.(?:\s|$)|$)\.?"), "int"),
    ("article", re.compile(r"(?i:article)\s+(\d{1,3})(?=[\s:]|\.(?:\s|$)|$)\.?"), "int"),
    ("article-roman", re.compile(r"(?i:article)\s+([IVXLCDM]{1,7})(?=[\s:]|\.(?:\s|$)|$)\.?"), "roman"),
]
_JA_PATTERNS: list[tuple[str, re.Pattern, str]] = [
    ("ja-article", re.compile(r"第([0-9一二三四五六七八九十]{1,3})条"), "kanji"),
    ("ja-clause", re.compile(r"第([0-9一二三四五六七八九十]{1,3})項"), "kanji"),
    ("ja-paren", re.compile(r"（(\d{1,3})）"), "int"),
    ("ja-circled", re.compile(r"([①-⑳])"), "circled"),
    ("ja-katakana-paren", re.compile(r"[（(]([" + _KATAKANA + r"])[）)]"), "kana"),
    ("ja-katakana-dot", re.compile(r"([" + _KATAKANA + r"])[.、]"), "kana"),
]
_LEADING = re.compile(r"^[ \t　]{0,8}")
_TRAILING_SPACE = re.compile(r"[ \t　]*")


def _value(raw: str, conv: str) -> NumberValue | None:
    if conv == "int":
        v = int(raw)
    elif conv == "multi":
        return tuple(int(p) for p in raw.split(".")) if all(int(p) >= 1 for p in raw.split(".")) else None
    elif conv == "roman":
        v = roman_value(raw)
    elif conv == "alpha":
        v = ord(raw.lower()) - ord("a") + 1
    elif conv == "kanji":
        v = kanji_number(raw)
    elif conv == "circled":
        v = ord(raw) - ord("①") + 1
    else:
        v = _KATAKANA.index(raw) + 1
    return v if v is not None and v >= 1 else None


def numbering_candidates(text: str, language: str = "en") -> list[Numbering]:
    """Numbering readings of the block head, longest match first.

    Single letters such as ``i.`` or ``C)`` read as both roman and alphabetic;
    the roman reading is listed first.
    """
    lead = _LEADING.match(text).end()
    body = text[lead:]
    if language == "ja":
        body = body.translate(_FULLWIDTH)
    patterns = _LATIN_PATTERNS + (_JA_PATTERNS if language == "ja" else [])
    found: list[tuple[int, int, Numbering]] = []
    for rank, (kind, pattern, conv) in enumerate(patterns):
        m = pattern.match(body)
        if not m:
            continue
        value = _value(m.group(1), conv)
        if value is None:
            continue
        if conv == "multi":
            kind = f"multilevel-{len(value)}"
        end = m.end()
        end += _TRAILING_SPACE.match(body, end).end() - end
        found.append((m.end(), rank, Numbering(kind, value, lead + end)))
    if not found:
        return []
    longest = max(f[0] for f in found)
    return [n for length, _, n in sorted(found, key=lambda f: (-f[0], f[1])) if length == longest]


def detect_numbering(text: str, language: str = "en") -> Numbering | None:
    cands = numbering_candidates(text, language)
    return cands[0] if cands else None


# --------------------------------------------------------------------------
# Numbering transition automaton
# --------------------------------------------------------------------------

NumberingMemory = tuple[tuple[str, NumberValue], ...]


def _bump(old: NumberValue, new: NumberValue) -> NumberValue:
    if isinstance(old, int) and isinstance(new, int):
        return max(old, new)
    if isinstance(old, tuple) and isinstance(new, tuple):
        return max(old, new)
    return new


def numbering_transition(
    memory: NumberingMemory, candidates: Sequence[Numbering]
) -> tuple[str, NumberingMemory, Numbering | None]:
    """Feed the next block's numbering readings to the automaton.

    Returns the outcome, the updated memory (a stack, deepest last) and the
    reading that was used, if any.
    """
    if not candidates:
        return CONTINUOUS, memory, None
    kinds = [k for k, _ in memory]
    if memory:
        top_kind, top_value = memory[-1]
        for c in candidates:
            if c.kind == top_kind and is_successor(top_value, c.value):
                return CONSECUTIVE, memory[:-1] + ((c.kind, c.value),), c
    for c in candidates:
        for pos in range(len(memory) - 2, -1, -1):
            kind, value = memory[pos]
            if c.kind == kind and is_successor(value, c.value):
                return UP, memory[:pos] + ((c.kind, c.value),), c
    for c in candidates:
        if c.kind not in kinds and c.is_initial:
            return DOWN, memory + ((c.kind, c.value),), c
    c = candidates[0]
    if c.kind in kinds:
        pos = kinds.index(c.kind)
        updated = memory[:pos] + ((c.kind, _bump(memory[pos][1], c.value)),) + memory[pos + 1 :]
        return OTHER, updated, c
    return OTHER, memory + ((c.kind, c.value),), c


def run_numbering(texts: Sequence[str], language: str = "en") -> list[tuple[str, Numbering | None]]:
    """Automaton outcome when each block in turn is fed as the next block."""
    memory: NumberingMemory = ()
    out = []
    for text in texts:
        outcome, memory, used = numbering_transition(memory, numbering_candidates(text, language))
        out.append((outcome, used))
    return out


def contiguous(prev: Sequence[Numbering], nxt: Sequence[Numbering]) -> bool:
    """Some reading of ``nxt`` directly follows some reading of ``prev``."""
    return any(p.kind == n.kind and is_successor(p.value, n.value) for p in prev for n in nxt)


# --------------------------------------------------------------------------
# Predicates
# --------------------------------------------------------------------------

_PUNCTUATED = re.compile(r"[.!?。．][\"'”’)\]」』）]*$")
_LIST_START = re.compile(r"[-;:,]$")
_LIST_ELEMENT = re.compile(r"(;|,|\band|\bor)$", re.IGNORECASE)
_PAGE_STRICT = re.compile(
    r"^(?:\d+|page\s+\d+|page\s+\d+\s+of\s+\d+|-\s*\d+\s*-)$", re.IGNORECASE
)
_WHEREAS = re.compile(r"^whereas\b", re.IGNORECASE)
_NOW_THEREFORE = re.compile(r"^now,?\s+therefore\b", re.IGNORECASE)
_UNDERBARS = re.compile(r"_{3,}")
_RULE_CHARS = frozenset("*-=#%_+")
_WIDE_GAP = re.compile(r"\S {4,}\S")
_SPACED_EMPHASIS = re.compile(r"^\S(?:[ 　]+\S){2,}$")
_BRACKETED = re.compile(r"^[（(【［\[「『〔〈《<＜].*[）)】］\]」』〕〉》>＞]$")


def punctuated(text: str) -> bool:
    return bool(_PUNCTUATED.search(text.strip()))


def list_start(text: str) -> bool:
    return bool(_LIST_START.search(text.strip()))


def list_element(text: str) -> bool:
    return bool(_LIST_ELEMENT.search(text.strip()))


def page_number_strict(text: str) -> bool:
    return bool(_PAGE_STRICT.match(text.strip()))


def page_number_tolerant(text: str) -> bool:
    stripped = text.strip()
    tokens = stripped.split()
    return 0 < len(tokens) <= 4 and any(t.isdigit() for t in tokens) and len(stripped) <= 20


def starts_whereas(text: str) -> bool:
    return bool(_WHEREAS.match(text.strip()))


def starts_now_therefore(text: str) -> bool:
    return bool(_NOW_THEREFORE.match(text.strip()))


def dictionary_like(text: str, breaks_early: bool) -> bool:
    return ":" in text and not breaks_early


def all_capital(text: str) -> bool:
    return any(ch.isalpha() for ch in text) and not any(ch.islower() for ch in text)


def has_underbars(text: str) -> bool:
    return bool(_UNDERBARS.search(text))


def horizontal_line(text: str) -> bool:
    chars = [ch for ch in text if not ch.isspace()]
    return bool(chars) and all(ch in _RULE_CHARS for ch in chars)


def spaces_in_middle(text: str) -> bool:
    return bool(_WIDE_GAP.search(text.strip()))


def spaced_emphasis(text: str) -> bool:
    return bool(_SPACED_EMPHASIS.match(text.strip()))


def bracketed(text: str) -> bool:
    return bool(_BRACKETED.match(text.strip()))


def textual_predicates(text: str, breaks_early: bool = True) -> dict[str, bool]:
    """Single-block predicates T2-T10 and T12 by feature name.

    T9 needs to know whether the line breaks before the right margin; T11 is
    pairwise (see :func:`blank_field_pair`).
    """
    return {
        "T2": punctuated(text),
        "T3": list_start(text),
        "T4": list_element(text),
        "T5": page_number_strict(text),
        "T6": page_number_tolerant(text),
        "T7": starts_whereas(text),
        "T8": starts_now_therefore(text),
        "T9": dictionary_like(text, breaks_early),
        "T10": all_capital(text),
        "T12": horizontal_line(text),
    }


def blank_field_pair(a: str, b: str) -> bool:
    return has_underbars(a) and has_underbars(b)
