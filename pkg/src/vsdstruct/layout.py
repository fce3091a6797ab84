"""Geometric primitives behind the visual features."""

from __future__ import annotations

import bisect
import enum
from collections import Counter
from dataclasses import dataclass
from typing import Sequence

from .blocks import Document, TextBlock
from .textcues import levenshtein

MIN_MARGIN_MEMBERS_PER_PAGE = 6
REGION_FRACTION = 0.15


@dataclass(frozen=True)
class Cluster1D:
    members: tuple[float, ...]

    @property
    def representative(self) -> float:
        return self.members[0]

    @property
    def span(self) -> float:
        return self.members[-1] - self.members[0]

    def __len__(self) -> int:
        return len(self.members)

    def __contains__(self, value: float) -> bool:
        return self.members[0] <= value <= self.members[-1]


def cluster_1d(values: Sequence[float], threshold: float) -> list[Cluster1D]:
    """Greedy clustering of sorted values; a cluster spans at most ``threshold``."""
    if threshold < 0:
        raise ValueError("threshold must be non-negative")
    if len(values) == 0:
        raise ValueError("values must be non-empty")
    ordered = sorted(values)
    clusters: list[list[float]] = [[ordered[0]]]
    for v in ordered[1:]:
        if v - clusters[-1][0] <= threshold:
            clusters[-1].append(v)
        else:
            clusters.append([v])
    return [Cluster1D(tuple(c)) for c in clusters]


class Indent(enum.Enum):
    SAME = "same"
    DEEPER = "deeper"
    SHALLOWER = "shallower"


@dataclass(frozen=True)
class PageFrame:
    right_margin_x: float
    left_clusters: tuple[Cluster1D, ...]
    normal_spacing: Cluster1D | None
    header_threshold_y: float
    footer_threshold_y: float
    tau_x: float
    tau_spacing: float
    tau_center: float

    @property
    def body_left(self) -> float:
        return self.left_clusters[0].representative

    def left_cluster_index(self, x: float) -> int:
        reps = [c.representative for c in self.left_clusters]
        return max(bisect.bisect_right(reps, x + 1e-9) - 1, 0)


def _modal(values: Sequence[float]) -> float:
    counts = Counter(round(v, 1) for v in values)
    best = max(counts.values())
    return min(v for v, c in counts.items() if c == best)


def vertical_gap(b1: TextBlock, b2: TextBlock) -> float | None:
    """Whitespace between b1 and the following b2; None across pages."""
    if b1.page != b2.page:
        return None
    return b1.y0 - b2.y1


def page_frame(doc: Document, tau_x: float | None = None) -> PageFrame:
    blocks = doc.blocks
    x0s = [b.x0 for b in blocks]
    x1s = [b.x1 for b in blocks]
    if tau_x is None:
        tau_x = 0.0 if doc.is_text else 0.005 * (max(x1s) - min(x0s))
    tau_center = max(2 * tau_x, 1.0) if doc.is_text else 2 * tau_x

    need = MIN_MARGIN_MEMBERS_PER_PAGE * doc.page_count
    wide = [c for c in cluster_1d(x1s, tau_x) if len(c) >= need]
    right_margin = wide[-1].representative if wide else max(x1s)

    top = max(b.y1 for b in blocks)
    bottom = min(b.y0 for b in blocks)
    span = top - bottom

    tau_spacing = 0.25 * _modal([b.height for b in blocks])
    gaps = [g for a, b in zip(blocks, blocks[1:]) if (g := vertical_gap(a, b)) is not None]
    normal = None
    if gaps:
        # most populous cluster; ties go to the smallest spacing
        normal = max(cluster_1d(gaps, tau_spacing), key=lambda c: (len(c), -c.representative))

    return PageFrame(
        right_margin_x=right_margin,
        left_clusters=tuple(cluster_1d(x0s, tau_x)),
        normal_spacing=normal,
        header_threshold_y=top - REGION_FRACTION * span,
        footer_threshold_y=bottom + REGION_FRACTION * span,
        tau_x=tau_x,
        tau_spacing=tau_spacing,
        tau_center=tau_center,
    )


def compare_positions(a: float, b: float, tol: float) -> Indent:
    if abs(a - b) <= tol:
        return Indent.SAME
    return Indent.DEEPER if b > a else Indent.SHALLOWER


def indentation_relation(b1: TextBlock, b2: TextBlock, frame: PageFrame) -> Indent:
    i1 = frame.left_cluster_index(b1.x0)
    i2 = frame.left_cluster_index(b2.x0)
    if i1 == i2:
        return Indent.SAME
    return Indent.DEEPER if i2 > i1 else Indent.SHALLOWER


def breaks_before_margin(b: TextBlock, frame: PageFrame) -> bool:
    return b.x1 < frame.right_margin_x - frame.tau_x


def larger_spacing(b1: TextBlock, b2: TextBlock, frame: PageFrame) -> bool:
    gap = vertical_gap(b1, b2)
    if gap is None:
        return True
    normal = frame.normal_spacing
    if normal is None:
        return False
    tol = frame.tau_spacing
    return not (normal.members[0] - tol <= gap <= normal.members[-1] + tol)


def in_header(b: TextBlock, frame: PageFrame) -> bool:
    return b.y1 > frame.header_threshold_y


def in_footer(b: TextBlock, frame: PageFrame) -> bool:
    return b.y0 < frame.footer_threshold_y


def left_aligned(b: TextBlock, frame: PageFrame) -> bool:
    return frame.left_cluster_index(b.x0) == 0


def centered(b: TextBlock, frame: PageFrame) -> bool:
    body_center = (frame.body_left + frame.right_margin_x) / 2
    return abs(b.center_x - body_center) <= frame.tau_center and not left_aligned(b, frame)


def _overlap(a: TextBlock, b: TextBlock) -> float:
    w = min(a.x1, b.x1) - max(a.x0, b.x0)
    h = min(a.y1, b.y1) - max(a.y0, b.y0)
    return w * h if w > 0 and h > 0 else 0.0


def _similar(a: TextBlock, b: TextBlock) -> bool:
    if a.page == b.page:
        return False
    if _overlap(a, b) < 0.5 * min(a.area, b.area):
        return False
    longest = max(len(a.text), len(b.text))
    if abs(len(a.text) - len(b.text)) >= 0.1 * longest:
        return False
    return levenshtein(a.text, b.text) / longest < 0.1


def similar_position_flags(doc: Document) -> list[bool]:
    """For every block, whether a look-alike sits at the same spot on another page."""
    flags = [False] * len(doc)
    blocks = doc.blocks
    for i in range(len(blocks)):
        for j in range(i + 1, len(blocks)):
            if (not flags[i] or not flags[j]) and _similar(blocks[i], blocks[j]):
                flags[i] = flags[j] = True
    return flags


def similar_position_match(b: TextBlock, doc: Document) -> bool:
    return any(_similar(b, other) for other in doc.blocks if other.index != b.index)
