"""Pairwise-relation, boundary, elimination and transition metrics."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from typing import Callable, Sequence

import numpy as np

from .blocks import TransitionAnnotation
from .pipeline import Corpus, TrainConfig, numbering_baseline, predict, train, visual_baseline
from .tree import DocumentTree, Relation, boundary_vector, build_tree, relationship_matrix

RELATIONS = {
    "same_paragraph": Relation.SAME_PARAGRAPH,
    "sibling": Relation.SIBLING,
    "ancestor_descendant": Relation.ANCESTOR_DESCENDANT,
}
SYSTEMS = ("ours", "numbering", "visual")

Parsed = tuple[TransitionAnnotation, DocumentTree]


@dataclass
class Confusion:
    tp: int = 0
    fp: int = 0
    fn: int = 0

    def __add__(self, other: Confusion) -> Confusion:
        return Confusion(self.tp + other.tp, self.fp + other.fp, self.fn + other.fn)

    @classmethod
    def from_masks(cls, gold: np.ndarray, pred: np.ndarray) -> Confusion:
        return cls(int(np.sum(gold & pred)), int(np.sum(~gold & pred)), int(np.sum(gold & ~pred)))


@dataclass
class DocumentScore:
    doc_id: str
    relations: dict[str, Confusion]
    pair_correct: int
    pair_total: int
    boundary: Confusion
    elimination: Confusion
    transition_correct: int
    transition_total: int


@dataclass(frozen=True)
class PRF:
    precision: float | None
    recall: float | None
    f1: float | None
    precision_undefined: bool = False
    recall_undefined: bool = False

    @property
    def applicable(self) -> bool:
        return self.f1 is not None

    @classmethod
    def not_applicable(cls) -> PRF:
        return cls(None, None, None)

    @classmethod
    def from_counts(cls, c: Confusion) -> PRF:
        """Zero denominators give 0 with a flag; no counts at all is not applicable."""
        if c.tp + c.fp + c.fn == 0:
            return cls.not_applicable()
        p_undef = c.tp + c.fp == 0
        r_undef = c.tp + c.fn == 0
        p = 0.0 if p_undef else c.tp / (c.tp + c.fp)
        r = 0.0 if r_undef else c.tp / (c.tp + c.fn)
        f = 2 * p * r / (p + r) if p + r > 0 else 0.0
        return cls(p, r, f, p_undef, r_undef)


@dataclass(frozen=True)
class MetricReport:
    mode: str
    n_documents: int
    relations: dict[str, PRF]
    pair_accuracy: float | None
    boundary: PRF
    elimination: PRF
    transition_accuracy: float | None
    average_f1: float | None
    skipped: dict[str, int] = field(default_factory=dict)

    def to_json(self) -> dict:
        return asdict(self)


def score_document(gold: Parsed, pred: Parsed, doc_id: str = "") -> DocumentScore:
    g_ann, g_tree = gold
    p_ann, p_tree = pred
    n = len(g_ann)
    if len(p_ann) != n:
        raise ValueError(f"block count mismatch: gold {n}, prediction {len(p_ann)}")
    gm = relationship_matrix(g_tree, n)
    pm = relationship_matrix(p_tree, n)
    upper = np.triu_indices(n, k=1)
    g_pairs, p_pairs = gm[upper], pm[upper]
    relations = {name: Confusion.from_masks(g_pairs == code, p_pairs == code) for name, code in RELATIONS.items()}

    gb = np.array(boundary_vector(g_ann), dtype=bool)
    pb = np.array(boundary_vector(p_ann), dtype=bool)
    ge = np.array(g_ann.omitted_mask, dtype=bool)
    pe = np.array(p_ann.omitted_mask, dtype=bool)

    sentinel = g_ann.last_retained()
    keep = [i for i in range(n) if i != sentinel]
    correct = sum(g_ann.labels[i] == p_ann.labels[i] for i in keep)
    return DocumentScore(
        doc_id=doc_id,
        relations=relations,
        pair_correct=int(np.sum(g_pairs == p_pairs)),
        pair_total=len(g_pairs),
        boundary=Confusion.from_masks(gb, pb),
        elimination=Confusion.from_masks(ge, pe),
        transition_correct=int(correct),
        transition_total=len(keep),
    )


def _mean(values: list[float]) -> float | None:
    return sum(values) / len(values) if values else None


def _macro_prf(confusions: list[Confusion]) -> tuple[PRF, int]:
    """Average per-document P/R/F over documents that have gold positives."""
    kept = [c for c in confusions if c.tp + c.fn > 0]
    skipped = len(confusions) - len(kept)
    if not kept:
        return PRF.not_applicable(), skipped
    per_doc = [PRF.from_counts(c) for c in kept]
    return (
        PRF(
            _mean([m.precision for m in per_doc]),
            _mean([m.recall for m in per_doc]),
            _mean([m.f1 for m in per_doc]),
            any(m.precision_undefined for m in per_doc),
            any(m.recall_undefined for m in per_doc),
        ),
        skipped,
    )


def _average_f1(relations: dict[str, PRF]) -> float | None:
    return _mean([m.f1 for m in relations.values() if m.f1 is not None])


def aggregate(scores: Sequence[DocumentScore], mode: str = "micro") -> MetricReport:
    if not scores:
        raise ValueError("aggregate needs at least one document score")
    if mode == "micro":
        def pooled(get: Callable[[DocumentScore], Confusion]) -> PRF:
            total = Confusion()
            for s in scores:
                total = total + get(s)
            return PRF.from_counts(total)

        relations = {name: pooled(lambda s, name=name: s.relations[name]) for name in RELATIONS}
        pair_total = sum(s.pair_total for s in scores)
        trans_total = sum(s.transition_total for s in scores)
        return MetricReport(
            mode="micro",
            n_documents=len(scores),
            relations=relations,
            pair_accuracy=sum(s.pair_correct for s in scores) / pair_total if pair_total else None,
            boundary=pooled(lambda s: s.boundary),
            elimination=pooled(lambda s: s.elimination),
            transition_accuracy=sum(s.transition_correct for s in scores) / trans_total if trans_total else None,
            average_f1=_average_f1(relations),
        )
    if mode == "macro":
        skipped: dict[str, int] = {}
        relations = {}
        for name in RELATIONS:
            relations[name], skipped[name] = _macro_prf([s.relations[name] for s in scores])
        boundary, skipped["boundary"] = _macro_prf([s.boundary for s in scores])
        elimination, skipped["elimination"] = _macro_prf([s.elimination for s in scores])
        return MetricReport(
            mode="macro",
            n_documents=len(scores),
            relations=relations,
            pair_accuracy=_mean([s.pair_correct / s.pair_total for s in scores if s.pair_total]),
            boundary=boundary,
            elimination=elimination,
            transition_accuracy=_mean([s.transition_correct / s.transition_total for s in scores if s.transition_total]),
            average_f1=_average_f1(relations),
            skipped=skipped,
        )
    raise ValueError(f"mode must be 'micro' or 'macro', not {mode!r}")


# --------------------------------------------------------------------------
# Cross-validation
# --------------------------------------------------------------------------


@dataclass
class SystemReport:
    micro: MetricReport
    macro: MetricReport
    documents: list[DocumentScore] = field(repr=False, default_factory=list)

    def to_json(self) -> dict:
        return {"micro": self.micro.to_json(), "macro": self.macro.to_json()}


@dataclass
class CrossValidation:
    k: int
    seed: int
    folds: list[list[str]]
    systems: dict[str, SystemReport]

    def to_json(self) -> dict:
        return {
            "k": self.k,
            "seed": self.seed,
            "folds": self.folds,
            "systems": {name: rep.to_json() for name, rep in self.systems.items()},
        }


def fold_assignment(n_docs: int, k: int, seed: int) -> list[list[int]]:
    if k < 2:
        raise ValueError("need at least 2 folds")
    if n_docs < k:
        raise ValueError(f"corpus of {n_docs} documents is smaller than k={k}")
    perm = np.random.default_rng(seed).permutation(n_docs)
    return [sorted(int(i) for i in part) for part in np.array_split(perm, k)]


def gold_parse(ann: TransitionAnnotation) -> Parsed:
    return ann, build_tree(ann)


def cross_validate(
    corpus: Corpus,
    k: int = 5,
    seed: int = 0,
    config: TrainConfig | None = None,
    systems: Sequence[str] = SYSTEMS,
) -> CrossValidation:
    unknown = set(systems) - set(SYSTEMS)
    if unknown:
        raise ValueError(f"unknown system(s): {', '.join(sorted(unknown))}")
    folds = fold_assignment(len(corpus), k, seed)
    config = config or TrainConfig.with_seed(seed)
    per_system: dict[str, list[DocumentScore | None]] = {name: [None] * len(corpus) for name in systems}

    for held_out in folds:
        held = set(held_out)
        if "ours" in systems:
            bundle = train([corpus[i] for i in range(len(corpus)) if i not in held], config)
        for i in held_out:
            doc, ann = corpus[i]
            gold = gold_parse(ann)
            if "ours" in systems:
                per_system["ours"][i] = score_document(gold, predict(doc, bundle), doc.doc_id)
            if "numbering" in systems:
                per_system["numbering"][i] = score_document(gold, numbering_baseline(doc), doc.doc_id)
            if "visual" in systems:
                per_system["visual"][i] = score_document(gold, visual_baseline(doc), doc.doc_id)

    reports = {}
    for name in systems:
        scores = [s for s in per_system[name] if s is not None]
        reports[name] = SystemReport(aggregate(scores, "micro"), aggregate(scores, "macro"), scores)
    return CrossValidation(k, seed, [[corpus[i][0].doc_id for i in f] for f in folds], reports)


# --------------------------------------------------------------------------
# Plain-text table
# --------------------------------------------------------------------------


def _fmt(x: float | None) -> str:
    return "n/a" if x is None or (isinstance(x, float) and math.isnan(x)) else f"{x:.3f}"


def format_table(systems: dict[str, SystemReport]) -> str:
    names = list(systems)
    head = f"{'':<28}" + "".join(f"{n + ' micro':>16}{n + ' macro':>16}" for n in names)
    lines = [head, "-" * len(head)]

    def row(label: str, get: Callable[[MetricReport], float | None]) -> None:
        cells = "".join(f"{_fmt(get(systems[n].micro)):>16}{_fmt(get(systems[n].macro)):>16}" for n in names)
        lines.append(f"{label:<28}{cells}")

    lines.append("Relationship matrix")
    row("  accuracy", lambda r: r.pair_accuracy)
    for name in RELATIONS:
        pretty = name.replace("_", "-")
        row(f"  {pretty} P", lambda r, name=name: r.relations[name].precision)
        row(f"  {pretty} R", lambda r, name=name: r.relations[name].recall)
        row(f"  {pretty} F1", lambda r, name=name: r.relations[name].f1)
    row("  average F1", lambda r: r.average_f1)
    lines.append("Paragraph boundary")
    row("  P", lambda r: r.boundary.precision)
    row("  R", lambda r: r.boundary.recall)
    row("  F1", lambda r: r.boundary.f1)
    lines.append("Block elimination")
    row("  P", lambda r: r.elimination.precision)
    row("  R", lambda r: r.elimination.recall)
    row("  F1", lambda r: r.elimination.f1)
    row("Transition accuracy", lambda r: r.transition_accuracy)
    return "\n".join(lines) + "\n"
