"""Training, two-pass inference, pointer resolution and the rule baselines."""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from . import textcues as tc
from .blocks import Document, Label, TransitionAnnotation
from .features import (
    POINTER_SCHEMA,
    DocumentFeatures,
    Registry,
    build_registry,
    pointer_candidates,
    pointer_feature_rows,
    schema_fingerprint,
    transition_feature_matrix,
)
from .forest import ForestConfig, ForestFormatError, RandomForest
from .layout import Indent, PageFrame, indentation_relation, larger_spacing, page_frame
from .semantic import CharNGramModel, ExternalScorer, Scorer, train_ngram
from .tree import DocumentTree, TreeBuilder, tree_to_annotation

BUNDLE_FORMAT_VERSION = 1
SCORER_CHOICES = ("internal", "none", "external")
RETAINED_LABELS = (Label.CONTINUOUS, Label.CONSECUTIVE, Label.DOWN, Label.UP)


class BundleError(ValueError):
    pass


@dataclass(frozen=True)
class TrainConfig:
    transition_forest: ForestConfig = field(default_factory=ForestConfig)
    pointer_forest: ForestConfig = field(default_factory=ForestConfig)
    scorer: str = "internal"
    scorer_cmd: str | None = None
    disabled_features: tuple[str, ...] = ()
    ngram_order: int = 5
    ngram_k: float = 0.1

    def __post_init__(self) -> None:
        if self.scorer not in SCORER_CHOICES:
            raise ValueError(f"scorer must be one of {', '.join(SCORER_CHOICES)}")
        if self.scorer == "external" and not self.scorer_cmd:
            raise ValueError("external scorer needs a command")

    @classmethod
    def with_seed(cls, seed: int, **kwargs) -> TrainConfig:
        return cls(ForestConfig(seed=seed), ForestConfig(seed=seed + 1), **kwargs)


@dataclass
class ModelBundle:
    doc_type: str
    transition_forest: RandomForest
    pointer_forest: RandomForest | None  # None marks a degenerate pointer model
    transition_schema: list[str]
    pointer_schema: list[str]
    disabled_features: tuple[str, ...] = ()
    scorer_kind: str = "none"
    scorer_cmd: str | None = None
    ngram: CharNGramModel | None = None
    _scorer: Scorer | None = field(default=None, init=False, repr=False, compare=False)

    @property
    def pointer_degenerate(self) -> bool:
        return self.pointer_forest is None

    @property
    def registry(self) -> Registry:
        return build_registry(self.doc_type, self.disabled_features)

    def scorer(self) -> Scorer | None:
        if self._scorer is None:
            if self.scorer_kind == "internal":
                self._scorer = self.ngram
            elif self.scorer_kind == "external":
                self._scorer = ExternalScorer(self.scorer_cmd)
        return self._scorer

    def to_json(self) -> dict:
        return {
            "format": "vsdstruct-bundle",
            "version": BUNDLE_FORMAT_VERSION,
            "doc_type": self.doc_type,
            "disabled_features": list(self.disabled_features),
            "transition_schema": self.transition_schema,
            "transition_schema_sha256": schema_fingerprint(self.transition_schema),
            "pointer_schema": self.pointer_schema,
            "pointer_schema_sha256": schema_fingerprint(self.pointer_schema),
            "scorer": {
                "kind": self.scorer_kind,
                "command": self.scorer_cmd,
                "ngram": self.ngram.to_json() if self.ngram is not None else None,
            },
            "transition_forest": self.transition_forest.to_json(),
            "pointer_forest": self.pointer_forest.to_json() if self.pointer_forest is not None else None,
        }

    @classmethod
    def from_json(cls, obj: dict) -> ModelBundle:
        if not isinstance(obj, dict) or obj.get("format") != "vsdstruct-bundle":
            raise BundleError("not a model bundle")
        if obj.get("version") != BUNDLE_FORMAT_VERSION:
            raise BundleError(f"bundle version {obj.get('version')!r} is not supported")
        try:
            t_schema = list(obj["transition_schema"])
            p_schema = list(obj["pointer_schema"])
            if schema_fingerprint(t_schema) != obj["transition_schema_sha256"]:
                raise BundleError("transition schema fingerprint mismatch")
            if schema_fingerprint(p_schema) != obj["pointer_schema_sha256"]:
                raise BundleError("pointer schema fingerprint mismatch")
            disabled = tuple(obj.get("disabled_features", ()))
            expected = build_registry(obj["doc_type"], disabled).schema
            if expected != t_schema:
                raise BundleError("transition schema does not match the feature registry of this build")
            if p_schema != POINTER_SCHEMA:
                raise BundleError("pointer schema does not match this build")
            sc = obj["scorer"]
            bundle = cls(
                doc_type=obj["doc_type"],
                transition_forest=RandomForest.from_json(obj["transition_forest"]),
                pointer_forest=RandomForest.from_json(obj["pointer_forest"]) if obj["pointer_forest"] else None,
                transition_schema=t_schema,
                pointer_schema=p_schema,
                disabled_features=disabled,
                scorer_kind=sc["kind"],
                scorer_cmd=sc.get("command"),
                ngram=CharNGramModel.from_json(sc["ngram"]) if sc.get("ngram") else None,
            )
        except (KeyError, TypeError) as exc:
            raise BundleError(f"corrupt bundle: {exc}") from exc
        except ForestFormatError as exc:
            raise BundleError(str(exc)) from exc
        if bundle.transition_forest.n_features_ != len(t_schema):
            raise BundleError("transition forest width does not match its schema")
        return bundle

    def dumps(self) -> str:
        return json.dumps(self.to_json(), separators=(",", ":"), ensure_ascii=False)

    def save(self, path: str | os.PathLike) -> None:
        tmp = f"{path}.tmp"
        with open(tmp, "w", encoding="utf-8") as fh:
            fh.write(self.dumps())
        os.replace(tmp, path)

    @classmethod
    def load(cls, path: str | os.PathLike) -> ModelBundle:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
        try:
            obj = json.loads(text)
        except json.JSONDecodeError as exc:
            raise BundleError(f"{path}: truncated or malformed bundle ({exc.msg})") from exc
        return cls.from_json(obj)


Corpus = Sequence[tuple[Document, TransitionAnnotation]]


def _make_scorer(corpus: Corpus, config: TrainConfig) -> tuple[Scorer | None, CharNGramModel | None]:
    if config.scorer == "internal":
        model = train_ngram((b.text for doc, _ in corpus for b in doc.blocks), config.ngram_order, config.ngram_k)
        return model, model
    if config.scorer == "external":
        return ExternalScorer(config.scorer_cmd), None
    return None, None


def train(corpus: Corpus, config: TrainConfig | None = None) -> ModelBundle:
    config = config or TrainConfig()
    if len(corpus) < 2:
        raise ValueError("training needs at least 2 annotated documents")
    doc_types = sorted({doc.doc_type for doc, _ in corpus})
    if len(doc_types) != 1:
        raise ValueError(f"corpus mixes document types: {', '.join(doc_types)}")
    doc_type = doc_types[0]
    registry = build_registry(doc_type, config.disabled_features)
    scorer, ngram = _make_scorer(corpus, config)

    t_rows, t_labels, p_rows, p_targets = [], [], [], []
    for doc, ann in corpus:
        if len(ann) != len(doc):
            raise ValueError(f"{doc.doc_id}: annotation length differs from block count")
        ext = DocumentFeatures(doc, scorer=scorer)
        X, schema = transition_feature_matrix(doc, ann.omitted_mask, registry, ext=ext)
        if schema != registry.schema:
            raise ValueError(f"{doc.doc_id}: feature schema mismatch")
        t_rows.append(X)
        t_labels.extend(int(lab) for lab in ann.labels)
        pairs, P = pointer_feature_rows(ext, ann.labels)
        p_rows.append(P)
        p_targets.extend(int(ann.pointers[i] == j) for j, i in pairs)

    transition = RandomForest(config.transition_forest).fit(np.vstack(t_rows), t_labels)
    pointer = None
    if p_targets:
        pointer = RandomForest(config.pointer_forest).fit(np.vstack(p_rows), p_targets)
    return ModelBundle(
        doc_type=doc_type,
        transition_forest=transition,
        pointer_forest=pointer,
        transition_schema=registry.schema,
        pointer_schema=list(POINTER_SCHEMA),
        disabled_features=tuple(config.disabled_features),
        scorer_kind=config.scorer,
        scorer_cmd=config.scorer_cmd,
        ngram=ngram,
    )


# --------------------------------------------------------------------------
# Inference
# --------------------------------------------------------------------------


def _label_proba(forest: RandomForest, X: np.ndarray) -> np.ndarray:
    """Probabilities as an (n, 5) array indexed by Label value."""
    proba = forest.predict_proba(X)
    out = np.zeros((len(X), len(Label)))
    for col, cls in enumerate(forest.classes_):
        out[:, int(cls)] = proba[:, col]
    return out


def _same_indent_target(builder: TreeBuilder, doc: Document, frame: PageFrame, i: int) -> int | None:
    """Open ancestor holding the nearest earlier block indented like block i."""
    want = frame.left_cluster_index(doc.blocks[i].x0)
    for k in range(i - 1, -1, -1):
        if k in builder.debris or k not in builder.paragraph_of:
            continue
        if frame.left_cluster_index(doc.blocks[k].x0) == want:
            if builder.open_level(k) is not None:
                return builder.paragraph_of[k].block_indices[-1]
            break
    return builder.ancestor_down_block()


class _PointerChooser:
    def __init__(self, ext: DocumentFeatures, bundle: ModelBundle):
        self.ext = ext
        self.bundle = bundle

    def choose(self, labels: Sequence[Label], i: int, builder: TreeBuilder, nxt: int) -> int | None:
        """Pointer for UP block i, or None to demote it to CONSECUTIVE."""
        cands = pointer_candidates(labels, i)
        if not cands:
            return None
        if self.bundle.pointer_forest is None:
            return _same_indent_target(builder, self.ext.doc, self.ext.frame, nxt)
        pairs, rows = pointer_feature_rows(self.ext, labels, [i])
        p = self.bundle.pointer_forest.proba_for(rows, 1)
        best = max(range(len(pairs)), key=lambda k: (p[k], pairs[k][0]))
        target = pairs[best][0]
        if builder.open_level(target) is None:
            target = builder.ancestor_down_block()
        return target


def _assemble(labels: list[Label], choose) -> tuple[TransitionAnnotation, DocumentTree]:
    """Resolve pointers left to right, repairing anything that is not a tree."""
    n = len(labels)
    pointers: list[int | None] = [None] * n
    builder = TreeBuilder()
    prev: int | None = None
    for i in range(n):
        if labels[i] == Label.OMITTED:
            builder.omit(i)
            continue
        if prev is None:
            builder.start(i)
        else:
            move = labels[prev]
            if move == Label.UP:
                target = choose(labels, prev, builder, i)
                if target is None or builder.open_level(target) is None:
                    labels[prev] = move = Label.CONSECUTIVE
                else:
                    pointers[prev] = target
                    builder.up(i, target)
            if move == Label.CONTINUOUS:
                builder.continue_(i)
            elif move == Label.CONSECUTIVE:
                builder.sibling(i)
            elif move == Label.DOWN:
                builder.child(i)
        prev = i
    if prev is not None:
        labels[prev] = Label.CONSECUTIVE
        pointers[prev] = None
    ann = TransitionAnnotation(tuple(labels), tuple(pointers))
    return ann, builder.tree()


def predict(
    doc: Document,
    bundle: ModelBundle,
    omitted_mask: Sequence[bool] | None = None,
) -> tuple[TransitionAnnotation, DocumentTree]:
    """Two-pass transition prediction followed by pointer resolution.

    ``omitted_mask`` replaces the first pass, e.g. with gold debris positions.
    """
    if doc.doc_type != bundle.doc_type:
        raise ValueError(f"document type {doc.doc_type} does not match model type {bundle.doc_type}")
    n = len(doc)
    registry = bundle.registry
    ext = DocumentFeatures(doc, scorer=bundle.scorer())
    forest = bundle.transition_forest

    if omitted_mask is None:
        X1, _ = transition_feature_matrix(doc, [False] * n, registry, ext=ext)
        p1 = _label_proba(forest, X1)
        mask = list(np.argmax(p1, axis=1) == Label.OMITTED)
        if all(mask):
            mask[int(np.argmin(p1[:, Label.OMITTED]))] = False
    else:
        mask = [bool(m) for m in omitted_mask]
        if len(mask) != n:
            raise ValueError("omitted mask length differs from block count")
        if all(mask):
            mask[-1] = False

    X2, _ = transition_feature_matrix(doc, mask, registry, ext=ext)
    p2 = _label_proba(forest, X2)[:, : len(RETAINED_LABELS)]
    totals = p2.sum(axis=1, keepdims=True)
    p2 = np.divide(p2, totals, out=np.full_like(p2, 1 / len(RETAINED_LABELS)), where=totals > 0)
    labels = [Label.OMITTED if mask[i] else Label(int(np.argmax(p2[i]))) for i in range(n)]
    return _assemble(labels, _PointerChooser(ext, bundle).choose)


# --------------------------------------------------------------------------
# Baselines
# --------------------------------------------------------------------------


def _first_change(old: tc.NumberingMemory, new: tc.NumberingMemory) -> int | None:
    for k, entry in enumerate(new):
        if k >= len(old) or old[k] != entry:
            return k
    return None


def numbering_baseline(doc: Document) -> tuple[TransitionAnnotation, DocumentTree]:
    """Structure from the numbering automaton alone."""
    builder = TreeBuilder()
    memory: tc.NumberingMemory = ()
    level_block: list[int] = []  # block that last set each memory entry
    for i, block in enumerate(doc.blocks):
        cands = tc.numbering_candidates(block.text, doc.language)
        outcome, new_memory, _ = tc.numbering_transition(memory, cands)
        if i == 0:
            builder.start(0)
        elif outcome == tc.CONTINUOUS:
            builder.continue_(i)
        elif outcome == tc.DOWN:
            builder.child(i)
        elif outcome == tc.UP:
            target = level_block[len(new_memory) - 1]
            if builder.open_level(target) is not None:
                builder.up(i, target)
            else:
                builder.sibling(i)
        else:
            builder.sibling(i)
        k = _first_change(memory, new_memory)
        if k is not None:
            level_block = level_block[:k] + [i] + level_block[k + 1 : len(new_memory)]
        memory = new_memory
    tree = builder.tree()
    return tree_to_annotation(tree), tree


def visual_baseline(doc: Document, frame: PageFrame | None = None) -> tuple[TransitionAnnotation, DocumentTree]:
    """Structure from indentation and line spacing alone."""
    frame = frame or page_frame(doc)
    builder = TreeBuilder()
    builder.start(0)
    for i in range(1, len(doc)):
        a, b = doc.blocks[i - 1], doc.blocks[i]
        rel = indentation_relation(a, b, frame)
        if rel == Indent.SAME:
            if larger_spacing(a, b, frame):
                builder.sibling(i)
            else:
                builder.continue_(i)
        elif rel == Indent.DEEPER:
            builder.child(i)
        else:
            target = _same_indent_target(builder, doc, frame, i)
            if target is not None and builder.open_level(target) is not None:
                builder.up(i, target)
            else:
                builder.sibling(i)
    tree = builder.tree()
    return tree_to_annotation(tree), tree


# --------------------------------------------------------------------------
# Output
# --------------------------------------------------------------------------


def paragraph_texts(doc: Document, tree: DocumentTree) -> list[str]:
    sep = "" if doc.language == "ja" else " "
    return [sep.join(doc.blocks[b].text for b in node.block_indices) for node in tree.paragraphs()]


def prediction_json(doc: Document, ann: TransitionAnnotation, tree: DocumentTree) -> dict:
    return {
        "labels": [lab.letter for lab in ann.labels],
        "pointers": list(ann.pointers),
        "tree": tree.to_json(),
        "paragraph_texts": paragraph_texts(doc, tree),
    }


def predict_many(docs: Iterable[Document], bundle: ModelBundle) -> list[tuple[TransitionAnnotation, DocumentTree]]:
    return [predict(doc, bundle) for doc in docs]
