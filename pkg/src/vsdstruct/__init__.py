"""Paragraph boundaries and hierarchy for visually structured documents.

Each text block gets a transition label describing how it relates to the
next kept block; the label sequence (plus pointers for upward moves) encodes
a paragraph tree.
"""

from .blocks import (
    DOC_TYPES,
    Document,
    FormatError,
    Label,
    TextBlock,
    TransitionAnnotation,
    ingest_pdf_blocks,
    ingest_plaintext,
    make_annotation,
    read_annotation,
    validate_annotation,
    write_annotation,
)
from .evaluation import aggregate, cross_validate, score_document
from .features import build_registry, pointer_feature_rows, transition_feature_matrix
from .forest import ForestConfig, RandomForest
from .layout import cluster_1d, page_frame
from .pipeline import ModelBundle, TrainConfig, numbering_baseline, predict, train, visual_baseline
from .semantic import CharNGramModel, ExternalScorer, train_ngram
from .synth import SynthSpec, synth
from .textcues import detect_numbering, levenshtein, numbering_candidates, run_numbering
from .tree import DocumentTree, ParagraphNode, Relation, TreeBuilder, boundary_vector, build_tree, relationship_matrix, tree_to_annotation

__all__ = [
    "DOC_TYPES",
    "Document",
    "FormatError",
    "Label",
    "TextBlock",
    "TransitionAnnotation",
    "ingest_pdf_blocks",
    "ingest_plaintext",
    "make_annotation",
    "read_annotation",
    "validate_annotation",
    "write_annotation",
    "aggregate",
    "cross_validate",
    "score_document",
    "build_registry",
    "pointer_feature_rows",
    "transition_feature_matrix",
    "ForestConfig",
    "RandomForest",
    "cluster_1d",
    "page_frame",
    "ModelBundle",
    "TrainConfig",
    "numbering_baseline",
    "predict",
    "train",
    "visual_baseline",
    "CharNGramModel",
    "ExternalScorer",
    "train_ngram",
    "SynthSpec",
    "synth",
    "detect_numbering",
    "levenshtein",
    "numbering_candidates",
    "run_numbering",
    "DocumentTree",
    "ParagraphNode",
    "Relation",
    "TreeBuilder",
    "boundary_vector",
    "build_tree",
    "relationship_matrix",
    "tree_to_annotation",
]

__version__ = "0.1.0"
