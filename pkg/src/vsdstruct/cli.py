"""Command-line entry point.

A corpus is a directory tree; every directory holding ``blocks.json`` or
``source.txt`` is one document, optionally with a ``gold.tsv`` annotation.

Exit codes: 0 success, 1 error, 2 validation failures.
"""

from __future__ import annotations

import argparse
import io
import json
import os
import sys
import tempfile
from dataclasses import replace
from pathlib import Path

from .blocks import (
    DOC_TYPES,
    TEXT_DOC_TYPES,
    Document,
    FormatError,
    TransitionAnnotation,
    document_to_json,
    ingest_pdf_blocks,
    ingest_plaintext,
    parse_annotation,
    read_annotation,
    render_plaintext,
    validate_annotation,
    write_annotation,
)
from .evaluation import cross_validate, format_table
from .features import DocumentFeatures, all_feature_names, build_registry, transition_feature_matrix, write_feature_csv
from .forest import ForestConfig
from .pipeline import BundleError, ModelBundle, TrainConfig, predict, prediction_json, train
from .semantic import ScorerError
from .synth import STYLES, SynthSpec, synth

BLOCKS_FILE = "blocks.json"
SOURCE_FILE = "source.txt"
GOLD_FILE = "gold.tsv"
SCORER_ENV = "VSD_SCORER_CMD"


class CliError(Exception):
    pass


def write_atomic(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def dump_json(obj) -> str:
    return json.dumps(obj, indent=2, ensure_ascii=False, sort_keys=False) + "\n"


# --------------------------------------------------------------------------
# corpus discovery
# --------------------------------------------------------------------------


def document_dirs(root: Path) -> list[Path]:
    if not root.exists():
        raise CliError(f"{root}: no such file or directory")
    found = sorted(
        {p.parent for name in (BLOCKS_FILE, SOURCE_FILE) for p in root.rglob(name)},
        key=lambda p: str(p),
    )
    if not found:
        raise CliError(f"{root}: no documents found (expected {BLOCKS_FILE} or {SOURCE_FILE})")
    return found


def load_document(path: Path, doc_type: str | None = None) -> Document:
    blocks = path / BLOCKS_FILE
    if blocks.exists():
        with open(blocks, encoding="utf-8") as fh:
            doc = ingest_pdf_blocks(fh, source=str(blocks))
        return doc
    source = path / SOURCE_FILE
    text = source.read_text(encoding="utf-8")
    dt = doc_type if doc_type in TEXT_DOC_TYPES else "contract-txt-en"
    try:
        return ingest_plaintext(text, path.name, dt)
    except FormatError as exc:
        raise FormatError(str(exc), source=str(source)) from None


def load_gold(path: Path, doc: Document, strict: bool = True) -> TransitionAnnotation:
    gold = path / GOLD_FILE
    if not gold.exists():
        raise CliError(f"{gold}: missing gold annotation")
    with open(gold, encoding="utf-8") as fh:
        if strict:
            return read_annotation(fh, len(doc), source=str(gold))
        return parse_annotation(fh, source=str(gold))


def load_corpus(root: Path, doc_type: str | None) -> list[tuple[Document, TransitionAnnotation]]:
    corpus = []
    for d in document_dirs(root):
        doc = load_document(d, doc_type)
        if doc_type and doc.doc_type != doc_type:
            raise CliError(f"{d}: document type {doc.doc_type} differs from --doc-type {doc_type}")
        ann = load_gold(d, doc)
        problems = validate_annotation(doc, ann)
        if problems:
            raise CliError(f"{d / GOLD_FILE}: {problems[0]}")
        corpus.append((doc, ann))
    return corpus


def save_document(doc: Document, out_dir: Path, ann: TransitionAnnotation | None = None) -> Path:
    target = out_dir / doc.doc_id
    if doc.is_text:
        write_atomic(target / SOURCE_FILE, render_plaintext(doc))
    else:
        write_atomic(target / BLOCKS_FILE, dump_json(document_to_json(doc)))
    if ann is not None:
        write_atomic(target / GOLD_FILE, write_annotation(ann))
    return target


# --------------------------------------------------------------------------
# commands
# --------------------------------------------------------------------------


def _train_config(args: argparse.Namespace) -> TrainConfig:
    scorer_cmd = args.scorer_cmd or os.environ.get(SCORER_ENV)
    if args.scorer == "external" and not scorer_cmd:
        raise CliError(f"--scorer external needs --scorer-cmd or ${SCORER_ENV}")
    base = TrainConfig.with_seed(
        args.seed,
        scorer=args.scorer,
        scorer_cmd=scorer_cmd if args.scorer == "external" else None,
        disabled_features=tuple(args.disable_feature or ()),
    )
    return replace(
        base,
        transition_forest=replace(base.transition_forest, n_trees=args.trees),
        pointer_forest=replace(base.pointer_forest, n_trees=args.trees),
    )


def cmd_synth(args: argparse.Namespace) -> int:
    spec = SynthSpec(
        n_docs=args.n_docs,
        doc_type=args.doc_type,
        max_depth=args.max_depth,
        styles=tuple(args.style or STYLES),
        debris_rate=args.debris_rate,
    )
    out = Path(args.output)
    for doc, ann in synth(spec, args.seed):
        save_document(doc, out, ann)
    print(f"wrote {spec.n_docs} documents to {out}")
    return 0


def cmd_ingest(args: argparse.Namespace) -> int:
    src = Path(args.input)
    if not src.is_file():
        raise CliError(f"{src}: no such file")
    if src.suffix == ".json":
        with open(src, encoding="utf-8") as fh:
            doc = ingest_pdf_blocks(fh, source=str(src))
    else:
        if args.doc_type not in TEXT_DOC_TYPES:
            raise CliError(f"{src}: plain text needs a text --doc-type ({', '.join(sorted(TEXT_DOC_TYPES))})")
        doc = ingest_plaintext(src.read_text(encoding="utf-8"), args.doc_id or src.stem, args.doc_type)
    target = save_document(doc, Path(args.output))
    print(f"{target}: {len(doc)} blocks")
    return 0


def cmd_validate(args: argparse.Namespace) -> int:
    failures = 0
    for d in document_dirs(Path(args.corpus)):
        doc = load_document(d, args.doc_type)
        gold = d / GOLD_FILE
        try:
            ann = load_gold(d, doc, strict=False)
        except FormatError as exc:
            print(exc)
            failures += 1
            continue
        problems = validate_annotation(doc, ann)
        for p in problems:
            print(f"{gold}: {p}")
        failures += bool(problems)
    if failures:
        print(f"{failures} document(s) failed validation", file=sys.stderr)
        return 2
    print("all annotations valid")
    return 0


def cmd_train(args: argparse.Namespace) -> int:
    corpus = load_corpus(Path(args.corpus), args.doc_type)
    bundle = train(corpus, _train_config(args))
    write_atomic(Path(args.output), bundle.dumps())
    degenerate = " (pointer model degenerate)" if bundle.pointer_degenerate else ""
    print(f"trained on {len(corpus)} documents, wrote {args.output}{degenerate}")
    return 0


def cmd_predict(args: argparse.Namespace) -> int:
    bundle = ModelBundle.load(args.model)
    out = Path(args.output)
    for root in args.inputs:
        for d in document_dirs(Path(root)):
            doc = load_document(d, bundle.doc_type)
            ann, tree = predict(doc, bundle)
            write_atomic(out / f"{doc.doc_id}.json", dump_json(prediction_json(doc, ann, tree)))
    print(f"predictions written to {out}")
    return 0


def cmd_evaluate(args: argparse.Namespace) -> int:
    corpus = load_corpus(Path(args.corpus), args.doc_type)
    cv = cross_validate(corpus, k=args.folds, seed=args.seed, config=_train_config(args))
    text = dump_json(cv.to_json()) if args.format == "json" else format_table(cv.systems)
    if args.output:
        write_atomic(Path(args.output), text)
        print(f"report written to {args.output}")
    else:
        sys.stdout.write(text)
    return 0


def cmd_features(args: argparse.Namespace) -> int:
    d = Path(args.document)
    doc = load_document(d, args.doc_type)
    registry = build_registry(doc.doc_type, args.disable_feature or ())
    mask = None
    if args.gold_mask:
        mask = load_gold(d, doc).omitted_mask
    matrix, schema = transition_feature_matrix(doc, mask, registry, ext=DocumentFeatures(doc))
    if args.output:
        buf = io.StringIO()
        write_feature_csv(matrix, schema, buf)
        write_atomic(Path(args.output), buf.getvalue())
    else:
        write_feature_csv(matrix, schema, sys.stdout)
    return 0


# --------------------------------------------------------------------------
# parser
# --------------------------------------------------------------------------


def _add_training_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--trees", type=int, default=ForestConfig().n_trees, help="trees per forest")
    p.add_argument("--scorer", choices=("internal", "none", "external"), default="internal")
    p.add_argument("--scorer-cmd", help=f"external scorer command line (default: ${SCORER_ENV})")
    p.add_argument(
        "--disable-feature",
        action="append",
        metavar="NAME",
        choices=all_feature_names(),
        help="drop a named feature; repeatable",
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="vsdstruct", description="Paragraph structure extraction for contracts")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate a synthetic annotated corpus")
    p.add_argument("output")
    p.add_argument("--n-docs", type=int, default=40)
    p.add_argument("--doc-type", choices=DOC_TYPES, default="contract-pdf-en")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--max-depth", type=int, default=3)
    p.add_argument("--style", action="append", choices=STYLES, help="rendering style; repeatable")
    p.add_argument("--debris-rate", type=float, default=0.05)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("ingest", help="convert block JSON or plain text into the corpus layout")
    p.add_argument("input")
    p.add_argument("-o", "--output", required=True, help="corpus directory")
    p.add_argument("--doc-type", choices=DOC_TYPES, default="contract-txt-en")
    p.add_argument("--doc-id")
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("validate", help="check gold annotations")
    p.add_argument("corpus")
    p.add_argument("--doc-type", choices=DOC_TYPES)
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("train", help="train a model bundle")
    p.add_argument("corpus")
    p.add_argument("-o", "--output", required=True)
    p.add_argument("--doc-type", choices=DOC_TYPES)
    _add_training_flags(p)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("predict", help="predict structure for documents")
    p.add_argument("model")
    p.add_argument("inputs", nargs="+")
    p.add_argument("-o", "--output", required=True, help="directory for prediction JSON")
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("evaluate", help="k-fold cross-validation against both baselines")
    p.add_argument("corpus")
    p.add_argument("--doc-type", choices=DOC_TYPES)
    p.add_argument("--folds", type=int, default=5)
    p.add_argument("--format", choices=("json", "table"), default="table")
    p.add_argument("-o", "--output")
    _add_training_flags(p)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("features", help="dump the transition feature matrix as CSV")
    p.add_argument("document", help="document directory")
    p.add_argument("--doc-type", choices=DOC_TYPES)
    p.add_argument("--gold-mask", action="store_true", help="skip gold OMITTED blocks in contexts")
    p.add_argument("--disable-feature", action="append", metavar="NAME", choices=all_feature_names())
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_features)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (CliError, FormatError, BundleError, ScorerError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
