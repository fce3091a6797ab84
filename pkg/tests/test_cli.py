from __future__ import annotations

import json
from pathlib import Path

import pytest

from vsdstruct.cli import main


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


def tree_bytes(root: Path) -> dict[str, bytes]:
    return {str(p.relative_to(root)): p.read_bytes() for p in sorted(root.rglob("*")) if p.is_file()}


@pytest.fixture(scope="module")
def corpus_dir(tmp_path_factory):
    root = tmp_path_factory.mktemp("corpus")
    assert main(["synth", str(root), "--n-docs", "6", "--seed", "1"]) == 0
    return root


@pytest.fixture(scope="module")
def model_path(corpus_dir, tmp_path_factory):
    path = tmp_path_factory.mktemp("model") / "model.json"
    assert main(["train", str(corpus_dir), "-o", str(path), "--trees", "10"]) == 0
    return path


class TestSynth:
    def test_layout(self, corpus_dir):
        docs = sorted(p for p in corpus_dir.iterdir() if p.is_dir())
        assert len(docs) == 6
        assert all((d / "blocks.json").exists() and (d / "gold.tsv").exists() for d in docs)

    def test_byte_identical(self, tmp_path, capsys):
        run(capsys, "synth", tmp_path / "a", "--n-docs", "3", "--seed", "5", "--doc-type", "contract-txt-en")
        run(capsys, "synth", tmp_path / "b", "--n-docs", "3", "--seed", "5", "--doc-type", "contract-txt-en")
        a, b = tree_bytes(tmp_path / "a"), tree_bytes(tmp_path / "b")
        assert a == b and any(k.endswith("source.txt") for k in a)

    def test_gold_validates(self, corpus_dir, capsys):
        code, out, _ = run(capsys, "validate", corpus_dir)
        assert code == 0 and "all annotations valid" in out


class TestValidate:
    def test_up_without_pointer(self, tmp_path, capsys):
        doc = tmp_path / "doc"
        doc.mkdir()
        (doc / "source.txt").write_text("1. a\n   (a) b\n2. c\n", encoding="utf-8")
        (doc / "gold.tsv").write_text("0\td\t-\n1\tu\t-\n2\ts\t-\n", encoding="utf-8")
        code, out, err = run(capsys, "validate", tmp_path)
        assert code == 2
        assert "UP requires pointer" in out and "block 1" in out
        assert "1 document(s) failed" in err

    def test_structural_problem(self, tmp_path, capsys):
        doc = tmp_path / "doc"
        doc.mkdir()
        (doc / "source.txt").write_text("a\nb\n", encoding="utf-8")
        (doc / "gold.tsv").write_text("0\tc\t-\n1\tc\t-\n", encoding="utf-8")
        code, out, _ = run(capsys, "validate", tmp_path)
        assert code == 2 and "sentinel" in out

    def test_missing_corpus(self, tmp_path, capsys):
        code, _, err = run(capsys, "validate", tmp_path / "nope")
        assert code == 1 and err.startswith("error:")


class TestIngest:
    def test_plain_text(self, tmp_path, capsys):
        src = tmp_path / "nda.txt"
        src.write_text("AGREEMENT\n\n1. Term\n   text\n", encoding="utf-8")
        code, out, _ = run(capsys, "ingest", src, "-o", tmp_path / "store")
        assert code == 0 and "3 blocks" in out
        assert (tmp_path / "store" / "nda" / "source.txt").read_text(encoding="utf-8") == src.read_text(encoding="utf-8")

    def test_block_json(self, tmp_path, capsys):
        src = tmp_path / "in.json"
        src.write_text(json.dumps({"doc_id": "x1", "doc_type": "contract-pdf-en", "blocks": [{"text": "t", "page": 1, "bbox": [1, 2, 3, 4]}]}))
        code, _, _ = run(capsys, "ingest", src, "-o", tmp_path / "store")
        assert code == 0 and (tmp_path / "store" / "x1" / "blocks.json").exists()

    def test_bad_json_reports_location(self, tmp_path, capsys):
        src = tmp_path / "bad.json"
        src.write_text("{oops")
        code, _, err = run(capsys, "ingest", src, "-o", tmp_path / "store")
        assert code == 1 and "bad.json" in err


class TestTrainPredict:
    def test_predict(self, model_path, corpus_dir, tmp_path, capsys):
        code, _, _ = run(capsys, "predict", model_path, corpus_dir, "-o", tmp_path / "pred")
        assert code == 0
        files = sorted((tmp_path / "pred").glob("*.json"))
        assert len(files) == 6
        obj = json.loads(files[0].read_text(encoding="utf-8"))
        assert set(obj) == {"labels", "pointers", "tree", "paragraph_texts"}

    def test_predict_byte_identical(self, model_path, corpus_dir, tmp_path, capsys):
        run(capsys, "predict", model_path, corpus_dir, "-o", tmp_path / "a")
        run(capsys, "predict", model_path, corpus_dir, "-o", tmp_path / "b")
        assert tree_bytes(tmp_path / "a") == tree_bytes(tmp_path / "b")

    def test_train_byte_identical(self, corpus_dir, model_path, tmp_path, capsys):
        run(capsys, "train", corpus_dir, "-o", tmp_path / "again.json", "--trees", "10")
        assert (tmp_path / "again.json").read_bytes() == model_path.read_bytes()

    def test_doc_type_mismatch(self, model_path, tmp_path, capsys):
        run(capsys, "synth", tmp_path / "ja", "--n-docs", "1", "--doc-type", "contract-pdf-ja")
        code, _, err = run(capsys, "predict", model_path, tmp_path / "ja", "-o", tmp_path / "out")
        assert code == 1
        assert "contract-pdf-ja" in err and "contract-pdf-en" in err

    def test_ablation_and_no_scorer(self, corpus_dir, tmp_path, capsys):
        out = tmp_path / "m.json"
        code, _, _ = run(capsys, "train", corpus_dir, "-o", out, "--trees", "5", "--scorer", "none", "--disable-feature", "S1", "--disable-feature", "V10")
        assert code == 0
        obj = json.loads(out.read_text(encoding="utf-8"))
        assert obj["disabled_features"] == ["S1", "V10"]
        assert not any(c.startswith(("S1.", "V10.")) for c in obj["transition_schema"])

    def test_external_scorer_needs_command(self, corpus_dir, tmp_path, capsys, monkeypatch):
        monkeypatch.delenv("VSD_SCORER_CMD", raising=False)
        code, _, err = run(capsys, "train", corpus_dir, "-o", tmp_path / "m.json", "--scorer", "external")
        assert code == 1 and "VSD_SCORER_CMD" in err

    def test_mixed_types_rejected(self, corpus_dir, tmp_path, capsys):
        code, _, err = run(capsys, "train", corpus_dir, "-o", tmp_path / "m.json", "--doc-type", "law-pdf-en")
        assert code == 1 and "law-pdf-en" in err


class TestEvaluate:
    def test_json_report(self, corpus_dir, tmp_path, capsys):
        out = tmp_path / "report.json"
        code, _, _ = run(capsys, "evaluate", corpus_dir, "--folds", "3", "--trees", "5", "--format", "json", "-o", out)
        assert code == 0
        rep = json.loads(out.read_text(encoding="utf-8"))
        assert set(rep["systems"]) == {"ours", "numbering", "visual"}
        for system in rep["systems"].values():
            for mode in ("micro", "macro"):
                r = system[mode]
                assert {"relations", "pair_accuracy", "boundary", "elimination", "transition_accuracy", "average_f1"} <= set(r)
                assert r["pair_accuracy"] is not None

    def test_table(self, corpus_dir, capsys):
        code, out, _ = run(capsys, "evaluate", corpus_dir, "--folds", "2", "--trees", "3", "--format", "table")
        assert code == 0 and "Relationship matrix" in out


class TestFeatures:
    def test_csv_dump(self, corpus_dir, tmp_path, capsys):
        doc = sorted(p for p in corpus_dir.iterdir() if p.is_dir())[0]
        out = tmp_path / "f.csv"
        code, _, _ = run(capsys, "features", doc, "--gold-mask", "-o", out)
        assert code == 0
        lines = out.read_text(encoding="utf-8").splitlines()
        assert lines[0].startswith("block,S1.1-2-3.f1")
        assert len(lines) == 1 + len(json.loads((doc / "blocks.json").read_text(encoding="utf-8"))["blocks"])
