from __future__ import annotations

import json
import math
import sys
import textwrap

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from vsdstruct.blocks import TextBlock
from vsdstruct.semantic import (
    UNK,
    CharNGramModel,
    ExternalScorer,
    ScorerError,
    coherence_features,
    train_ngram,
)

K = 0.1


def block(text, index=0):
    return TextBlock(index, text, 1, (0.0, 0.0, 10.0, 10.0))


@pytest.fixture(scope="module")
def model():
    corpus = [
        "The recipient shall keep the confidential information secret.",
        "The recipient shall not disclose the information to any third party.",
        "This agreement is governed by the laws of the state.",
    ]
    return train_ngram(corpus, order=5, k=K)


class TestNGram:
    def test_hand_counted_bigram(self):
        m = train_ngram(["aaaa"], order=2, k=K)
        assert m.vocab == tuple(sorted({"a", UNK}))
        # "a" follows "a" three times; the first "a" follows the start pad
        assert m.prob("a", "a") == pytest.approx((3 + K) / (3 + K * 2))

    def test_unseen_character_floor(self):
        m = train_ngram(["aaaa"], order=2, k=K)
        assert m.prob("z", "a") == pytest.approx(K / (0 + K * 2))
        assert m.prob("a", "z") == m.prob("a", UNK) > 0

    def test_empty_target(self, model):
        assert model.score("", "") == 0.0
        assert model.score("context", "") == 0.0

    def test_empty_corpus(self):
        with pytest.raises(ValueError, match="empty corpus"):
            train_ngram([])

    def test_score_non_negative_and_deterministic(self, model):
        s = model.score("The recipient", "shall keep")
        assert s >= 0
        assert s == model.score("The recipient", "shall keep")

    def test_json_round_trip(self, model):
        again = CharNGramModel.from_json(json.loads(json.dumps(model.to_json())))
        assert again.score("abc", "The recipient") == model.score("abc", "The recipient")

    def test_bad_version(self, model):
        obj = model.to_json()
        obj["version"] = 99
        with pytest.raises(ValueError):
            CharNGramModel.from_json(obj)

    @settings(max_examples=50, deadline=None)
    @given(st.text(alphabet="The recipintz\n", max_size=8))
    def test_distribution_sums_to_one(self, model, history):
        assert math.fsum(model.distribution(history).values()) == pytest.approx(1.0, abs=1e-9)


class TestCoherence:
    def test_identical_current_and_next(self, model):
        f1, _ = coherence_features(block("The recipient"), block("shall keep"), block("shall keep"), model)
        assert f1 == 0

    def test_continuation_beats_noise(self, model):
        prev = block("The recipient shall keep the")
        f1, _ = coherence_features(prev, block("confidential information secret."), block("qxzv jwqk zzxq"), model)
        assert f1 < 0

    def test_null_slot(self, model):
        assert coherence_features(None, block("a"), block("b"), model) is None
        assert coherence_features(block("a"), block("b"), None, model) is None

    @settings(max_examples=40, deadline=None)
    @given(st.text(max_size=12), st.text(max_size=12), st.text(max_size=12))
    def test_f1_antisymmetric(self, model, a, b, c):
        f1, _ = coherence_features(block(a), block(b), block(c), model)
        g1, _ = coherence_features(block(a), block(c), block(b), model)
        assert f1 == pytest.approx(-g1, abs=1e-12)


ECHO_SCORER = textwrap.dedent(
    """
    import json, sys
    for line in sys.stdin:
        req = json.loads(line)
        print(json.dumps({"nll": float(len(req["target"]))}), flush=True)
    """
)


class TestExternalScorer:
    def test_protocol(self, tmp_path):
        script = tmp_path / "scorer.py"
        script.write_text(ECHO_SCORER)
        scorer = ExternalScorer([sys.executable, str(script)])
        try:
            assert scorer.score("ctx", "abcd") == 4.0
            f1, f2 = coherence_features(block("p"), block("cc"), block("nnn"), scorer)
            assert (f1, f2) == (2.0 - 3.0, 3.0 - 3.0)
        finally:
            scorer.close()

    def test_missing_program(self):
        scorer = ExternalScorer(["/nonexistent/scorer-binary"])
        with pytest.raises(ScorerError):
            scorer.score("a", "b")
        assert coherence_features(block("a"), block("b"), block("c"), scorer) is None

    def test_crashing_scorer_marks_absent(self, tmp_path):
        script = tmp_path / "bad.py"
        script.write_text("import sys\nsys.stdin.readline()\nprint('not json', flush=True)\n")
        scorer = ExternalScorer([sys.executable, str(script)])
        assert coherence_features(block("a"), block("b"), block("c"), scorer) is None
