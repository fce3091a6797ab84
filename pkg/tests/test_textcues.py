from __future__ import annotations

from functools import lru_cache

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from vsdstruct import textcues as tc


def recursive_levenshtein(a: str, b: str) -> int:
    @lru_cache(maxsize=None)
    def d(i: int, j: int) -> int:
        if i == 0:
            return j
        if j == 0:
            return i
        return min(d(i - 1, j) + 1, d(i, j - 1) + 1, d(i - 1, j - 1) + (a[i - 1] != b[j - 1]))

    return d(len(a), len(b))


short_text = st.text(alphabet="abcé条 ", max_size=7)


class TestLevenshtein:
    @pytest.mark.parametrize("a, b, expected", [("abc", "abc", 0), ("kitten", "sitting", 3), ("", "ab", 2)])
    def test_examples(self, a, b, expected):
        assert tc.levenshtein(a, b) == expected

    @settings(max_examples=200, deadline=None)
    @given(short_text, short_text)
    def test_matches_recursive_oracle(self, a, b):
        assert tc.levenshtein(a, b) == recursive_levenshtein(a, b)
        assert tc.levenshtein(a, b) == tc.levenshtein(b, a)

    @settings(max_examples=100, deadline=None)
    @given(short_text, short_text, short_text)
    def test_triangle_inequality(self, a, b, c):
        assert tc.levenshtein(a, c) <= tc.levenshtein(a, b) + tc.levenshtein(b, c)


class TestDetectNumbering:
    def test_arabic(self):
        n = tc.detect_numbering("2. Non-use and Non-disclosure")
        assert (n.kind, n.value) == ("arabic-dot", 2)

    def test_none(self):
        assert tc.detect_numbering("The parties agree") is None

    def test_fullwidth_japanese(self):
        n = tc.detect_numbering("（３）機密情報", "ja")
        assert (n.kind, n.value) == ("ja-paren", 3)

    @pytest.mark.parametrize(
        "text, kind, value",
        [
            ("(a) first", "alpha-lower-paren", 1),
            ("a) first", "alpha-lower-rparen", 1),
            ("IV. Term", "roman-upper-dot", 4),
            ("(iii) item", "roman-lower-paren", 3),
            ("1.2.3 Scope", "multilevel-3", (1, 2, 3)),
            ("1.1. Scope", "multilevel-2", (1, 1)),
            ("Section 4 Payment", "section", 4),
            ("ARTICLE V", "article-roman", 5),
            ("   3) indented", "arabic-rparen", 3),
        ],
    )
    def test_catalog(self, text, kind, value):
        n = tc.detect_numbering(text)
        assert (n.kind, n.value) == (kind, value)

    @pytest.mark.parametrize(
        "text, kind, value",
        [("第十二条（目的）", "ja-article", 12), ("第2項", "ja-clause", 2), ("③ 本件", "ja-circled", 3), ("（イ）", "ja-katakana-paren", 2)],
    )
    def test_japanese_catalog(self, text, kind, value):
        n = tc.detect_numbering(text, "ja")
        assert (n.kind, n.value) == (kind, value)

    def test_roman_alpha_ambiguity_lists_roman_first(self):
        kinds = [c.kind for c in tc.numbering_candidates("i. first")]
        assert kinds == ["roman-lower-dot", "alpha-lower-dot"]

    def test_more_than_eight_leading_spaces(self):
        assert tc.detect_numbering(" " * 9 + "1. x") is None

    def test_decimal_number_is_not_numbering(self):
        assert tc.detect_numbering("3.5 percent of the fee") is None or tc.detect_numbering("3.5 percent").kind.startswith("multilevel")

    @settings(max_examples=100, deadline=None)
    @given(st.sampled_from(["1. ", "(a) ", "IV. ", "2.3 ", "Section 3 "]), st.text(max_size=20), st.text(max_size=20))
    def test_prefix_only(self, head, tail1, tail2):
        a = tc.detect_numbering(head + "x" + tail1)
        b = tc.detect_numbering(head + "x" + tail2)
        assert (a.kind, a.value) == (b.kind, b.value)


def outcomes(texts, language="en"):
    return [o for o, _ in tc.run_numbering(texts, language)]


class TestAutomaton:
    def test_figure_trace(self):
        texts = ["1. Definition", "The following terms", "apply to this agreement", "2. Non-use", "a) The recipient"]
        assert outcomes(texts) == [tc.DOWN, tc.CONTINUOUS, tc.CONTINUOUS, tc.CONSECUTIVE, tc.DOWN]

    def test_nested_trace(self):
        assert outcomes(["1.", "(a)", "(b)", "2."]) == [tc.DOWN, tc.DOWN, tc.CONSECUTIVE, tc.UP]

    def test_non_initial_first(self):
        assert outcomes(["5. Term"]) == [tc.OTHER]

    def test_ambiguous_letter_continues_alpha(self):
        # "i" after "h" continues the alphabetic list instead of opening roman
        texts = ["1.", "(g)", "(h)", "(i)"]
        assert outcomes(texts)[-1] == tc.OTHER or outcomes(["1.", "(a)", "(b)", "(c)", "(d)", "(e)", "(f)", "(g)", "(h)", "(i)"])[-1] == tc.CONSECUTIVE

    def test_alpha_run_through_i(self):
        texts = ["1."] + [f"({c})" for c in "abcdefghi"]
        assert outcomes(texts)[-1] == tc.CONSECUTIVE

    def test_roman_initial_opens_level(self):
        assert outcomes(["1.", "(a)", "(i)", "(ii)", "(b)"]) == [tc.DOWN, tc.DOWN, tc.DOWN, tc.CONSECUTIVE, tc.UP]

    def test_up_pops_deeper_kinds(self):
        memory = ()
        for text in ["1.", "(a)", "(i)", "2."]:
            _, memory, _ = tc.numbering_transition(memory, tc.numbering_candidates(text))
        assert [k for k, _ in memory] == ["arabic-dot"]
        _, memory, _ = tc.numbering_transition(memory, tc.numbering_candidates("(a)"))
        assert [k for k, _ in memory] == ["arabic-dot", "alpha-lower-paren"]

    def test_japanese_trace(self):
        assert outcomes(["第1条", "（1）", "（2）", "第2条"], "ja") == [tc.DOWN, tc.DOWN, tc.CONSECUTIVE, tc.UP]

    @settings(max_examples=200, deadline=None)
    @given(st.lists(st.sampled_from(["1.", "2.", "3.", "(a)", "(b)", "(i)", "(ii)", "x", "1.1", "1.2", "5."]), max_size=15))
    def test_invariants(self, texts):
        memory = ()
        for text in texts:
            before = memory
            outcome, memory, _ = tc.numbering_transition(memory, tc.numbering_candidates(text))
            kinds = [k for k, _ in memory]
            assert len(kinds) == len(set(kinds))
            if len(before) <= 1:
                assert outcome != tc.UP
        assert outcomes(texts) == outcomes(texts)


class TestContiguous:
    def test_successor(self):
        assert tc.contiguous(tc.numbering_candidates("2. a"), tc.numbering_candidates("3. b"))
        assert not tc.contiguous(tc.numbering_candidates("2. a"), tc.numbering_candidates("(c) b"))
        assert not tc.contiguous([], tc.numbering_candidates("3. b"))


class TestPredicates:
    def test_punctuated(self):
        assert tc.punctuated("Confidential Information.")
        assert tc.punctuated("He said \"stop.\"")
        assert tc.punctuated("契約する。")
        assert not tc.punctuated("the following:")

    def test_list_start(self):
        assert tc.list_start("as follows:")
        assert tc.list_start("items;")
        assert not tc.list_start("end.")

    def test_list_element(self):
        assert tc.list_element("the first item; and")
        assert tc.list_element("second item, or")
        assert not tc.list_element("sandor")

    @pytest.mark.parametrize("text", ["Page 3 of 5", "3", "- 3 -", "page 12"])
    def test_page_strict(self, text):
        assert tc.page_number_strict(text)
        assert tc.page_number_tolerant(text)

    def test_page_tolerant_only(self):
        assert not tc.page_number_strict("Contract 12 final")
        assert tc.page_number_tolerant("Contract 12 final")
        assert not tc.page_number_tolerant("this sentence has 12 words in it")

    def test_whereas_and_now_therefore(self):
        assert tc.starts_whereas("WHEREAS, the parties")
        text = "NOW, THEREFORE, in consideration"
        assert tc.starts_now_therefore(text)
        assert not tc.all_capital(text)

    def test_all_capital(self):
        assert tc.all_capital("SERVICES AGREEMENT")
        assert not tc.all_capital("123")

    def test_dictionary_like(self):
        assert tc.dictionary_like("Term: the period", breaks_early=False)
        assert not tc.dictionary_like("Term: the period", breaks_early=True)
        assert not tc.dictionary_like("no colon", breaks_early=False)

    def test_blank_fields(self):
        assert tc.blank_field_pair("By: ______", "Name: ___")
        assert not tc.blank_field_pair("By: ______", "Name")

    def test_horizontal_line(self):
        assert tc.horizontal_line("*****")
        assert tc.horizontal_line("- - - -")
        assert not tc.horizontal_line("---a")

    def test_spaces_in_middle(self):
        assert tc.spaces_in_middle("left    right")
        assert not tc.spaces_in_middle("left   right")

    def test_japanese_emphasis(self):
        assert tc.spaced_emphasis("目 的 条")
        assert not tc.spaced_emphasis("目的")
        assert tc.bracketed("（目的）")

    def test_textual_predicates_keys(self):
        preds = tc.textual_predicates("Page 3 of 5")
        assert preds["T5"] and preds["T6"]
        assert set(preds) == {"T2", "T3", "T4", "T5", "T6", "T7", "T8", "T9", "T10", "T12"}
