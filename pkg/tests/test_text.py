import string

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from evsel.text import (
    exact_match,
    normalize_answer,
    parse_generation,
    parse_selection,
    render_generation,
    render_selection,
    token_f1,
    tokenize,
)

text_strategy = st.text(
    alphabet=st.characters(blacklist_categories=("Cs",)), max_size=60
)


def test_normalize_examples():
    assert normalize_answer("The Ted Mosby.") == "ted mosby"
    assert normalize_answer("") == ""
    assert normalize_answer("Claudio Javier López") == "claudio javier lópez"


@settings(max_examples=200, derandomize=True)
@given(text_strategy)
def test_normalize_idempotent(s):
    once = normalize_answer(s)
    assert normalize_answer(once) == once


def test_exact_match_examples():
    assert exact_match("Ted Mosby", "the ted mosby") == 1
    assert exact_match("Ted", "Ted Mosby") == 0
    assert exact_match("", "") == 1


def test_token_f1_examples():
    # two-token overlap of one: precision = recall = 0.5
    assert token_f1("p q", "q r") == pytest.approx(0.5)
    assert token_f1("same words here", "same words here") == 1.0
    # precision 1/3, recall 1 -> harmonic mean 0.5
    assert token_f1("x y z", "y") == pytest.approx(2 * (1 / 3) / (1 / 3 + 1))


def test_token_f1_empty_conventions():
    assert token_f1("", "") == 1.0
    assert token_f1("q", "") == 0.0
    assert token_f1("", "q") == 0.0
    # strings that normalize to nothing behave like empty
    assert token_f1("the", "...") == 1.0


@settings(max_examples=200, derandomize=True)
@given(text_strategy, text_strategy)
def test_token_f1_symmetric(a, b):
    assert token_f1(a, b) == pytest.approx(token_f1(b, a))


@settings(max_examples=200, derandomize=True)
@given(text_strategy, text_strategy)
def test_f1_one_iff_equal_multisets(a, b):
    f1 = token_f1(a, b)
    same = sorted(normalize_answer(a).split()) == sorted(normalize_answer(b).split())
    assert (f1 == 1.0) == same


@settings(max_examples=200, derandomize=True)
@given(text_strategy, text_strategy)
def test_em_implies_f1(a, b):
    if exact_match(a, b) == 1:
        assert token_f1(a, b) == 1.0


def test_tokenize_rules():
    assert tokenize("Alpha, beta-GAMMA!") == ["alpha", "beta", "gamma"]
    assert tokenize("x_1 y2") == ["x", "1", "y2"]
    assert tokenize("...") == []


class TestParseGeneration:
    def test_structured_example(self):
        raw = "<think> Doc [1] says X and Doc [3] confirms. </think><answer> Ted Mosby </answer>"
        gen = parse_generation(raw, n_docs=5)
        assert gen.well_formed
        assert gen.answer == "Ted Mosby"
        assert gen.citations == (1, 3)
        assert not gen.malformed_citation

    def test_untagged_output_is_malformed(self):
        gen = parse_generation("Answer: Ted", n_docs=5)
        assert not gen.well_formed
        assert gen.answer is None

    def test_duplicate_citations_deduplicated(self):
        gen = parse_generation("<think> Doc [2] Doc [2] </think><answer>x</answer>", 5)
        assert gen.citations == (2,)
        assert gen.well_formed

    def test_out_of_range_citation_flags_but_keeps_well_formed(self):
        gen = parse_generation("<think> Doc [9] </think><answer>x</answer>", n_docs=5)
        assert gen.well_formed
        assert gen.malformed_citation
        assert gen.citations == (9,)

    def test_extra_tags_malformed(self):
        raw = "<think>a</think><answer>x</answer><answer>y</answer>"
        assert not parse_generation(raw, 3).well_formed

    def test_text_outside_tags_malformed(self):
        raw = "preamble <think>a</think><answer>x</answer>"
        assert not parse_generation(raw, 3).well_formed

    def test_empty_answer_malformed(self):
        assert not parse_generation("<think>a</think><answer>   </answer>", 3).well_formed

    def test_surrounding_whitespace_ok(self):
        raw = "  <think>a</think>\n<answer> x </answer>\n"
        assert parse_generation(raw, 3).well_formed

    def test_never_raises_on_garbage(self):
        for raw in ("", "<answer>", "<think></think>", "][", "Doc [1]"):
            parse_generation(raw, 4)


class TestParseSelection:
    def test_tagged_example(self):
        sel = parse_selection("<answer> [3], [5], [7], [9], [12] </answer>", n=25)
        assert sel.well_formed
        assert sel.indices == (3, 5, 7, 9, 12)

    def test_duplicate_not_well_formed(self):
        sel = parse_selection("[3], [3], [5]", n=25)
        assert not sel.well_formed
        assert sel.indices == (3, 3, 5)

    def test_out_of_range_not_well_formed(self):
        assert not parse_selection("[26]", n=25).well_formed

    def test_bare_list_well_formed(self):
        sel = parse_selection("[1], [2]", n=4)
        assert sel.well_formed and sel.indices == (1, 2)

    def test_stray_text_not_well_formed(self):
        assert not parse_selection("<answer> pick [1] and [2] </answer>", 4).well_formed

    def test_empty_not_well_formed(self):
        assert not parse_selection("", 4).well_formed
        assert not parse_selection("<answer>  </answer>", 4).well_formed

    def test_think_block_allowed(self):
        raw = "<think> Doc [4] matters. </think><answer> [4], [2] </answer>"
        sel = parse_selection(raw, 5)
        assert sel.well_formed and sel.indices == (4, 2)


def test_render_parse_round_trip_spot():
    raw = render_generation([3, 1], "some answer")
    gen = parse_generation(raw, n_docs=4)
    assert gen.well_formed and gen.answer == "some answer" and gen.citations == (3, 1)
    sel = parse_selection(render_selection([2, 4, 1]), n=5)
    assert sel.well_formed and sel.indices == (2, 4, 1)
