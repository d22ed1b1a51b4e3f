"""Answer normalization, EM / token-F1 metrics, and output-grammar parsing.

Two grammars are handled here. Generator outputs are a ``<think>`` block
followed by an ``<answer>`` block with inline ``Doc [i]`` citations inside
the reasoning. Selector outputs are comma-separated bracketed document
indices, optionally wrapped in the same tag structure.
"""

from __future__ import annotations

import re
import string
from collections import Counter
from dataclasses import dataclass, field

_PUNCT = set(string.punctuation)
_ARTICLE_RE = re.compile(r"\b(a|an|the)\b")
_TOKEN_RE = re.compile(r"[^\W_]+", re.UNICODE)
_CITATION_RE = re.compile(r"Doc \[(\d+)\]")
_GENERATION_RE = re.compile(
    r"\A\s*<think>(?P<think>.*?)</think>\s*<answer>(?P<answer>.*?)</answer>\s*\Z",
    re.DOTALL,
)
_ANSWER_BLOCK_RE = re.compile(r"<answer>(?P<body>.*?)</answer>", re.DOTALL)
_INDEX_RE = re.compile(r"\[(\d+)\]")
_INDEX_LIST_RE = re.compile(r"\A\s*\[\d+\]\s*(?:,\s*\[\d+\]\s*)*\Z")


def tokenize(text: str) -> list[str]:
    """Lowercase and split on non-alphanumeric runs (no stemming, no stopwords)."""
    return _TOKEN_RE.findall(text.lower())


def normalize_answer(text: str) -> str:
    """Lowercase, strip punctuation, drop articles, collapse whitespace."""
    text = text.lower()
    text = "".join(ch for ch in text if ch not in _PUNCT)
    text = _ARTICLE_RE.sub(" ", text)
    return " ".join(text.split())


def exact_match(prediction: str, gold: str) -> int:
    """1 iff the normalized strings are equal."""
    return int(normalize_answer(prediction) == normalize_answer(gold))


def token_f1(prediction: str, gold: str) -> float:
    """Harmonic mean of token precision/recall over normalized token multisets.

    Both token lists empty -> 1.0; exactly one empty -> 0.0.
    """
    pred_tokens = normalize_answer(prediction).split()
    gold_tokens = normalize_answer(gold).split()
    if not pred_tokens and not gold_tokens:
        return 1.0
    if not pred_tokens or not gold_tokens:
        return 0.0
    common = Counter(pred_tokens) & Counter(gold_tokens)
    num_same = sum(common.values())
    if num_same == 0:
        return 0.0
    precision = num_same / len(pred_tokens)
    recall = num_same / len(gold_tokens)
    return 2 * precision * recall / (precision + recall)


@dataclass(frozen=True)
class ParsedGeneration:
    """A generator output after grammar parsing.

    ``citations`` are the unique 1-based document positions cited as
    ``Doc [i]``, in first-occurrence order. Citations outside ``[1, n_docs]``
    are still recorded but set ``malformed_citation``; they do not flip
    ``well_formed``, which concerns tag structure only.
    """

    raw: str
    think: str | None = None
    answer: str | None = None
    citations: tuple[int, ...] = ()
    well_formed: bool = False
    malformed_citation: bool = False


@dataclass(frozen=True)
class ParsedSelection:
    """A selector output: bracketed 1-based document indices."""

    raw: str
    indices: tuple[int, ...] = ()
    well_formed: bool = False


def _unique_in_order(values: list[int]) -> tuple[int, ...]:
    seen: dict[int, None] = {}
    for v in values:
        seen.setdefault(v, None)
    return tuple(seen)


def parse_generation(raw: str, n_docs: int) -> ParsedGeneration:
    """Parse a generator output against the tag grammar. Never raises."""
    if n_docs < 1:
        raise ValueError(f"n_docs must be >= 1, got {n_docs}")
    single_blocks = all(
        raw.count(tag) == 1
        for tag in ("<think>", "</think>", "<answer>", "</answer>")
    )
    match = _GENERATION_RE.match(raw) if single_blocks else None
    if match is None:
        # Malformed structure: still scrape citations for diagnostics.
        cited = _unique_in_order([int(s) for s in _CITATION_RE.findall(raw)])
        bad = any(i < 1 or i > n_docs for i in cited)
        return ParsedGeneration(raw=raw, citations=cited, malformed_citation=bad)
    think = match.group("think")
    answer = match.group("answer").strip()
    cited = _unique_in_order([int(s) for s in _CITATION_RE.findall(think)])
    bad = any(i < 1 or i > n_docs for i in cited)
    return ParsedGeneration(
        raw=raw,
        think=think,
        answer=answer,
        citations=cited,
        well_formed=bool(answer),
        malformed_citation=bad,
    )


def parse_selection(raw: str, n: int) -> ParsedSelection:
    """Parse a selector output. Never raises.

    The index list is taken from a single ``<answer>`` block when present,
    otherwise from the whole string. Well-formed means: the list is a
    nonempty comma-separated sequence of ``[i]`` tokens, every index lies in
    ``[1, n]``, and there are no duplicates. The target-size requirement is
    deliberately not part of well-formedness; size deviations are priced by
    the count penalty instead.
    """
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    n_open = raw.count("<answer>")
    n_close = raw.count("</answer>")
    body = raw
    structure_ok = True
    if n_open or n_close:
        match = _ANSWER_BLOCK_RE.search(raw)
        if n_open == 1 and n_close == 1 and match is not None:
            body = match.group("body")
        else:
            structure_ok = False
    indices = tuple(int(s) for s in _INDEX_RE.findall(body))
    if not structure_ok:
        return ParsedSelection(raw=raw, indices=indices)
    well_formed = (
        bool(indices)
        and _INDEX_LIST_RE.match(body) is not None
        and all(1 <= i <= n for i in indices)
        and len(set(indices)) == len(indices)
    )
    return ParsedSelection(raw=raw, indices=indices, well_formed=well_formed)


def render_generation(citations: tuple[int, ...] | list[int], answer: str) -> str:
    """Render a well-formed generation citing the given 1-based positions.

    Inverse of :func:`parse_generation` for the structured outputs the
    simulator emits.
    """
    if citations:
        cite_text = " and ".join(f"Doc [{i}]" for i in citations)
        think = f" Grounded on {cite_text}. "
    else:
        think = " No specific document grounded. "
    return f"<think>{think}</think><answer> {answer} </answer>"


def render_selection(indices: tuple[int, ...] | list[int]) -> str:
    """Render a selector output in the bracketed-list grammar."""
    body = ", ".join(f"[{i}]" for i in indices)
    return f"<answer> {body} </answer>"
