"""Prompt templates for the remote generator and selector endpoints.

The templates pin the exact output grammar the parsers expect: a single
``<think>`` block followed by a single ``<answer>`` block, with inline
``Doc [i]`` citations in the reasoning, and (for the selector) a
comma-separated bracketed index list in the answer.
"""

from __future__ import annotations

from .corpus import Corpus, Query

GENERATOR_PROMPT = """You are given a question and a set of retrieved documents. Your task is to answer the question using only information from the retrieved documents. Even for yes/no questions, you must determine the answer by reasoning from factual evidence in the documents.

Output format (STRICT):
- <think> A concise reasoning chain explaining how the answer is derived from the documents. Keep it brief (1-3 sentences). </think>
- <answer> The final answer. </answer>

Evidence citation rule:
- Whenever you use a piece of evidence from the documents in your reasoning, you must cite it inline as Doc [i].
- You may cite one or multiple documents, but only cite documents that are actually relevant.

Answer rules:
- The answer should be a short phrase directly supported by the retrieved documents.
- Do not introduce external knowledge or assumptions.
- Do not output anything outside <think> and <answer>.

Example (follow the style only):
<think> Doc [1] states that Future Ted serves as the show's narrator, and Doc [4] confirms that the narrator is voiced by Bob Saget. </think>
<answer> Ted Mosby </answer>
"""

SELECTOR_PROMPT = """You are an expert evidence-set selector for retrieval-augmented generation. Your goal is to select exactly five documents that make the question answerable, but not trivial. Prefer evidence sets that sit near the model's competence boundary: solvable with careful multi-step reasoning, yet not so direct that the answer is obvious from a single passage. You must follow the principles and output format strictly.

Principles:
1. Answerability (must-have): The selected set must contain enough information to deduce the correct answer. Do not select sets that make the question impossible.
2. Non-triviality (must-have): Avoid sets where one document directly states the answer with no integration needed. If a direct-answer passage is unavoidable for solvability, include it only together with supporting/context passages that require cross-document integration.
3. Multi-hop integration: Prefer sets that require combining at least two complementary clues (e.g., entity linking, temporal alignment, resolving aliases, chaining relations).
4. Controlled noise: Mildly conflicting or distracting details are allowed if the set remains answerable; do not include documents that are irrelevant or make the set unsolvable.
5. Diversity: Prefer complementary documents covering different parts of the reasoning chain, rather than near-duplicates.

Output format (STRICT):
- <think> Briefly explain which documents contain key clues, how they complement each other, and why the set is answerable but requires integration. Keep it concise (2-4 sentences). </think>
- <answer> [doc_id1], [doc_id2], [doc_id3], [doc_id4], [doc_id5] </answer>

Rules:
- Select exactly 5 documents.
- In <answer>, list only the document identifiers in brackets, separated by commas.
- Do not output anything outside <think> and <answer>.

Example (follow the style only):
<think> Doc [3] provides the birthplace clue, Doc [7] gives a timeline, and Doc [12] resolves an alias; combining them is necessary. Doc [5] and Doc [9] add supporting context while introducing mild distraction, keeping the set solvable but non-trivial. </think>
<answer> [3], [5], [7], [9], [12] </answer>
"""


def render_documents(doc_ids, corpus: Corpus) -> str:
    """Number the documents the way the citation grammar expects."""
    blocks = []
    for i, doc_id in enumerate(doc_ids, start=1):
        doc = corpus.doc(doc_id)
        title = f" (Title: {doc.title})" if doc.title else ""
        blocks.append(f"Doc [{i}]{title}: {doc.text}")
    return "\n".join(blocks)


def generator_user_message(query: Query, doc_ids, corpus: Corpus) -> str:
    return f"Question: {query.text}\n\nRetrieved Documents:\n{render_documents(doc_ids, corpus)}"


def selector_user_message(query: Query, doc_ids, corpus: Corpus) -> str:
    return f"Question: {query.text}\n\nCandidate Documents (Top-K):\n{render_documents(doc_ids, corpus)}"
