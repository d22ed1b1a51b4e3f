"""Corpus model, JSONL ingestion, Okapi BM25, and candidate-pool construction.

A corpus is a set of documents plus a set of queries. Synthetic benchmarks
carry role labels (golden / misleading / irrelevant) and per-query required
golden document ids; ingested real corpora may leave every label unknown.
"""

from __future__ import annotations

import json
import math
from collections import Counter
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path

import numpy as np

from .errors import DataError, IntegrityError, ParseError, RetrievalError
from .text import tokenize


class DocLabel(str, Enum):
    GOLDEN = "golden"
    MISLEADING = "misleading"
    IRRELEVANT = "irrelevant"
    UNKNOWN = "unknown"


@dataclass(frozen=True)
class Document:
    id: str
    title: str
    text: str
    label: DocLabel = DocLabel.UNKNOWN
    answer_span: str | None = None


@dataclass(frozen=True)
class Query:
    id: str
    text: str
    gold_answers: tuple[str, ...]
    required_golden_ids: tuple[str, ...] = ()

    def __post_init__(self):
        if not self.gold_answers:
            raise IntegrityError(f"query {self.id!r} has no gold answers")


@dataclass(frozen=True)
class CandidatePool:
    """Top-n retrieval pool for one query, sorted by score descending.

    Ties are broken by ascending doc id so every downstream computation is
    deterministic.
    """

    query_id: str
    entries: tuple[tuple[str, float], ...]

    @property
    def doc_ids(self) -> tuple[str, ...]:
        return tuple(doc_id for doc_id, _ in self.entries)

    @property
    def scores(self) -> tuple[float, ...]:
        return tuple(score for _, score in self.entries)

    def __len__(self) -> int:
        return len(self.entries)


@dataclass(frozen=True)
class EvidenceSet:
    """Ordered evidence subset handed to the generator.

    ``score_scale`` is the source pool's maximum retrieval score; it rides
    along so score features stay comparable when the evidence is sliced or
    counterfactually edited.
    """

    query_id: str
    doc_ids: tuple[str, ...]
    scores: tuple[float, ...]
    pool_positions: tuple[int, ...] = ()   # 1-based positions in the source pool
    score_scale: float = 0.0
    well_formed: bool = True

    def __post_init__(self):
        if len(self.doc_ids) != len(self.scores):
            raise ValueError("doc_ids and scores must be aligned")
        if len(set(self.doc_ids)) != len(self.doc_ids):
            raise ValueError("evidence contains duplicate documents")
        if self.score_scale <= 0.0:
            object.__setattr__(
                self, "score_scale", max(max(self.scores, default=1.0), 1e-9)
            )

    def __len__(self) -> int:
        return len(self.doc_ids)


def evidence_from_pool(pool: "CandidatePool", indices) -> EvidenceSet:
    """Build an evidence set from 0-based pool indices, order preserved."""
    idx = [int(i) for i in indices]
    if any(i < 0 or i >= len(pool) for i in idx):
        raise ValueError(f"pool index out of range: {idx}")
    return EvidenceSet(
        query_id=pool.query_id,
        doc_ids=tuple(pool.entries[i][0] for i in idx),
        scores=tuple(pool.entries[i][1] for i in idx),
        pool_positions=tuple(i + 1 for i in idx),
        score_scale=max(pool.scores) if pool.entries else 1.0,
    )


def top_k_evidence(pool: "CandidatePool", k: int) -> EvidenceSet:
    k = min(k, len(pool))
    return evidence_from_pool(pool, range(k))


@dataclass
class Corpus:
    documents: dict[str, Document] = field(default_factory=dict)
    queries: list[Query] = field(default_factory=list)
    _token_sets: dict[str, frozenset] = field(default_factory=dict, repr=False)

    def doc(self, doc_id: str) -> Document:
        return self.documents[doc_id]

    def doc_token_set(self, doc_id: str) -> frozenset:
        """Cached token set of a document's text (hot path for features)."""
        cached = self._token_sets.get(doc_id)
        if cached is None:
            cached = frozenset(tokenize(self.documents[doc_id].text))
            self._token_sets[doc_id] = cached
        return cached

    def validate(self) -> None:
        """Check label invariants and that query references resolve."""
        for doc in self.documents.values():
            if doc.label is DocLabel.GOLDEN and not doc.answer_span:
                raise IntegrityError(f"golden document {doc.id!r} lacks answer_span")
            if doc.label is DocLabel.IRRELEVANT and doc.answer_span:
                raise IntegrityError(
                    f"irrelevant document {doc.id!r} carries answer_span"
                )
        seen_q: set[str] = set()
        for query in self.queries:
            if query.id in seen_q:
                raise IntegrityError(f"duplicate query id {query.id!r}")
            seen_q.add(query.id)
            missing = [d for d in query.required_golden_ids if d not in self.documents]
            if missing:
                raise IntegrityError(
                    f"query {query.id!r} references absent documents: "
                    + ", ".join(repr(m) for m in missing)
                )
            for doc_id in query.required_golden_ids:
                if self.documents[doc_id].label is not DocLabel.GOLDEN:
                    raise IntegrityError(
                        f"query {query.id!r} requires non-golden document {doc_id!r}"
                    )

    @property
    def labeled(self) -> bool:
        """True when any query declares required golden documents."""
        return any(q.required_golden_ids for q in self.queries)


# --- JSONL ingestion ------------------------------------------------------

_DOC_KEYS = {"id", "title", "text", "label", "answer_span"}
_QUERY_KEYS = {"id", "question", "answers", "golden_doc_ids"}


def _parse_document(rec: dict, path: str, line: int) -> Document:
    unknown = set(rec) - _DOC_KEYS
    if unknown:
        raise ParseError(
            f"unknown document field(s): {sorted(unknown)}", path=path, line=line
        )
    for key in ("id", "text"):
        if key not in rec:
            raise ParseError(f"document record missing {key!r}", path=path, line=line)
    label_raw = rec.get("label", "unknown")
    try:
        label = DocLabel(label_raw)
    except ValueError:
        raise ParseError(f"unknown label {label_raw!r}", path=path, line=line) from None
    return Document(
        id=str(rec["id"]),
        title=str(rec.get("title", "")),
        text=str(rec["text"]),
        label=label,
        answer_span=rec.get("answer_span"),
    )


def _parse_query(rec: dict, path: str, line: int) -> Query:
    unknown = set(rec) - _QUERY_KEYS
    if unknown:
        raise ParseError(
            f"unknown query field(s): {sorted(unknown)}", path=path, line=line
        )
    for key in ("id", "question"):
        if key not in rec:
            raise ParseError(f"query record missing {key!r}", path=path, line=line)
    answers = rec.get("answers")
    if not isinstance(answers, list) or not answers:
        raise ParseError("query record needs a nonempty 'answers' list", path=path, line=line)
    return Query(
        id=str(rec["id"]),
        text=str(rec["question"]),
        gold_answers=tuple(str(a) for a in answers),
        required_golden_ids=tuple(str(d) for d in rec.get("golden_doc_ids", [])),
    )


def _load_records(path: str | Path, corpus: Corpus) -> None:
    path = Path(path)
    if not path.exists():
        raise DataError(f"corpus file {path} does not exist")
    with path.open("r", encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                rec = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ParseError(f"invalid JSON: {exc.msg}", path=str(path), line=line_no) from None
            if not isinstance(rec, dict):
                raise ParseError("record is not an object", path=str(path), line=line_no)
            if "question" in rec:
                corpus.queries.append(_parse_query(rec, str(path), line_no))
            elif "text" in rec:
                doc = _parse_document(rec, str(path), line_no)
                if doc.id in corpus.documents:
                    raise IntegrityError(f"duplicate document id {doc.id!r}")
                corpus.documents[doc.id] = doc
            else:
                raise ParseError(
                    "record is neither a document (text) nor a query (question)",
                    path=str(path),
                    line=line_no,
                )


def load_corpus(path: str | Path, queries_path: str | Path | None = None) -> Corpus:
    """Load a corpus from JSONL file(s) and validate it.

    Document and query records may live in one file or in two; records are
    distinguished by their fields.
    """
    corpus = Corpus()
    _load_records(path, corpus)
    if queries_path is not None:
        _load_records(queries_path, corpus)
    corpus.validate()
    return corpus


def write_corpus(corpus: Corpus, path: str | Path) -> None:
    """Serialize a corpus to JSONL; byte-stable for identical corpora."""
    with Path(path).open("w", encoding="utf-8") as fh:
        for doc in corpus.documents.values():
            rec: dict = {"id": doc.id, "title": doc.title, "text": doc.text,
                         "label": doc.label.value}
            if doc.answer_span is not None:
                rec["answer_span"] = doc.answer_span
            fh.write(json.dumps(rec, ensure_ascii=False) + "\n")
        for query in corpus.queries:
            qrec: dict = {"id": query.id, "question": query.text,
                          "answers": list(query.gold_answers)}
            if query.required_golden_ids:
                qrec["golden_doc_ids"] = list(query.required_golden_ids)
            fh.write(json.dumps(qrec, ensure_ascii=False) + "\n")


def load_dense_scores(path: str | Path) -> dict[str, dict[str, float]]:
    """Load precomputed (query_id, doc_id, score) triples from JSONL."""
    table: dict[str, dict[str, float]] = {}
    path = Path(path)
    with path.open("r", encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                rec = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ParseError(f"invalid JSON: {exc.msg}", path=str(path), line=line_no) from None
            try:
                qid, did, score = str(rec["query_id"]), str(rec["doc_id"]), float(rec["score"])
            except (KeyError, TypeError, ValueError):
                raise ParseError(
                    "score record needs query_id, doc_id and numeric score",
                    path=str(path), line=line_no,
                ) from None
            table.setdefault(qid, {})[did] = score
    return table


# --- BM25 ------------------------------------------------------------------


@dataclass(frozen=True)
class CorpusStats:
    """Precomputed statistics for BM25 scoring."""

    n_docs: int
    avg_doc_len: float
    doc_freq: dict[str, int]
    doc_terms: dict[str, Counter]
    doc_len: dict[str, int]


def build_corpus_stats(corpus: Corpus) -> CorpusStats:
    doc_terms: dict[str, Counter] = {}
    doc_len: dict[str, int] = {}
    doc_freq: Counter = Counter()
    for doc in corpus.documents.values():
        terms = Counter(tokenize(doc.text))
        doc_terms[doc.id] = terms
        doc_len[doc.id] = sum(terms.values())
        doc_freq.update(terms.keys())
    n = len(corpus.documents)
    avg = (sum(doc_len.values()) / n) if n else 0.0
    return CorpusStats(
        n_docs=n, avg_doc_len=avg, doc_freq=dict(doc_freq),
        doc_terms=doc_terms, doc_len=doc_len,
    )


def bm25_score(
    query_tokens: list[str],
    document: Document,
    stats: CorpusStats,
    k1: float = 1.2,
    b: float = 0.75,
) -> float:
    """Okapi BM25 with the nonnegative log(1 + .) idf variant."""
    if not query_tokens:
        raise RetrievalError("query tokenized to nothing")
    terms = stats.doc_terms[document.id]
    dl = stats.doc_len[document.id]
    norm = k1 * (1.0 - b + b * (dl / stats.avg_doc_len if stats.avg_doc_len else 0.0))
    score = 0.0
    for tok in query_tokens:
        tf = terms.get(tok, 0)
        if tf == 0:
            continue
        df = stats.doc_freq.get(tok, 0)
        idf = math.log(1.0 + (stats.n_docs - df + 0.5) / (df + 0.5))
        score += idf * tf * (k1 + 1.0) / (tf + norm)
    return score


def build_candidate_pool(
    query: Query,
    corpus: Corpus,
    n: int = 25,
    stats: CorpusStats | None = None,
    k1: float = 1.2,
    b: float = 0.75,
) -> CandidatePool:
    """Top-n documents by BM25 score, ties broken by ascending doc id.

    Documents with no query term in common (score zero) are not retrieved,
    matching inverted-index semantics; if fewer than n documents match, the
    pool holds all of them.
    """
    if n < 1:
        raise ValueError(f"pool size must be >= 1, got {n}")
    if not corpus.documents:
        raise RetrievalError("corpus has no documents")
    if stats is None:
        stats = build_corpus_stats(corpus)
    q_tokens = tokenize(query.text)
    if not q_tokens:
        raise RetrievalError(f"query {query.id!r} tokenized to nothing")
    scored = []
    for doc in corpus.documents.values():
        s = bm25_score(q_tokens, doc, stats, k1=k1, b=b)
        if s > 0.0:
            scored.append((doc.id, s))
    scored.sort(key=lambda item: (-item[1], item[0]))
    return CandidatePool(query_id=query.id, entries=tuple(scored[:n]))


def build_pool_from_scores(
    query: Query,
    score_table: dict[str, dict[str, float]],
    corpus: Corpus,
    n: int = 25,
) -> CandidatePool:
    """Candidate pool from an externally scored (dense) retrieval run."""
    if n < 1:
        raise ValueError(f"pool size must be >= 1, got {n}")
    per_query = score_table.get(query.id)
    if not per_query:
        raise RetrievalError(f"no dense scores for query {query.id!r}")
    missing = [d for d in per_query if d not in corpus.documents]
    if missing:
        raise IntegrityError(
            f"dense scores for query {query.id!r} reference absent documents: "
            + ", ".join(repr(m) for m in sorted(missing)[:5])
        )
    scored = sorted(per_query.items(), key=lambda item: (-item[1], item[0]))
    return CandidatePool(query_id=query.id, entries=tuple(scored[:n]))


# --- Synthetic benchmark ---------------------------------------------------


@dataclass(frozen=True)
class SyntheticSpec:
    """Mixture parameters for generated benchmarks.

    Per query: ``n_golden`` documents jointly carry the gold answer,
    ``n_misleading`` documents overlap the query heavily but support a
    token-disjoint distractor answer, and ``n_irrelevant`` documents share
    only the query topic token. Misleading documents carry more query terms
    than the weakest golden document so plain lexical ranking places some of
    them above it.
    """

    n_golden: int = 2
    n_misleading: int = 3
    n_irrelevant: int = 20
    query_terms: int = 11
    golden_terms: int = 5
    misleading_terms: int = 8
    golden_fillers: int = 6
    misleading_fillers: int = 10
    misleading_long_fillers: int = 90
    irrelevant_fillers: int = 16

    def __post_init__(self):
        if self.n_golden not in (1, 2):
            raise ValueError("n_golden must be 1 or 2")
        if min(self.n_misleading, self.n_irrelevant) < 0:
            raise ValueError("document counts must be nonnegative")
        if self.misleading_terms > self.query_terms:
            raise ValueError("misleading_terms cannot exceed query_terms")
        if self.golden_terms < 1 or self.golden_terms > self.query_terms:
            raise ValueError("golden_terms out of range")

    @property
    def docs_per_query(self) -> int:
        return self.n_golden + self.n_misleading + self.n_irrelevant


def generate_synthetic_benchmark(
    seed: int, n_queries: int, spec: SyntheticSpec | None = None
) -> Corpus:
    """Deterministically generate a labeled benchmark.

    Pure function of (seed, n_queries, spec): identical inputs produce
    byte-identical corpora. Vocabulary is namespaced per seed and per query,
    so distinct queries share no content terms and pools stay clean.
    """
    if n_queries <= 0:
        raise ValueError(f"n_queries must be positive, got {n_queries}")
    spec = spec or SyntheticSpec()
    rng = np.random.default_rng(np.random.SeedSequence([seed, n_queries, 0xE55E]))
    corpus = Corpus()

    for qi in range(n_queries):
        tag = f"s{seed}q{qi:04d}"
        topic = f"topic{tag}"
        terms = [f"key{tag}n{j}" for j in range(spec.query_terms)]
        question = " ".join([topic, *terms])

        answer_parts = [f"goldans{tag}a", f"goldans{tag}b"]
        gold_answer = " ".join(answer_parts)
        filler_counter = 0

        def fillers(count: int) -> list[str]:
            nonlocal filler_counter
            out = [f"fill{tag}x{filler_counter + j}" for j in range(count)]
            filler_counter += count
            return out

        docs: list[Document] = []
        doc_seq = 0

        def add_doc(label: DocLabel, tokens: list[str], title: str,
                    answer_span: str | None) -> Document:
            nonlocal doc_seq
            doc = Document(
                id=f"{tag}_d{doc_seq:02d}",
                title=title,
                text=" ".join(tokens),
                label=label,
                answer_span=answer_span,
            )
            doc_seq += 1
            docs.append(doc)
            return doc

        # Golden documents: split the query terms and the answer across them.
        # Term counts jitter per query so evidence difficulty varies.
        golden_ids: list[str] = []
        if spec.n_golden == 1:
            n_first = min(spec.golden_terms + int(rng.integers(0, 2)), spec.query_terms)
            body = [topic] + terms[:n_first] + answer_parts
            body += fillers(spec.golden_fillers)
            rng.shuffle(body)
            golden_ids.append(
                add_doc(DocLabel.GOLDEN, body, f"golden {tag} 0", gold_answer).id
            )
        else:
            # The second golden document keeps full query overlap but is
            # longer, so its lexical score drops well below the first one,
            # leaving room for the compact misleading document in between.
            n_first = min(spec.golden_terms + 1, spec.query_terms - 1)
            n_second = min(spec.golden_terms, spec.query_terms - n_first)
            first_terms = terms[:n_first]
            second_terms = terms[n_first : n_first + n_second]
            for g, (part_terms, part_answer) in enumerate(
                [(first_terms, answer_parts[0]), (second_terms, answer_parts[1])]
            ):
                extra = 0 if g == 0 else 5  # longer second golden scores lower
                body = [topic] + part_terms + [part_answer]
                body += fillers(spec.golden_fillers + extra + int(rng.integers(0, 3)))
                rng.shuffle(body)
                golden_ids.append(
                    add_doc(DocLabel.GOLDEN, body, f"golden {tag} {g}", part_answer).id
                )

        # Misleading documents: query-term overlap plus a distractor span.
        # The first is compact and repeats its terms, so term frequency
        # ranks it between the two golden documents without extra unique
        # overlap; the rest bury even more query terms in long text.
        for m in range(spec.n_misleading):
            if m == 0:
                n_terms = spec.golden_terms
                n_fill = spec.misleading_fillers + int(rng.integers(0, 4))
            else:
                n_terms = spec.misleading_terms + int(rng.integers(0, 2))
                n_fill = spec.misleading_long_fillers + int(rng.integers(0, 7))
            n_terms = max(1, min(n_terms, spec.query_terms))
            chosen = list(rng.choice(spec.query_terms, size=n_terms, replace=False))
            distractor = f"dstr{tag}m{m}a dstr{tag}m{m}b"
            shared = [terms[j] for j in sorted(chosen)]
            body = [topic] + shared + distractor.split()
            if m == 0:
                body += shared[:4]
            body += fillers(n_fill)
            rng.shuffle(body)
            add_doc(DocLabel.MISLEADING, body, f"misleading {tag} {m}", distractor)

        # Irrelevant documents: only the topic token overlaps the query.
        for _ in range(spec.n_irrelevant):
            body = [topic] + fillers(spec.irrelevant_fillers + int(rng.integers(0, 5)))
            rng.shuffle(body)
            add_doc(DocLabel.IRRELEVANT, body, f"irrelevant {tag}", None)

        for doc in docs:
            corpus.documents[doc.id] = doc
        corpus.queries.append(
            Query(
                id=f"{tag}",
                text=question,
                gold_answers=(gold_answer,),
                required_golden_ids=tuple(golden_ids),
            )
        )

    corpus.validate()
    return corpus
