import json
import math

import pytest

from evsel.corpus import (
    CandidatePool,
    Corpus,
    DocLabel,
    Document,
    Query,
    SyntheticSpec,
    bm25_score,
    build_candidate_pool,
    build_corpus_stats,
    build_pool_from_scores,
    evidence_from_pool,
    generate_synthetic_benchmark,
    load_corpus,
    load_dense_scores,
    top_k_evidence,
    write_corpus,
)
from evsel.errors import DataError, IntegrityError, ParseError, RetrievalError
from evsel.text import tokenize


# --- reference BM25, coded independently of the package ---------------------

def reference_bm25(query_text, doc_text, all_doc_texts, k1=1.2, b=0.75):
    def toks(t):
        out, cur = [], ""
        for ch in t.lower():
            if ch.isalnum():
                cur += ch
            else:
                if cur:
                    out.append(cur)
                cur = ""
        if cur:
            out.append(cur)
        return out

    docs_tokens = [toks(t) for t in all_doc_texts]
    n_docs = len(docs_tokens)
    avgdl = sum(len(d) for d in docs_tokens) / n_docs
    df = {}
    for d in docs_tokens:
        for term in set(d):
            df[term] = df.get(term, 0) + 1
    d_tokens = toks(doc_text)
    dl = len(d_tokens)
    score = 0.0
    for term in toks(query_text):
        tf = d_tokens.count(term)
        if tf == 0:
            continue
        idf = math.log(1.0 + (n_docs - df[term] + 0.5) / (df[term] + 0.5))
        score += idf * tf * (k1 + 1) / (tf + k1 * (1 - b + b * dl / avgdl))
    return score


def write_jsonl(path, records):
    with open(path, "w", encoding="utf-8") as fh:
        for rec in records:
            fh.write(json.dumps(rec) + "\n")


class TestLoading:
    def test_three_documents(self, tmp_path):
        path = tmp_path / "c.jsonl"
        write_jsonl(path, [
            {"id": "d1", "title": "t", "text": "one"},
            {"id": "d2", "title": "t", "text": "two"},
            {"id": "d3", "title": "t", "text": "three"},
        ])
        corpus = load_corpus(path)
        assert len(corpus.documents) == 3
        assert corpus.doc("d2").text == "two"

    def test_missing_text_names_line(self, tmp_path):
        path = tmp_path / "c.jsonl"
        write_jsonl(path, [
            {"id": "d1", "text": "fine"},
            {"id": "d2", "title": "broken"},
        ])
        with pytest.raises(ParseError) as err:
            load_corpus(path)
        assert err.value.line == 2

    def test_dangling_reference_lists_id(self, tmp_path):
        path = tmp_path / "c.jsonl"
        write_jsonl(path, [
            {"id": "d1", "text": "x", "label": "golden", "answer_span": "x"},
            {"id": "q1", "question": "x", "answers": ["x"], "golden_doc_ids": ["d99"]},
        ])
        with pytest.raises(IntegrityError, match="d99"):
            load_corpus(path)

    def test_missing_file(self, tmp_path):
        with pytest.raises(DataError):
            load_corpus(tmp_path / "absent.jsonl")

    def test_invalid_json_line(self, tmp_path):
        path = tmp_path / "c.jsonl"
        path.write_text('{"id": "d1", "text": "x"}\nnot json\n')
        with pytest.raises(ParseError) as err:
            load_corpus(path)
        assert err.value.line == 2

    def test_duplicate_doc_id(self, tmp_path):
        path = tmp_path / "c.jsonl"
        write_jsonl(path, [
            {"id": "d1", "text": "x"},
            {"id": "d1", "text": "y"},
        ])
        with pytest.raises(IntegrityError, match="d1"):
            load_corpus(path)

    def test_golden_requires_answer_span(self, tmp_path):
        path = tmp_path / "c.jsonl"
        write_jsonl(path, [{"id": "d1", "text": "x", "label": "golden"}])
        with pytest.raises(IntegrityError):
            load_corpus(path)

    def test_separate_query_file(self, tmp_path):
        docs = tmp_path / "docs.jsonl"
        queries = tmp_path / "queries.jsonl"
        write_jsonl(docs, [{"id": "d1", "text": "x"}])
        write_jsonl(queries, [{"id": "q1", "question": "x", "answers": ["a"]}])
        corpus = load_corpus(docs, queries)
        assert len(corpus.queries) == 1

    def test_round_trip(self, tmp_path):
        corpus = generate_synthetic_benchmark(5, 2)
        path = tmp_path / "c.jsonl"
        write_corpus(corpus, path)
        loaded = load_corpus(path)
        assert loaded.documents.keys() == corpus.documents.keys()
        assert [q.id for q in loaded.queries] == [q.id for q in corpus.queries]
        assert loaded.doc(next(iter(loaded.documents))).label is DocLabel.GOLDEN


class TestBM25:
    def test_zero_when_no_term_matches(self):
        corpus = Corpus(documents={"d": Document(id="d", title="", text="cat sat")})
        stats = build_corpus_stats(corpus)
        assert bm25_score(["dog"], corpus.doc("d"), stats) == 0.0

    def test_single_doc_hand_value(self):
        corpus = Corpus(documents={"d": Document(id="d", title="", text="cat sat")})
        stats = build_corpus_stats(corpus)
        # dl == avgdl, so tf term is (k1+1)/(1+k1) = 1; idf = ln(1 + 0.5/1.5)
        expected = 2 * math.log(1 + 0.5 / 1.5)
        got = bm25_score(["cat", "sat"], corpus.doc("d"), stats, k1=1.2, b=0.75)
        assert got == pytest.approx(expected, abs=1e-12)

    def test_tf_monotone_at_large_k1(self):
        docs = {
            "a": Document(id="a", title="", text="term word pad"),
            "b": Document(id="b", title="", text="term term pad"),
        }
        corpus = Corpus(documents=docs)
        stats = build_corpus_stats(corpus)
        s1 = bm25_score(["term"], corpus.doc("a"), stats, k1=1000.0)
        s2 = bm25_score(["term"], corpus.doc("b"), stats, k1=1000.0)
        assert s2 > s1

    def test_empty_query_rejected(self):
        corpus = Corpus(documents={"d": Document(id="d", title="", text="x")})
        stats = build_corpus_stats(corpus)
        with pytest.raises(RetrievalError):
            bm25_score([], corpus.doc("d"), stats)

    def test_matches_independent_reference(self):
        corpus = generate_synthetic_benchmark(3, 2)
        stats = build_corpus_stats(corpus)
        texts = [d.text for d in corpus.documents.values()]
        query = corpus.queries[0]
        for doc in list(corpus.documents.values())[:10]:
            mine = bm25_score(tokenize(query.text), doc, stats)
            ref = reference_bm25(query.text, doc.text, texts)
            assert mine == pytest.approx(ref, abs=1e-9)


class TestPools:
    def test_full_corpus_pool_sorted(self):
        corpus = generate_synthetic_benchmark(7, 1)
        pool = build_candidate_pool(corpus.queries[0], corpus, n=25)
        assert len(pool) == 25
        scores = pool.scores
        assert all(scores[i] >= scores[i + 1] for i in range(len(scores) - 1))

    def test_tie_break_by_doc_id(self):
        docs = {
            "b": Document(id="b", title="", text="same text"),
            "a": Document(id="a", title="", text="same text"),
        }
        corpus = Corpus(documents=docs, queries=[
            Query(id="q", text="same", gold_answers=("x",))
        ])
        pool = build_candidate_pool(corpus.queries[0], corpus, n=2)
        assert pool.doc_ids == ("a", "b")

    def test_prefix_of_full_sort(self):
        corpus = generate_synthetic_benchmark(9, 2)
        query = corpus.queries[0]
        stats = build_corpus_stats(corpus)
        q_tokens = tokenize(query.text)
        brute = sorted(
            (
                (d.id, bm25_score(q_tokens, d, stats))
                for d in corpus.documents.values()
            ),
            key=lambda item: (-item[1], item[0]),
        )
        brute = [(d, s) for d, s in brute if s > 0]
        pool5 = build_candidate_pool(query, corpus, n=5, stats=stats)
        assert list(pool5.entries) == brute[:5]
        pool_all = build_candidate_pool(query, corpus, n=len(corpus.documents), stats=stats)
        assert list(pool_all.entries) == brute

    def test_zero_score_documents_not_retrieved(self):
        docs = {
            "hit": Document(id="hit", title="", text="query words"),
            "miss": Document(id="miss", title="", text="unrelated"),
        }
        corpus = Corpus(documents=docs, queries=[
            Query(id="q", text="query words", gold_answers=("x",))
        ])
        pool = build_candidate_pool(corpus.queries[0], corpus, n=10)
        assert pool.doc_ids == ("hit",)

    def test_evidence_from_pool(self):
        corpus = generate_synthetic_benchmark(7, 1)
        pool = build_candidate_pool(corpus.queries[0], corpus, n=25)
        ev = evidence_from_pool(pool, [4, 0, 2])
        assert ev.doc_ids == (pool.doc_ids[4], pool.doc_ids[0], pool.doc_ids[2])
        assert ev.pool_positions == (5, 1, 3)
        assert ev.score_scale == max(pool.scores)
        assert len(top_k_evidence(pool, 99)) == 25
        with pytest.raises(ValueError):
            evidence_from_pool(pool, [30])


class TestDenseScores:
    def test_pool_from_score_file(self, tmp_path):
        corpus = generate_synthetic_benchmark(7, 1)
        query = corpus.queries[0]
        path = tmp_path / "scores.jsonl"
        doc_ids = list(corpus.documents)[:4]
        write_jsonl(path, [
            {"query_id": query.id, "doc_id": d, "score": float(i)}
            for i, d in enumerate(doc_ids)
        ])
        table = load_dense_scores(path)
        pool = build_pool_from_scores(query, table, corpus, n=3)
        assert pool.doc_ids == tuple(reversed(doc_ids[1:]))

    def test_missing_query_rejected(self, tmp_path):
        corpus = generate_synthetic_benchmark(7, 1)
        with pytest.raises(RetrievalError):
            build_pool_from_scores(corpus.queries[0], {}, corpus)

    def test_bad_record(self, tmp_path):
        path = tmp_path / "scores.jsonl"
        path.write_text('{"query_id": "q", "doc_id": "d"}\n')
        with pytest.raises(ParseError):
            load_dense_scores(path)


class TestSyntheticBenchmark:
    def test_shape(self):
        corpus = generate_synthetic_benchmark(7, 1)
        assert len(corpus.queries) == 1
        assert len(corpus.documents) == 25
        labels = [d.label for d in corpus.documents.values()]
        assert labels.count(DocLabel.GOLDEN) == 2
        assert labels.count(DocLabel.MISLEADING) == 3
        assert labels.count(DocLabel.IRRELEVANT) == 20

    def test_deterministic_bytes(self, tmp_path):
        a, b = tmp_path / "a.jsonl", tmp_path / "b.jsonl"
        write_corpus(generate_synthetic_benchmark(7, 3), a)
        write_corpus(generate_synthetic_benchmark(7, 3), b)
        assert a.read_bytes() == b.read_bytes()
        write_corpus(generate_synthetic_benchmark(8, 3), b)
        assert a.read_bytes() != b.read_bytes()

    def test_single_golden_required_cardinality(self):
        corpus = generate_synthetic_benchmark(7, 1, SyntheticSpec(n_golden=1))
        assert len(corpus.queries[0].required_golden_ids) == 1

    def test_misleading_ranks_above_lower_golden(self):
        # rank property checked with the independent reference implementation
        corpus = generate_synthetic_benchmark(7, 1)
        query = corpus.queries[0]
        texts = {d.id: d.text for d in corpus.documents.values()}
        scored = sorted(
            (
                (reference_bm25(query.text, text, list(texts.values())), doc_id)
                for doc_id, text in texts.items()
            ),
            reverse=True,
        )
        ranked = [doc_id for _, doc_id in scored]
        labels = {d.id: d.label for d in corpus.documents.values()}
        golden_ranks = [ranked.index(d) for d in query.required_golden_ids]
        misleading_ranks = [
            ranked.index(d) for d, lab in labels.items() if lab is DocLabel.MISLEADING
        ]
        assert min(misleading_ranks) < max(golden_ranks)

    def test_distractors_token_disjoint_from_gold(self):
        corpus = generate_synthetic_benchmark(11, 4)
        for query in corpus.queries:
            gold_tokens = set()
            for g in query.gold_answers:
                gold_tokens.update(tokenize(g))
            for doc in corpus.documents.values():
                if doc.label is DocLabel.MISLEADING:
                    assert not gold_tokens & set(tokenize(doc.answer_span))

    def test_golden_docs_carry_answer_fragments(self):
        corpus = generate_synthetic_benchmark(11, 2)
        for query in corpus.queries:
            joint = " ".join(
                corpus.doc(d).text for d in query.required_golden_ids
            )
            for tok in tokenize(query.gold_answers[0]):
                assert tok in tokenize(joint)

    def test_bad_arguments(self):
        with pytest.raises(ValueError):
            generate_synthetic_benchmark(1, 0)
        with pytest.raises(ValueError):
            SyntheticSpec(n_golden=3)
