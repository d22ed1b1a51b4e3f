import numpy as np
import pytest

from evsel.corpus import Corpus, DocLabel, Document, EvidenceSet, Query


def make_labeled_corpus():
    """Handcrafted 6-document corpus with one two-golden-document query."""
    docs = [
        Document(id="g1", title="first golden", text="alpha beta part one answera",
                 label=DocLabel.GOLDEN, answer_span="answera"),
        Document(id="g2", title="second golden", text="gamma delta part two answerb",
                 label=DocLabel.GOLDEN, answer_span="answerb"),
        Document(id="m1", title="distractor", text="alpha beta gamma delta wronga wrongb",
                 label=DocLabel.MISLEADING, answer_span="wronga wrongb"),
        Document(id="i1", title="noise", text="nothing useful here", label=DocLabel.IRRELEVANT),
        Document(id="i2", title="noise", text="more filler text", label=DocLabel.IRRELEVANT),
        Document(id="i3", title="noise", text="entirely off topic", label=DocLabel.IRRELEVANT),
    ]
    query = Query(
        id="q1",
        text="alpha beta gamma delta",
        gold_answers=("answera answerb",),
        required_golden_ids=("g1", "g2"),
    )
    corpus = Corpus(documents={d.id: d for d in docs}, queries=[query])
    corpus.validate()
    return corpus


def evidence_of(corpus, doc_ids, scores=None):
    query_id = corpus.queries[0].id
    scores = tuple(scores) if scores is not None else tuple(
        float(10 - i) for i in range(len(doc_ids))
    )
    return EvidenceSet(query_id=query_id, doc_ids=tuple(doc_ids), scores=scores)


@pytest.fixture
def labeled_corpus():
    return make_labeled_corpus()


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
