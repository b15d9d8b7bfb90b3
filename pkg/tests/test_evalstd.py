"""Spoken term detection: TF-IDF selection, relevance scoring, ranking, MAP."""

import math
import warnings

import numpy as np
import pytest

from segembed.errors import DataError, EvaluationError
from segembed.evalcluster import cosine
from segembed.evalstd import (
    Document,
    DocumentIndex,
    QuerySpec,
    average_precision,
    build_retrieval_task,
    mean_average_precision,
    rank_documents,
    relevance_score,
    run_retrieval,
    tfidf_select_queries,
)

RNG = np.random.default_rng(51)


def _doc(doc_id, vectors, tokens=None):
    tokens = tokens or [f"w{i}" for i in range(len(vectors))]
    return Document(doc_id, tuple(zip(tokens, vectors)))


class TestTfidf:
    def test_ubiquitous_term_scores_zero(self):
        transcripts = [["x", "a"], ["x", "b"], ["x", "c"]]
        selected = tfidf_select_queries(transcripts, 3)
        assert "x" not in selected

    def test_hand_arithmetic(self):
        # term q: tf 3 in one doc, df 2 of N=4 -> 3 * ln 2
        transcripts = [["q", "q", "q"], ["q"], ["z"], ["z", "z"]]
        selected = tfidf_select_queries(transcripts, 1)
        assert selected == ["q"]
        score_q = 3 * math.log(4 / 2)
        score_z = 2 * math.log(4 / 2)
        assert score_q == pytest.approx(2.0794, abs=1e-4)
        assert score_q > score_z

    def test_tie_break_lexicographic(self):
        transcripts = [["b", "a"], ["c"]]
        assert tfidf_select_queries(transcripts, 2) == ["a", "b"]

    def test_too_many_queries_rejected(self):
        with pytest.raises(DataError):
            tfidf_select_queries([["a", "b"]], 3)


class TestRelevanceScore:
    def test_identical_singleton(self):
        q = RNG.normal(size=4)
        assert relevance_score(q, _doc("d", [q]), top_k=5) == pytest.approx(1.0)

    def test_hand_example(self):
        q = np.array([1.0, 0.0])
        doc = _doc(
            "d",
            [np.array([1.0, 0.0]), np.array([0.0, 1.0]),
             np.array([math.sqrt(0.5), math.sqrt(0.5)])],
        )
        expected = (1.0 + math.sqrt(0.5)) / 2.0
        assert relevance_score(q, doc, top_k=2) == pytest.approx(expected, abs=1e-12)
        assert expected == pytest.approx(0.8536, abs=1e-4)

    def test_short_document_divides_by_effective_k(self):
        q = np.array([1.0, 0.0])
        doc = _doc("d", [np.array([0.5, 0.5])])
        assert relevance_score(q, doc, top_k=5) == pytest.approx(
            cosine(q, np.array([0.5, 0.5]))
        )

    def test_monotone_in_word_similarity(self):
        q = np.array([1.0, 0.0])
        low = _doc("d", [np.array([0.0, 1.0]), np.array([1.0, 1.0])])
        high = _doc("d", [np.array([1.0, 0.1]), np.array([1.0, 1.0])])
        assert relevance_score(q, high, 2) > relevance_score(q, low, 2)

    def test_rescaling_invariance(self):
        q = RNG.normal(size=3)
        vectors = [RNG.normal(size=3) for _ in range(4)]
        doc = _doc("d", vectors)
        scaled = _doc("d", [7.0 * v for v in vectors])
        assert relevance_score(3.0 * q, scaled, 2) == pytest.approx(
            relevance_score(q, doc, 2), abs=1e-12
        )

    def test_k_beyond_doc_size_is_k_independent(self):
        q = RNG.normal(size=3)
        doc = _doc("d", [RNG.normal(size=3) for _ in range(3)])
        assert relevance_score(q, doc, 3) == relevance_score(q, doc, 10)


class TestRankDocuments:
    def test_single_document(self):
        q = QuerySpec("q", np.array([1.0, 0.0]))
        index = DocumentIndex((_doc("only", [np.array([0.2, 0.9])]),))
        assert rank_documents(q, index, 1)[0][0] == "only"

    def test_exact_match_ranks_first(self):
        qv = np.array([1.0, 0.0])
        index = DocumentIndex(
            (_doc("hit", [qv]), _doc("miss", [np.array([0.0, 1.0])]))
        )
        ranked = rank_documents(QuerySpec("q", qv), index, 1)
        assert [doc_id for doc_id, _ in ranked] == ["hit", "miss"]

    def test_scores_independent_of_document_order(self):
        docs = [
            _doc(f"d{i}", [RNG.normal(size=3) for _ in range(3)]) for i in range(4)
        ]
        q = QuerySpec("q", RNG.normal(size=3))
        a = dict(rank_documents(q, DocumentIndex(tuple(docs)), 2))
        b = dict(rank_documents(q, DocumentIndex(tuple(reversed(docs))), 2))
        assert a == b


def brute_average_precision(ranked_ids, relevant):
    """Independent AP oracle: walk every relevant document's rank."""
    ap_terms = []
    for doc in relevant:
        rank = ranked_ids.index(doc) + 1
        n_at_or_above = sum(1 for d in ranked_ids[:rank] if d in relevant)
        ap_terms.append(n_at_or_above / rank)
    return sum(ap_terms) / len(relevant)


class TestAveragePrecisionAndMap:
    def test_hand_example(self):
        ap = average_precision(["r1", "n1", "r2"], {"r1", "r2"})
        assert ap == pytest.approx((1.0 + 2.0 / 3.0) / 2.0, abs=1e-12)
        assert ap == pytest.approx(0.8333, abs=1e-4)

    def test_all_relevant_first(self):
        assert average_precision(["r1", "r2", "n"], {"r1", "r2"}) == 1.0

    def test_matches_brute_force(self):
        rng = np.random.default_rng(6)
        for _ in range(100):
            n = int(rng.integers(2, 6))
            docs = [f"d{i}" for i in range(n)]
            rng.shuffle(docs)
            n_rel = int(rng.integers(1, n + 1))
            relevant = set(rng.choice(docs, size=n_rel, replace=False))
            assert average_precision(docs, relevant) == pytest.approx(
                brute_average_precision(docs, relevant), abs=1e-12
            )

    def test_map_mean_and_exclusions(self):
        rankings = {"q1": ["a", "b"], "q2": ["b", "a"], "q3": ["a", "b"]}
        relevant = {"q1": {"a"}, "q2": {"a"}, "q3": set()}
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always")
            report = mean_average_precision(rankings, relevant)
        assert report.map == pytest.approx((1.0 + 0.5) / 2.0)
        assert report.excluded == ("q3",)
        assert len(caught) == 1

    def test_no_scorable_queries_rejected(self):
        with pytest.raises(EvaluationError), warnings.catch_warnings():
            warnings.simplefilter("ignore")
            mean_average_precision({"q": ["a"]}, {"q": set()})


class TestDocumentTypes:
    def test_empty_document_rejected(self):
        with pytest.raises(DataError):
            Document("d", ())

    def test_mixed_dims_rejected(self):
        with pytest.raises(DataError):
            Document("d", (("a", np.zeros(3)), ("b", np.zeros(4))))

    def test_duplicate_doc_ids_rejected(self):
        doc = _doc("d", [np.zeros(2) + 1])
        with pytest.raises(DataError):
            DocumentIndex((doc, doc))


class TestRetrievalTask:
    @staticmethod
    def _entries(n_labels=4, per_label=10, dim=3, seed=0):
        rng = np.random.default_rng(seed)
        centers = rng.normal(size=(n_labels, dim)) * 4
        entries, labels = [], {}
        i = 0
        for label in range(n_labels):
            for _ in range(per_label):
                sid = f"s{i:03d}"
                entries.append((sid, centers[label] + 0.1 * rng.normal(size=dim)))
                labels[sid] = f"u{label}"
                i += 1
        return entries, labels

    def test_build_and_run(self):
        entries, labels = self._entries()
        index, queries = build_retrieval_task(entries, labels, n_documents=5,
                                              n_queries=3, seed=0)
        assert len(index) == 5
        assert len(queries) == 3
        assert all(q.relevant for q in queries)
        report = run_retrieval(index, queries, top_k=2)
        assert 0.0 <= report.map <= 1.0
        # clumped same-label embeddings make retrieval near-perfect
        assert report.map > 0.9

    def test_deterministic(self):
        entries, labels = self._entries()
        a_index, a_queries = build_retrieval_task(entries, labels, 5, 3, seed=4)
        b_index, b_queries = build_retrieval_task(entries, labels, 5, 3, seed=4)
        assert [d.transcript for d in a_index.documents] == [
            d.transcript for d in b_index.documents
        ]
        for qa, qb in zip(a_queries, b_queries):
            assert qa.term == qb.term
            assert np.array_equal(qa.embedding, qb.embedding)
