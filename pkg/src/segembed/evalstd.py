"""Spoken term detection over embedded archives.

Documents are bags of embedded spoken words. Queries are selected by
TF-IDF over the transcripts, each query is represented by the embedding of
one sampled spoken realization, documents are ranked by the mean of the
top-k cosine similarities between the query and the document's words, and
retrieval quality is summarized as mean average precision.
"""

import csv
import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import DataError, EvaluationError
from .evalcluster import cosine
from .seeding import rng_for


@dataclass(frozen=True)
class Document:
    """One spoken document: embedded word tokens plus transcript tokens."""

    doc_id: str
    words: tuple  # of (token, vector)
    transcript: tuple = ()

    def __post_init__(self):
        if not self.words:
            raise DataError(f"document {self.doc_id!r} has no words")
        words = tuple((str(t), np.asarray(v, dtype=np.float64)) for t, v in self.words)
        dims = {v.shape for _, v in words}
        if len(dims) != 1 or any(len(s) != 1 for s in dims):
            raise DataError(f"document {self.doc_id!r}: inconsistent embedding dims")
        object.__setattr__(self, "words", words)
        transcript = tuple(self.transcript) or tuple(t for t, _ in words)
        object.__setattr__(self, "transcript", transcript)


@dataclass(frozen=True)
class DocumentIndex:
    """Immutable archive of spoken documents sharing one embedding dim."""

    documents: tuple

    def __post_init__(self):
        docs = tuple(self.documents)
        if not docs:
            raise DataError("document index is empty")
        ids = [d.doc_id for d in docs]
        if len(set(ids)) != len(ids):
            raise DataError("duplicate document ids")
        dims = {d.words[0][1].shape[0] for d in docs}
        if len(dims) != 1:
            raise DataError(f"mixed embedding dimensions across documents: {dims}")
        object.__setattr__(self, "documents", docs)

    def __len__(self):
        return len(self.documents)


@dataclass(frozen=True)
class QuerySpec:
    """A query term, its embedding, and its relevant documents."""

    term: str
    embedding: np.ndarray
    relevant: frozenset = field(default_factory=frozenset)

    def __post_init__(self):
        object.__setattr__(
            self, "embedding", np.asarray(self.embedding, dtype=np.float64)
        )
        object.__setattr__(self, "relevant", frozenset(self.relevant))


def tfidf_select_queries(transcripts, n_queries: int):
    """Top-scoring terms by max-over-documents tf(t, d) * ln(N / df(t)).

    ``transcripts`` is one token sequence per document. Ties are broken
    lexicographically; a term occurring in every document scores zero.
    """
    transcripts = [list(tokens) for tokens in transcripts]
    if not transcripts or all(not t for t in transcripts):
        raise DataError("empty transcripts")
    n_docs = len(transcripts)
    max_tf = {}
    df = {}
    for tokens in transcripts:
        counts = {}
        for tok in tokens:
            counts[tok] = counts.get(tok, 0) + 1
        for tok, c in counts.items():
            max_tf[tok] = max(max_tf.get(tok, 0), c)
            df[tok] = df.get(tok, 0) + 1
    if n_queries < 1 or n_queries > len(max_tf):
        raise DataError(
            f"n_queries must be in [1, {len(max_tf)}], got {n_queries}"
        )
    scored = [
        (tok, max_tf[tok] * math.log(n_docs / df[tok])) for tok in max_tf
    ]
    scored.sort(key=lambda kv: (-kv[1], kv[0]))
    return [tok for tok, _ in scored[:n_queries]]


def relevance_score(query_embedding, document: Document, top_k: int) -> float:
    """Mean of the top min(k, |d|) cosine similarities between the query
    embedding and the document's word embeddings (ties by word position)."""
    if top_k < 1:
        raise DataError("top_k must be >= 1")
    if not document.words:
        raise DataError("empty document")
    q = np.asarray(query_embedding, dtype=np.float64)
    sims = [cosine(v, q) for _, v in document.words]
    order = sorted(range(len(sims)), key=lambda i: (-sims[i], i))
    k_eff = min(top_k, len(sims))
    return float(sum(sims[i] for i in order[:k_eff]) / k_eff)


def rank_documents(query: QuerySpec, index: DocumentIndex, top_k: int):
    """All documents sorted by descending relevance score (ties by id)."""
    scored = [
        (doc.doc_id, relevance_score(query.embedding, doc, top_k))
        for doc in index.documents
    ]
    scored.sort(key=lambda kv: (-kv[1], kv[0]))
    return scored


def average_precision(ranked_ids, relevant) -> float:
    """AP of one ranked list: mean over relevant documents of the precision
    at each relevant document's rank."""
    relevant = set(relevant)
    if not relevant:
        raise EvaluationError("average precision needs a non-empty relevant set")
    hits = 0
    total = 0.0
    for rank, doc_id in enumerate(ranked_ids, start=1):
        if doc_id in relevant:
            hits += 1
            total += hits / rank
    return total / len(relevant)


@dataclass(frozen=True)
class RetrievalReport:
    """MAP plus per-query detail; queries without relevant documents are
    excluded from the mean and listed here."""

    map: float
    per_query: dict
    excluded: tuple


def mean_average_precision(rankings, relevant_sets) -> RetrievalReport:
    """MAP over queries.

    ``rankings`` maps query term -> ranked document ids; ``relevant_sets``
    maps query term -> relevant document ids. Queries with an empty
    relevant set are excluded with a warning and reported.
    """
    per_query = {}
    excluded = []
    for term, ranked in rankings.items():
        rel = set(relevant_sets.get(term, ()))
        if not rel:
            excluded.append(term)
            continue
        per_query[term] = average_precision(ranked, rel)
    if excluded:
        warnings.warn(
            f"{len(excluded)} queries with no relevant documents excluded from MAP"
        )
    if not per_query:
        raise EvaluationError("no query has a non-empty relevant set")
    return RetrievalReport(
        map=float(np.mean(list(per_query.values()))),
        per_query=per_query,
        excluded=tuple(sorted(excluded)),
    )


# -- synthetic retrieval task ----------------------------------------------


def build_retrieval_task(entries, labels_by_id, n_documents: int,
                         n_queries: int, seed: int):
    """Partition embedded segments into documents and select queries.

    ``entries`` is a list of (segment_id, vector); ``labels_by_id`` maps
    segment_id -> unit label. Segments are shuffled (seeded) into
    ``n_documents`` near-equal documents whose transcripts are the member
    labels. Queries are the top TF-IDF terms; each query's embedding is one
    seeded sampled realization of that term. Returns (DocumentIndex,
    [QuerySpec, ...]).
    """
    if n_documents < 2 or n_documents > len(entries):
        raise DataError("need 2 <= n_documents <= number of segments")
    order = rng_for(seed, "retrieval:partition").permutation(len(entries))
    buckets = np.array_split(order, n_documents)
    documents = []
    for d, bucket in enumerate(buckets):
        words = []
        for i in bucket:
            sid, vec = entries[int(i)]
            label = labels_by_id[sid]
            if label is None:
                raise DataError(f"segment {sid!r} has no unit label")
            words.append((label, vec))
        documents.append(Document(doc_id=f"doc-{d:04d}", words=tuple(words)))
    index = DocumentIndex(tuple(documents))

    terms = tfidf_select_queries([d.transcript for d in index.documents], n_queries)
    by_label = {}
    for sid, vec in entries:
        by_label.setdefault(labels_by_id[sid], []).append(vec)
    query_rng = rng_for(seed, "retrieval:queries")
    queries = []
    for term in terms:
        pool = by_label[term]
        embedding = pool[int(query_rng.integers(len(pool)))]
        relevant = frozenset(
            d.doc_id for d in index.documents if term in d.transcript
        )
        queries.append(QuerySpec(term=term, embedding=embedding, relevant=relevant))
    return index, queries


def run_retrieval(index: DocumentIndex, queries, top_k: int) -> RetrievalReport:
    """Rank every document for every query and compute MAP at one top_k."""
    rankings = {
        q.term: [doc_id for doc_id, _ in rank_documents(q, index, top_k)]
        for q in queries
    }
    relevant = {q.term: q.relevant for q in queries}
    return mean_average_precision(rankings, relevant)


def write_map_csv(path, table, top_k_values) -> None:
    """``table`` maps variant -> {top_k: MAP}. Emits one row per top_k with
    a column per variant plus difference columns of variant d against every
    other variant present."""
    variants = sorted(table)
    diff_targets = [v for v in variants if v != "d"] if "d" in variants else []
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(
            ["top_k"] + variants + [f"d-{v}" for v in diff_targets]
        )
        for k in top_k_values:
            row = [k] + [repr(table[v][k]) for v in variants]
            row += [repr(table["d"][k] - table[v][k]) for v in diff_targets]
            writer.writerow(row)
