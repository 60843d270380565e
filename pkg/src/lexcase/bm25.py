"""Okapi BM25 over an in-memory inverted index.

The score of document D for query Q is

    sum over query tokens q of
        idf(q) * f(q, D) * (k1 + 1) / (f(q, D) + k1 * (1 - b + b * |D| / avgdl))

with ``f(q, D)`` the term frequency of q in D, ``|D|`` the document length
in tokens and ``avgdl`` the mean document length in the collection. The
inverse document frequency uses the nonnegative form

    idf(q) = ln(1 + (N - df + 0.5) / (df + 0.5))

so downstream multiplicative fusion never sees negative factors. Repeated
query tokens contribute once per occurrence.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

from .corpus import Document
from .errors import (
    CorpusParseError,
    DuplicateIdError,
    EmptyCorpusError,
    MissingDocumentError,
)
from .fusion import ScoredList

_INDEX_FORMAT_VERSION = 1


@dataclass(frozen=True)
class Bm25Params:
    k1: float = 1.2
    b: float = 0.75

    def __post_init__(self):
        if self.k1 < 0:
            raise ValueError("k1 must be nonnegative")
        if not 0.0 <= self.b <= 1.0:
            raise ValueError("b must lie in [0, 1]")


@dataclass
class InvertedIndex:
    """Term postings plus the corpus statistics BM25 needs.

    ``postings`` maps each term to a list of (doc_id, term_frequency)
    pairs; iteration over terms is sorted and therefore deterministic.
    """

    postings: dict[str, list[tuple[str, int]]]
    doc_len: dict[str, int]
    n_docs: int
    avgdl: float
    df: dict[str, int] = field(default_factory=dict)

    def __post_init__(self):
        if not self.df:
            self.df = {t: len(p) for t, p in self.postings.items()}

    def term_frequency(self, term: str, doc_id: str) -> int:
        for did, tf in self.postings.get(term, ()):
            if did == doc_id:
                return tf
        return 0


def build_index(docs: list[Document]) -> InvertedIndex:
    """Index preprocessed documents; raises EmptyCorpusError on []."""
    if not docs:
        raise EmptyCorpusError("cannot build an index over zero documents")
    postings: dict[str, dict[str, int]] = {}
    doc_len: dict[str, int] = {}
    for doc in docs:
        if doc.id in doc_len:
            raise DuplicateIdError(f"duplicate doc id {doc.id!r} in index build")
        doc_len[doc.id] = len(doc.tokens)
        for tok in doc.tokens:
            postings.setdefault(tok, {}).setdefault(doc.id, 0)
            postings[tok][doc.id] += 1
    sorted_postings = {
        term: sorted(counts.items()) for term, counts in sorted(postings.items())
    }
    n = len(doc_len)
    avgdl = sum(doc_len.values()) / n
    return InvertedIndex(postings=sorted_postings, doc_len=doc_len, n_docs=n, avgdl=avgdl)


def idf(index: InvertedIndex, term: str) -> float:
    df = index.df.get(term, 0)
    return math.log(1.0 + (index.n_docs - df + 0.5) / (df + 0.5))


def score(
    index: InvertedIndex,
    params: Bm25Params,
    query_tokens,
    doc_id: str,
) -> float:
    if doc_id not in index.doc_len:
        raise MissingDocumentError(f"doc id {doc_id!r} not in index")
    dl = index.doc_len[doc_id]
    norm = params.k1 * (1.0 - params.b + params.b * dl / index.avgdl) if index.avgdl > 0 else params.k1
    total = 0.0
    for tok in query_tokens:
        tf = index.term_frequency(tok, doc_id)
        if tf == 0:
            continue
        total += idf(index, tok) * tf * (params.k1 + 1.0) / (tf + norm)
    return total


def score_tokens(
    index: InvertedIndex,
    params: Bm25Params,
    query_tokens,
    doc_tokens,
) -> float:
    """Score an out-of-index token list using the index's statistics.

    Used where the scored text is not part of the collection the
    statistics come from (e.g. entailment premises scored against an
    article collection's idf/avgdl).
    """
    dl = len(doc_tokens)
    counts: dict[str, int] = {}
    for tok in doc_tokens:
        counts[tok] = counts.get(tok, 0) + 1
    norm = params.k1 * (1.0 - params.b + params.b * dl / index.avgdl) if index.avgdl > 0 else params.k1
    total = 0.0
    for tok in query_tokens:
        tf = counts.get(tok, 0)
        if tf == 0:
            continue
        total += idf(index, tok) * tf * (params.k1 + 1.0) / (tf + norm)
    return total


def rank(
    index: InvertedIndex,
    params: Bm25Params,
    query_tokens,
    candidate_ids,
    query_id: str = "",
) -> ScoredList:
    """Score every candidate, descending score with ascending-id ties."""
    scores = {cid: score(index, params, query_tokens, cid) for cid in candidate_ids}
    return ScoredList.ranked(query_id, scores)


def save_index(index: InvertedIndex, path) -> None:
    payload = {
        "format": "lexcase-bm25-index",
        "version": _INDEX_FORMAT_VERSION,
        "n_docs": index.n_docs,
        "avgdl": index.avgdl,
        "doc_len": index.doc_len,
        "postings": {t: [[d, tf] for d, tf in p] for t, p in index.postings.items()},
    }
    Path(path).write_text(json.dumps(payload, sort_keys=True) + "\n", encoding="utf-8")


def load_index(path) -> InvertedIndex:
    try:
        payload = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise CorpusParseError(f"{path}: not a valid index file: {exc}") from exc
    if payload.get("format") != "lexcase-bm25-index":
        raise CorpusParseError(f"{path}: not a lexcase BM25 index file")
    if payload.get("version") != _INDEX_FORMAT_VERSION:
        raise CorpusParseError(
            f"{path}: unsupported index version {payload.get('version')!r}"
        )
    postings = {
        t: [(d, int(tf)) for d, tf in p] for t, p in payload["postings"].items()
    }
    return InvertedIndex(
        postings=postings,
        doc_len={d: int(n) for d, n in payload["doc_len"].items()},
        n_docs=int(payload["n_docs"]),
        avgdl=float(payload["avgdl"]),
    )
