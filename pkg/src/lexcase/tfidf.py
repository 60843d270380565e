"""tf-idf vectors with cosine ranking.

Weights are raw term frequency times a smoothed idf,

    idf(t) = ln((1 + N) / (1 + df(t))) + 1,

and every vector is L2-normalized, so cosine similarity reduces to a dot
product over the terms the two vectors share. Terms outside the fitted
vocabulary are ignored at transform time; a text with no in-vocabulary
tokens maps to the zero vector and scores 0 against everything.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path

from .corpus import Document
from .errors import CorpusParseError, DuplicateIdError, EmptyCorpusError
from .fusion import ScoredList

_MODEL_FORMAT_VERSION = 1


@dataclass(frozen=True)
class TfidfModel:
    """Fitted idf table plus normalized sparse vectors of the fit corpus."""

    idf: dict[str, float]
    doc_vectors: dict[str, dict[str, float]]
    n_docs: int

    @property
    def vocabulary(self) -> tuple[str, ...]:
        return tuple(sorted(self.idf))


def fit(docs: list[Document]) -> TfidfModel:
    if not docs:
        raise EmptyCorpusError("cannot fit tf-idf on zero documents")
    df: dict[str, int] = {}
    seen: set[str] = set()
    for doc in docs:
        if doc.id in seen:
            raise DuplicateIdError(f"duplicate doc id {doc.id!r} in tf-idf fit")
        seen.add(doc.id)
        for tok in set(doc.tokens):
            df[tok] = df.get(tok, 0) + 1
    n = len(docs)
    idf = {t: math.log((1.0 + n) / (1.0 + c)) + 1.0 for t, c in df.items()}
    model = TfidfModel(idf=idf, doc_vectors={}, n_docs=n)
    vectors = {doc.id: transform(model, doc.tokens) for doc in docs}
    return TfidfModel(idf=idf, doc_vectors=vectors, n_docs=n)


def transform(model: TfidfModel, tokens) -> dict[str, float]:
    """Normalized sparse vector for a token list; OOV terms are dropped."""
    counts: dict[str, int] = {}
    for tok in tokens:
        if tok in model.idf:
            counts[tok] = counts.get(tok, 0) + 1
    weights = {t: tf * model.idf[t] for t, tf in counts.items()}
    norm = math.sqrt(sum(w * w for w in weights.values()))
    if norm == 0.0:
        return {}
    return {t: w / norm for t, w in weights.items()}


def cosine(a: dict[str, float], b: dict[str, float]) -> float:
    if len(b) < len(a):
        a, b = b, a
    return sum(w * b[t] for t, w in a.items() if t in b)


def rank_cosine(
    model: TfidfModel,
    query_tokens,
    candidate_ids,
    query_id: str = "",
) -> ScoredList:
    """Rank fitted documents against a query by cosine similarity."""
    q = transform(model, query_tokens)
    scores = {}
    for cid in candidate_ids:
        vec = model.doc_vectors.get(cid)
        if vec is None:
            raise KeyError(f"doc id {cid!r} was not part of the tf-idf fit")
        scores[cid] = cosine(q, vec)
    return ScoredList.ranked(query_id, scores)


def save_model(model: TfidfModel, path) -> None:
    payload = {
        "format": "lexcase-tfidf",
        "version": _MODEL_FORMAT_VERSION,
        "n_docs": model.n_docs,
        "idf": model.idf,
        "doc_vectors": model.doc_vectors,
    }
    Path(path).write_text(json.dumps(payload, sort_keys=True) + "\n", encoding="utf-8")


def load_model(path) -> TfidfModel:
    try:
        payload = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise CorpusParseError(f"{path}: not a valid tf-idf model file: {exc}") from exc
    if payload.get("format") != "lexcase-tfidf":
        raise CorpusParseError(f"{path}: not a lexcase tf-idf model file")
    if payload.get("version") != _MODEL_FORMAT_VERSION:
        raise CorpusParseError(
            f"{path}: unsupported model version {payload.get('version')!r}"
        )
    return TfidfModel(
        idf={t: float(v) for t, v in payload["idf"].items()},
        doc_vectors={
            d: {t: float(w) for t, w in vec.items()}
            for d, vec in payload["doc_vectors"].items()
        },
        n_docs=int(payload["n_docs"]),
    )
