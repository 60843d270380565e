"""End-to-end retrieval runs: preprocessing, scoring, fusion, selection.

A run pairs one scoring variant with one task's selection rule:

* ``d2v``      — paragraph-vector cosine over lightly-normalized text;
* ``bm25``     — BM25 over stemmed, stopped text;
* ``tfidf``    — tf-idf cosine over stemmed, stopped text;
* ``docbm``    — BM25 fused multiplicatively with the embedding cosine.

Case-law tasks keep a per-query candidate pool; statute retrieval shares
one article pool across queries, which this module detects so indexes
and embedding documents are built once instead of per query. Embedding
documents get ``query::candidate`` ids when the same candidate id can
name different texts under different queries.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from enum import Enum
from pathlib import Path

from . import bm25, embedding, tfidf
from .corpus import Document, QueryCase
from .errors import ConfigurationError, CorpusParseError
from .fusion import ScoredList, SelectionMode, SelectionRule, fuse_multiply, select
from .textprep import PrepConfig, Stage, preprocess, preprocess_text


class Variant(Enum):
    D2V = "d2v"
    BM25 = "bm25"
    DOCBM = "docbm"
    TFIDF = "tfidf"


class Task(Enum):
    T1 = "t1"
    T2 = "t2"
    T3 = "t3"


_DEFAULT_REL_FRAC = {Variant.D2V: 0.9, Variant.BM25: 0.9, Variant.TFIDF: 0.9, Variant.DOCBM: 0.8}


@dataclass(frozen=True)
class VariantResult:
    variant: Variant
    task: Task
    selections: dict[str, list[str]]
    rankings: dict[str, ScoredList]


def selection_rule_for(
    task: Task,
    variant: Variant,
    rel_frac: float | None = None,
    top_n: int | None = None,
    max_k: int = 10,
) -> SelectionRule:
    if task is Task.T1:
        frac = rel_frac if rel_frac is not None else _DEFAULT_REL_FRAC[variant]
        return SelectionRule(mode=SelectionMode.TOP_K_RELATIVE, max_k=max_k, rel_frac=frac)
    if task is Task.T2:
        return SelectionRule(mode=SelectionMode.ARGMAX)
    if top_n is not None:
        return SelectionRule(mode=SelectionMode.TOP_N, top_n=top_n)
    return SelectionRule(mode=SelectionMode.ARGMAX)


def _is_shared_pool(queries: list[QueryCase]) -> bool:
    """True when every candidate id names one text corpus-wide."""
    text_of: dict[str, str] = {}
    for q in queries:
        for c in q.candidates:
            if text_of.setdefault(c.id, c.text) != c.text:
                return False
    return True


def embedding_corpus(
    queries: list[QueryCase], prep: PrepConfig
) -> tuple[list[Document], bool]:
    """Training documents for the embedding, sorted by id.

    Returns ``(docs, pooled)``; when not pooled, ids are namespaced as
    ``query::candidate`` so twin candidate ids with different texts stay
    distinct.
    """
    pooled = _is_shared_pool(queries)
    docs: dict[str, Document] = {}
    for q in queries:
        for c in q.candidates:
            key = c.id if pooled else f"{q.id}::{c.id}"
            if key not in docs:
                docs[key] = preprocess(Document(id=key, text=c.text), prep)
    return [docs[k] for k in sorted(docs)], pooled


def _scored_with_plain_ids(query_id: str, ranked: ScoredList, pooled: bool) -> ScoredList:
    if pooled:
        return ranked
    scores = {doc_id.split("::", 1)[1]: s for doc_id, s in ranked.entries}
    return ScoredList.ranked(query_id, scores)


def run_variant(
    variant: Variant | str,
    task: Task | str,
    queries: list[QueryCase],
    *,
    bm25_params: bm25.Bm25Params = bm25.Bm25Params(),
    embed_cfg: embedding.EmbedConfig | None = None,
    embed_model: embedding.EmbeddingModel | None = None,
    infer_steps: int = embedding.DEFAULT_INFER_STEPS,
    rel_frac: float | None = None,
    top_n: int | None = None,
    max_k: int = 10,
    stage1: PrepConfig | None = None,
    stage2: PrepConfig | None = None,
) -> VariantResult:
    """Score, fuse and select for every query; deterministic given seeds."""
    variant = Variant(variant) if not isinstance(variant, Variant) else variant
    task = Task(task) if not isinstance(task, Task) else task
    stage1 = stage1 or PrepConfig(stage=Stage.STAGE1)
    stage2 = stage2 or PrepConfig(stage=Stage.STAGE2)
    rule = selection_rule_for(task, variant, rel_frac=rel_frac, top_n=top_n, max_k=max_k)

    needs_lexical = variant in (Variant.BM25, Variant.TFIDF, Variant.DOCBM)
    needs_embedding = variant in (Variant.D2V, Variant.DOCBM)

    model = embed_model
    emb_docs: dict[str, Document] = {}
    pooled = False
    if needs_embedding:
        docs, pooled = embedding_corpus(queries, stage1)
        emb_docs = {d.id: d for d in docs}
        if model is None:
            if embed_cfg is None:
                raise ConfigurationError(
                    f"variant {variant.value!r} needs a trained embedding model "
                    "or an embedding config to train one"
                )
            model = embedding.train(docs, embed_cfg)
        elif docs and not any(d.id in set(model.doc_ids) for d in docs):
            raise ConfigurationError(
                "embedding model covers none of this corpus's documents; "
                "train it on the same query set"
            )

    # candidate ids repeat across queries with different texts, so reusing
    # an index is only safe when the whole corpus shares one pool
    shared = _is_shared_pool(queries)
    lex_cache: dict[tuple[str, ...], tuple] = {}
    selections: dict[str, list[str]] = {}
    rankings: dict[str, ScoredList] = {}

    for q in queries:
        scored_parts = []
        if needs_lexical:
            key = q.candidate_ids if shared else (q.id,)
            if key not in lex_cache:
                cands2 = [preprocess(c, stage2) for c in q.candidates]
                index = bm25.build_index(cands2) if cands2 else None
                tfm = tfidf.fit(cands2) if variant is Variant.TFIDF and cands2 else None
                lex_cache[key] = (index, tfm)
            index, tfm = lex_cache[key]
            base2 = preprocess_text(q.base.text, stage2)
            if variant is Variant.TFIDF:
                scored_parts.append(
                    tfidf.rank_cosine(tfm, base2, q.candidate_ids, query_id=q.id)
                    if tfm
                    else ScoredList(q.id, ())
                )
            else:
                scored_parts.append(
                    bm25.rank(index, bm25_params, base2, q.candidate_ids, query_id=q.id)
                    if index
                    else ScoredList(q.id, ())
                )
        if needs_embedding:
            base1 = preprocess_text(q.base.text, stage1)
            cand_docs = [
                emb_docs[c.id if pooled else f"{q.id}::{c.id}"] for c in q.candidates
            ]
            ranked = embedding.rank_embed(
                model, base1, cand_docs, query_id=q.id, steps=infer_steps
            )
            scored_parts.append(_scored_with_plain_ids(q.id, ranked, pooled))

        if len(scored_parts) == 2:
            ranked = fuse_multiply(scored_parts[0], scored_parts[1])
        else:
            ranked = scored_parts[0]
        rankings[q.id] = ranked
        selections[q.id] = select(ranked, rule)

    return VariantResult(variant=variant, task=task, selections=selections, rankings=rankings)


def write_run(selections: dict[str, list[str]], path) -> None:
    """JSON-lines run file, one ``{"query", "retrieved"}`` object per query."""
    with Path(path).open("w", encoding="utf-8") as fh:
        for qid in sorted(selections):
            fh.write(
                json.dumps({"query": qid, "retrieved": list(selections[qid])}, sort_keys=True)
                + "\n"
            )


def write_scores(rankings: dict[str, ScoredList], path) -> None:
    """Per-query candidate scores, the input fusion needs."""
    with Path(path).open("w", encoding="utf-8") as fh:
        for qid in sorted(rankings):
            fh.write(
                json.dumps(
                    {"query": qid, "scores": dict(rankings[qid].entries)},
                    sort_keys=True,
                )
                + "\n"
            )


def read_scores(path) -> dict[str, ScoredList]:
    path = Path(path)
    rankings: dict[str, ScoredList] = {}
    with path.open(encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise CorpusParseError(f"{path}:{lineno}: invalid JSON: {exc}") from exc
            if not isinstance(obj, dict) or "query" not in obj or "scores" not in obj:
                raise CorpusParseError(
                    f"{path}:{lineno}: expected object with 'query' and 'scores'"
                )
            qid = str(obj["query"])
            if qid in rankings:
                raise CorpusParseError(f"{path}:{lineno}: duplicate query {qid!r}")
            rankings[qid] = ScoredList.ranked(
                qid, {str(k): float(v) for k, v in obj["scores"].items()}
            )
    return rankings


def read_run(path) -> dict[str, list[str]]:
    path = Path(path)
    runs: dict[str, list[str]] = {}
    with path.open(encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise CorpusParseError(f"{path}:{lineno}: invalid JSON: {exc}") from exc
            if not isinstance(obj, dict) or "query" not in obj or "retrieved" not in obj:
                raise CorpusParseError(
                    f"{path}:{lineno}: expected object with 'query' and 'retrieved'"
                )
            qid = str(obj["query"])
            if qid in runs:
                raise CorpusParseError(f"{path}:{lineno}: duplicate query {qid!r}")
            runs[qid] = [str(x) for x in obj["retrieved"]]
    return runs
