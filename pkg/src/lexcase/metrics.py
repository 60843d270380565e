"""Retrieval and classification metrics: micro P/R/F-beta, MAP@k, accuracy.

Precision and recall are micro-averaged: hit, retrieved and relevant
counts are pooled over all queries before dividing, so queries with
larger gold sets weigh more. Queries whose gold set is empty still count
toward the precision denominator but are skipped by MAP, which is only
defined where at least one relevant document exists.
"""

from __future__ import annotations

from dataclasses import dataclass

from .errors import UndefinedMetricError


@dataclass(frozen=True)
class RunResult:
    """Ordered retrieved ids and gold sets, keyed by query id.

    The key sets need not match: a query absent from ``retrieved`` is an
    empty run, one absent from ``gold`` has an empty gold set.
    """

    retrieved: dict[str, tuple[str, ...]]
    gold: dict[str, frozenset[str]]

    def __post_init__(self):
        for qid, ids in self.retrieved.items():
            if len(ids) != len(set(ids)):
                raise ValueError(f"query {qid!r} retrieves a duplicate id")

    def query_ids(self) -> tuple[str, ...]:
        return tuple(sorted(set(self.retrieved) | set(self.gold)))

    def pair(self, qid: str) -> tuple[tuple[str, ...], frozenset[str]]:
        return self.retrieved.get(qid, ()), self.gold.get(qid, frozenset())


@dataclass(frozen=True)
class MetricsReport:
    precision: float
    recall: float
    f_beta: float
    beta: float
    retrieved_total: int
    relevant_total: int
    correct_total: int
    zero_divisions: tuple[str, ...] = ()
    map_at_k: float | None = None
    k: int | None = None


def f_beta(precision: float, recall: float, beta: float) -> float:
    """(1+β²)PR / (β²P + R); 0 when both inputs are 0."""
    if beta <= 0:
        raise ValueError("beta must be positive")
    denom = beta * beta * precision + recall
    if denom == 0.0:
        return 0.0
    return (1.0 + beta * beta) * precision * recall / denom


def micro_prf(run: RunResult, beta: float = 1.0) -> MetricsReport:
    if beta <= 0:
        raise ValueError("beta must be positive")
    retrieved_total = relevant_total = correct_total = 0
    for qid in run.query_ids():
        retrieved, gold = run.pair(qid)
        retrieved_total += len(retrieved)
        relevant_total += len(gold)
        correct_total += len(gold.intersection(retrieved))
    flags = []
    if retrieved_total == 0:
        flags.append("precision")
    if relevant_total == 0:
        flags.append("recall")
    precision = correct_total / retrieved_total if retrieved_total else 0.0
    recall = correct_total / relevant_total if relevant_total else 0.0
    return MetricsReport(
        precision=precision,
        recall=recall,
        f_beta=f_beta(precision, recall, beta),
        beta=beta,
        retrieved_total=retrieved_total,
        relevant_total=relevant_total,
        correct_total=correct_total,
        zero_divisions=tuple(flags),
    )


def average_precision(retrieved, gold, k: int) -> float:
    """AP at cutoff k for one query; caller guarantees nonempty gold."""
    hits = 0
    total = 0.0
    for rank, doc_id in enumerate(retrieved[:k], start=1):
        if doc_id in gold:
            hits += 1
            total += hits / rank
    return total / len(gold)


def map_at_k(run: RunResult, k: int) -> float:
    if k < 1:
        raise ValueError("k must be >= 1")
    scores = [
        average_precision(retrieved, gold, k)
        for retrieved, gold in (run.pair(q) for q in run.query_ids())
        if gold
    ]
    if not scores:
        raise UndefinedMetricError("MAP needs at least one query with gold documents")
    return sum(scores) / len(scores)


def accuracy(predictions: dict[str, bool], gold: dict[str, bool]) -> float:
    """Fraction of agreeing labels over the ids present in both maps."""
    shared = [pid for pid in predictions if pid in gold]
    if not shared:
        raise UndefinedMetricError("accuracy needs at least one shared id")
    correct = sum(predictions[pid] == gold[pid] for pid in shared)
    return correct / len(shared)
