"""Ranked score lists, multiplicative score fusion and candidate selection.

Selection supports three modes:

* ``TOP_K_RELATIVE``: return up to ``max_k`` candidates whose score is
  strictly greater than ``rel_frac`` times the mean of the two best
  scores (with a single candidate, the mean degenerates to its own
  score);
* ``ARGMAX``: the single best candidate;
* ``TOP_N``: the first n entries of the ranking.

Fusion multiplies two score lists entry-wise. Because one side may carry
negative scores (embedding cosines) while the other cannot, a list
containing any negative score is min-max shifted to [0, 1] before the
product is taken; lists that are already nonnegative are used raw.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

from .errors import EmptySelectionError, FusionMismatchError


@dataclass(frozen=True)
class ScoredList:
    """Candidates for one query, descending score, ascending id on ties."""

    query_id: str
    entries: tuple[tuple[str, float], ...]

    def __post_init__(self):
        ids = [doc_id for doc_id, _ in self.entries]
        if len(ids) != len(set(ids)):
            raise ValueError(f"scored list for {self.query_id!r} repeats a doc id")
        for (id_a, s_a), (id_b, s_b) in zip(self.entries, self.entries[1:]):
            if s_a < s_b or (s_a == s_b and id_a >= id_b):
                raise ValueError(
                    f"scored list for {self.query_id!r} is not in ranked order"
                )

    @classmethod
    def ranked(cls, query_id: str, scores: dict[str, float]) -> "ScoredList":
        ordered = sorted(scores.items(), key=lambda kv: (-kv[1], kv[0]))
        return cls(query_id=query_id, entries=tuple(ordered))

    @property
    def doc_ids(self) -> tuple[str, ...]:
        return tuple(doc_id for doc_id, _ in self.entries)

    def scores(self) -> dict[str, float]:
        return dict(self.entries)


class SelectionMode(Enum):
    TOP_K_RELATIVE = "top_k_relative"
    ARGMAX = "argmax"
    TOP_N = "top_n"


@dataclass(frozen=True)
class SelectionRule:
    mode: SelectionMode
    max_k: int = 10
    rel_frac: float = 0.9
    top_n: int = 100

    def __post_init__(self):
        if self.max_k < 1:
            raise ValueError("max_k must be >= 1")
        if not 0.0 < self.rel_frac <= 1.0:
            raise ValueError("rel_frac must lie in (0, 1]")
        if self.top_n < 1:
            raise ValueError("top_n must be >= 1")


def _shift_nonnegative(entries) -> list[tuple[str, float]]:
    scores = [s for _, s in entries]
    if not scores or min(scores) >= 0.0:
        return list(entries)
    lo, hi = min(scores), max(scores)
    if hi == lo:
        # a constant list carries no ranking information; map it to 1 so
        # the other factor's ordering survives the product
        return [(doc_id, 1.0) for doc_id, _ in entries]
    return [(doc_id, (s - lo) / (hi - lo)) for doc_id, s in entries]


def fuse_multiply(a: ScoredList, b: ScoredList) -> ScoredList:
    """Entry-wise product of two rankings over the same candidates."""
    if set(a.doc_ids) != set(b.doc_ids):
        raise FusionMismatchError(
            f"cannot fuse rankings over different candidate sets for "
            f"query {a.query_id!r}"
        )
    left = dict(_shift_nonnegative(a.entries))
    right = dict(_shift_nonnegative(b.entries))
    fused = {doc_id: left[doc_id] * right[doc_id] for doc_id in left}
    return ScoredList.ranked(a.query_id, fused)


def select(ranked: ScoredList, rule: SelectionRule) -> list[str]:
    """Apply a selection rule to a ranked list; returns doc ids in order."""
    entries = ranked.entries
    if rule.mode is SelectionMode.ARGMAX:
        if not entries:
            raise EmptySelectionError(
                f"query {ranked.query_id!r}: cannot take the best of an empty list"
            )
        return [entries[0][0]]
    if rule.mode is SelectionMode.TOP_N:
        return [doc_id for doc_id, _ in entries[: rule.top_n]]
    if not entries:
        return []
    if len(entries) >= 2:
        threshold = rule.rel_frac * (entries[0][1] + entries[1][1]) / 2.0
    else:
        threshold = rule.rel_frac * entries[0][1]
    kept = [doc_id for doc_id, s in entries if s > threshold]
    return kept[: rule.max_k]
