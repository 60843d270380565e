"""Deterministic synthetic retrieval corpora.

Real shared-task corpora are not redistributable, so tests and demos run
on generated ones. Each query gets a private block of rare marker tokens
that appears in its base case and in every gold candidate at about the
same density; non-gold candidates draw only from a common background
vocabulary. Rare-term idf then separates gold from non-gold for any
sane lexical scorer, which is what makes end-to-end thresholds stable.

Output layout matches the query-directory corpus format, gold embedded
as ``gold.json``. Everything derives from one seeded generator; equal
seeds give byte-identical trees.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

from .corpus import Document, QueryCase, save_case_queries

_BACKGROUND = (
    "agreement appeal application article barrister breach case cause claim "
    "clause code compensation conduct consider contract council court damage "
    "decision defendant delivery dispute district document duty effect employment "
    "enforcement evidence exchange execution factor filing finding goods hearing "
    "holding injury instance insurance interest issue judgment jurisdiction "
    "landlord lease liability limitation matter measure motion notice obligation "
    "opinion order owner parties payment penalty performance period person "
    "plaintiff pleading possession power procedure proceeding property provision "
    "purchase reason record registration regulation relief remedy rent report "
    "request residence result review right rule ruling section security service "
    "settlement standard statute supply tenant term territory title transaction "
    "transfer trial tribunal trust validity value vendor witness"
).split()

_MARKERS_PER_QUERY = 8
_TOKENS_PER_DOC = 50
_MARKER_REPEATS_BASE = 3  # query-side occurrences amplify marker weight
_MARKER_REPEATS_GOLD = 2


def _render(tokens) -> str:
    """Lay tokens out in short lines; every third line gets a paragraph
    marker so normalization's marker-stripping sees realistic input."""
    lines = []
    for i in range(0, len(tokens), 10):
        chunk = " ".join(tokens[i : i + 10])
        n = i // 10 + 1
        if n % 3 == 0:
            chunk = f"[{n}] " + chunk
        lines.append(chunk)
    return "\n".join(lines) + "\n"


def build_fixture(n_queries: int, n_candidates: int, seed: int) -> list[QueryCase]:
    if n_queries < 1 or n_candidates < 1:
        raise ValueError("need at least one query and one candidate")
    rng = np.random.default_rng(seed)
    queries = []
    for qi in range(n_queries):
        qid = f"q{qi:03d}"
        markers = [f"veris{qi:03d}x{j}" for j in range(_MARKERS_PER_QUERY)]
        n_gold = int(min(n_candidates, rng.integers(2, 7)))
        gold_slots = set(int(i) for i in rng.choice(n_candidates, size=n_gold, replace=False))

        def doc_tokens(marker_repeats: int) -> list[str]:
            fill = _TOKENS_PER_DOC - marker_repeats * _MARKERS_PER_QUERY
            toks = [str(w) for w in rng.choice(_BACKGROUND, size=fill)]
            for m in markers * marker_repeats:
                toks.insert(int(rng.integers(0, len(toks) + 1)), m)
            return toks

        base = Document(id=qid, text=_render(doc_tokens(_MARKER_REPEATS_BASE)))
        candidates = []
        for ci in range(n_candidates):
            cid = f"c{ci:03d}"
            repeats = _MARKER_REPEATS_GOLD if ci in gold_slots else 0
            candidates.append(Document(id=cid, text=_render(doc_tokens(repeats))))
        gold = frozenset(f"c{ci:03d}" for ci in gold_slots)
        queries.append(
            QueryCase(id=qid, base=base, candidates=tuple(candidates), gold=gold)
        )
    return queries


def gen_fixture(n_queries: int, n_candidates: int, seed: int, out) -> Path:
    """Write a synthetic corpus under ``out``; returns the root path."""
    root = Path(out)
    queries = build_fixture(n_queries, n_candidates, seed)
    save_case_queries(queries, root)
    return root
