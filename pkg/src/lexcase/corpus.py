"""Corpus ingestion and persistence.

Three on-disk layouts are supported:

* case-law queries: one directory per query holding ``base.txt``, a
  ``candidates/`` directory of plain-text files, and an optional
  ``gold.json`` (JSON array of relevant candidate ids);
* statute articles: JSON-lines with ``id`` and ``text`` string fields;
* entailment pairs: XML with ``<pair id="..." label="Y|N">`` elements
  containing ``<t1>`` and ``<t2>`` children.

All loads are deterministic (sorted by id where the filesystem supplies
the order) and strict UTF-8; undecodable bytes abort the load. Loaded
objects are immutable and safe to share between threads.
"""

from __future__ import annotations

import json
import xml.etree.ElementTree as ET
from dataclasses import dataclass, replace
from pathlib import Path
from xml.sax.saxutils import escape

from .errors import (
    CorpusParseError,
    DuplicateIdError,
    GoldMismatchError,
    InvalidLabelError,
    MalformedQueryError,
)


@dataclass(frozen=True)
class Document:
    """A unit of text (case, paragraph, or article) with an identifier.

    ``tokens`` is empty until preprocessing has run; preprocessing returns
    a new Document rather than mutating this one.
    """

    id: str
    text: str
    tokens: tuple[str, ...] = ()

    def __post_init__(self):
        if not self.id:
            raise ValueError("document id must be nonempty")

    def with_tokens(self, tokens) -> "Document":
        return replace(self, tokens=tuple(tokens))


@dataclass(frozen=True)
class QueryCase:
    """A base case plus its candidate pool and optional gold labels."""

    id: str
    base: Document
    candidates: tuple[Document, ...]
    gold: frozenset[str] | None = None

    def __post_init__(self):
        ids = [c.id for c in self.candidates]
        if len(ids) != len(set(ids)):
            dupes = sorted({i for i in ids if ids.count(i) > 1})
            raise DuplicateIdError(
                f"query {self.id!r}: duplicate candidate ids {dupes}"
            )
        if self.gold is not None:
            unknown = self.gold - set(ids)
            if unknown:
                raise GoldMismatchError(
                    f"query {self.id!r}: gold ids {sorted(unknown)} not among candidates"
                )

    @property
    def candidate_ids(self) -> tuple[str, ...]:
        return tuple(c.id for c in self.candidates)


@dataclass(frozen=True)
class EntailPair:
    """A (t1, t2) text pair with an optional Yes/No label."""

    id: str
    t1: Document
    t2: Document
    label: bool | None = None


def _read_text(path: Path) -> str:
    # strict UTF-8: a lossy load would silently change downstream scores
    return path.read_text(encoding="utf-8", errors="strict")


def load_case_queries(root_path) -> list[QueryCase]:
    """Load every query directory under ``root_path``, sorted by query id.

    Raises MalformedQueryError when ``base.txt`` is missing,
    DuplicateIdError on repeated candidate ids and GoldMismatchError when
    ``gold.json`` names an unknown candidate.
    """
    root = Path(root_path)
    if not root.is_dir():
        raise MalformedQueryError(f"query root {root} is not a directory")
    queries = []
    for qdir in sorted(p for p in root.iterdir() if p.is_dir()):
        base_path = qdir / "base.txt"
        if not base_path.is_file():
            raise MalformedQueryError(f"query directory {qdir} has no base.txt")
        base = Document(id=qdir.name, text=_read_text(base_path))
        cand_dir = qdir / "candidates"
        candidates = []
        if cand_dir.is_dir():
            for cpath in sorted(cand_dir.glob("*.txt")):
                candidates.append(Document(id=cpath.stem, text=_read_text(cpath)))
        gold = None
        gold_path = qdir / "gold.json"
        if gold_path.is_file():
            try:
                raw = json.loads(_read_text(gold_path))
            except json.JSONDecodeError as exc:
                raise CorpusParseError(f"{gold_path}: {exc}") from exc
            if not isinstance(raw, list) or not all(isinstance(g, str) for g in raw):
                raise CorpusParseError(
                    f"{gold_path}: expected a JSON array of candidate-id strings"
                )
            gold = frozenset(raw)
        queries.append(
            QueryCase(id=qdir.name, base=base, candidates=tuple(candidates), gold=gold)
        )
    return queries


def load_gold(root_path) -> dict[str, frozenset[str]]:
    """Gold sets from every ``<root>/<query>/gold.json``; evaluation
    needs no candidate texts, so directories without gold are skipped."""
    root = Path(root_path)
    if not root.is_dir():
        raise MalformedQueryError(f"query root {root} is not a directory")
    gold: dict[str, frozenset[str]] = {}
    for qdir in sorted(p for p in root.iterdir() if p.is_dir()):
        gold_path = qdir / "gold.json"
        if not gold_path.is_file():
            continue
        try:
            raw = json.loads(_read_text(gold_path))
        except json.JSONDecodeError as exc:
            raise CorpusParseError(f"{gold_path}: {exc}") from exc
        if not isinstance(raw, list) or not all(isinstance(g, str) for g in raw):
            raise CorpusParseError(
                f"{gold_path}: expected a JSON array of candidate-id strings"
            )
        gold[qdir.name] = frozenset(raw)
    return gold


def load_pool_queries(root_path, pool) -> list[QueryCase]:
    """Load bare queries that all share one candidate pool.

    Statute-retrieval queries have no per-query candidate directory; every
    query competes over the same article collection, and ``gold.json``
    names article ids. Gold membership is checked against the pool.
    """
    root = Path(root_path)
    if not root.is_dir():
        raise MalformedQueryError(f"query root {root} is not a directory")
    pool = tuple(pool)
    queries = []
    for qdir in sorted(p for p in root.iterdir() if p.is_dir()):
        base_path = qdir / "base.txt"
        if not base_path.is_file():
            raise MalformedQueryError(f"query directory {qdir} has no base.txt")
        base = Document(id=qdir.name, text=_read_text(base_path))
        gold = None
        gold_path = qdir / "gold.json"
        if gold_path.is_file():
            try:
                raw = json.loads(_read_text(gold_path))
            except json.JSONDecodeError as exc:
                raise CorpusParseError(f"{gold_path}: {exc}") from exc
            if not isinstance(raw, list) or not all(isinstance(g, str) for g in raw):
                raise CorpusParseError(
                    f"{gold_path}: expected a JSON array of article-id strings"
                )
            gold = frozenset(raw)
        queries.append(
            QueryCase(id=qdir.name, base=base, candidates=pool, gold=gold)
        )
    return queries


def save_case_queries(queries, root_path) -> None:
    """Write queries back in the directory-per-query layout."""
    root = Path(root_path)
    root.mkdir(parents=True, exist_ok=True)
    for q in queries:
        qdir = root / q.id
        (qdir / "candidates").mkdir(parents=True, exist_ok=True)
        (qdir / "base.txt").write_text(q.base.text, encoding="utf-8")
        for cand in q.candidates:
            (qdir / "candidates" / f"{cand.id}.txt").write_text(
                cand.text, encoding="utf-8"
            )
        if q.gold is not None:
            (qdir / "gold.json").write_text(
                json.dumps(sorted(q.gold)) + "\n", encoding="utf-8"
            )


def load_articles(path) -> list[Document]:
    """Load a JSON-lines article collection, preserving file order."""
    path = Path(path)
    docs = []
    seen = set()
    with path.open(encoding="utf-8", errors="strict") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise CorpusParseError(f"{path}:{lineno}: invalid JSON: {exc}") from exc
            if not isinstance(obj, dict) or "id" not in obj or "text" not in obj:
                raise CorpusParseError(
                    f"{path}:{lineno}: expected object with 'id' and 'text' fields"
                )
            if not isinstance(obj["id"], str) or not isinstance(obj["text"], str):
                raise CorpusParseError(f"{path}:{lineno}: 'id' and 'text' must be strings")
            if obj["id"] in seen:
                raise DuplicateIdError(f"{path}:{lineno}: duplicate article id {obj['id']!r}")
            seen.add(obj["id"])
            docs.append(Document(id=obj["id"], text=obj["text"]))
    return docs


def save_articles(docs, path) -> None:
    with Path(path).open("w", encoding="utf-8") as fh:
        for doc in docs:
            fh.write(json.dumps({"id": doc.id, "text": doc.text}, sort_keys=True) + "\n")


def load_pairs(path) -> list[EntailPair]:
    """Load entailment pairs from XML.

    label="Y" maps to True, "N" to False, a missing attribute to None;
    t1/t2 text is stripped of leading and trailing whitespace.
    """
    path = Path(path)
    try:
        tree = ET.parse(path)
    except ET.ParseError as exc:
        raise CorpusParseError(f"{path}: {exc}") from exc
    pairs = []
    seen = set()
    for elem in tree.getroot().iter("pair"):
        pair_id = elem.get("id")
        if pair_id is None:
            raise CorpusParseError(f"{path}: <pair> element without id attribute")
        if pair_id in seen:
            raise DuplicateIdError(f"{path}: duplicate pair id {pair_id!r}")
        seen.add(pair_id)
        t1 = elem.find("t1")
        t2 = elem.find("t2")
        if t1 is None or t2 is None:
            raise CorpusParseError(f"{path}: pair {pair_id!r} is missing t1 or t2")
        raw_label = elem.get("label")
        if raw_label is None:
            label = None
        elif raw_label == "Y":
            label = True
        elif raw_label == "N":
            label = False
        else:
            raise InvalidLabelError(
                f"{path}: pair {pair_id!r} has label {raw_label!r}, expected Y or N"
            )
        pairs.append(
            EntailPair(
                id=pair_id,
                t1=Document(id=f"{pair_id}.t1", text=(t1.text or "").strip()),
                t2=Document(id=f"{pair_id}.t2", text=(t2.text or "").strip()),
                label=label,
            )
        )
    return pairs


def save_pairs(pairs, path) -> None:
    lines = ["<pairs>"]
    for p in pairs:
        attrs = f'id="{escape(p.id, {chr(34): "&quot;"})}"'
        if p.label is not None:
            attrs += f' label="{"Y" if p.label else "N"}"'
        lines.append(f"<pair {attrs}>")
        lines.append(f"<t1>{escape(p.t1.text)}</t1>")
        lines.append(f"<t2>{escape(p.t2.text)}</t2>")
        lines.append("</pair>")
    lines.append("</pairs>")
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")
