import json
import math

import numpy as np
import pytest

from lexcase.bm25 import (
    Bm25Params,
    InvertedIndex,
    build_index,
    idf,
    load_index,
    rank,
    save_index,
    score,
    score_tokens,
)
from lexcase.corpus import Document
from lexcase.errors import (
    CorpusParseError,
    DuplicateIdError,
    EmptyCorpusError,
    MissingDocumentError,
)


def _doc(doc_id, tokens):
    return Document(id=doc_id, text=" ".join(tokens), tokens=tuple(tokens))


@pytest.fixture
def tiny_index():
    return build_index(
        [_doc("D1", ["a", "b", "a"]), _doc("D2", ["b", "c"])]
    )


class TestBuildIndex:
    def test_statistics(self, tiny_index):
        assert tiny_index.n_docs == 2
        assert tiny_index.doc_len == {"D1": 3, "D2": 2}
        assert tiny_index.avgdl == 2.5
        assert tiny_index.df == {"a": 1, "b": 2, "c": 1}
        assert tiny_index.postings["b"] == [("D1", 1), ("D2", 1)]

    def test_empty_corpus_raises(self):
        with pytest.raises(EmptyCorpusError):
            build_index([])

    def test_duplicate_id_raises(self):
        with pytest.raises(DuplicateIdError):
            build_index([_doc("D1", ["a"]), _doc("D1", ["b"])])


class TestIdf:
    def test_hand_values(self, tiny_index):
        # df=1 of 2 docs: ln(1 + 1.5/1.5) = ln 2
        assert idf(tiny_index, "a") == pytest.approx(math.log(2.0), abs=1e-12)
        # df=2 of 2 docs: ln(1 + 0.5/2.5)
        assert idf(tiny_index, "b") == pytest.approx(math.log(1.2), abs=1e-12)
        assert idf(tiny_index, "zzz") == pytest.approx(math.log(6.0), abs=1e-12)

    def test_never_negative(self):
        # a term in every document still gets a positive weight
        index = build_index([_doc(f"d{i}", ["t"]) for i in range(50)])
        assert idf(index, "t") > 0


class TestScore:
    def test_known_value(self, tiny_index):
        got = score(tiny_index, Bm25Params(), ["a"], "D1")
        assert got == pytest.approx(0.9023, abs=5e-4)

    def test_repeated_query_terms_add_up(self, tiny_index):
        p = Bm25Params()
        one = score(tiny_index, p, ["a"], "D1")
        two = score(tiny_index, p, ["a", "a"], "D1")
        assert two == pytest.approx(2 * one, rel=1e-12)

    def test_absent_term_scores_zero(self, tiny_index):
        assert score(tiny_index, Bm25Params(), ["zzz"], "D1") == 0.0

    def test_unknown_doc_raises(self, tiny_index):
        with pytest.raises(MissingDocumentError):
            score(tiny_index, Bm25Params(), ["a"], "D9")

    def test_score_tokens_matches_indexed_path(self, tiny_index):
        p = Bm25Params(k1=1.5, b=0.6)
        via_index = score(tiny_index, p, ["a", "b"], "D1")
        via_tokens = score_tokens(tiny_index, p, ["a", "b"], ["a", "b", "a"])
        assert via_tokens == pytest.approx(via_index, rel=1e-12)

    def test_b_zero_ignores_length(self):
        # identical tf, very different lengths: b=0 equalizes them
        index = build_index(
            [_doc("short", ["x"]), _doc("long", ["x"] + ["y"] * 30)]
        )
        p = Bm25Params(k1=1.2, b=0.0)
        s1 = score(index, p, ["x"], "short")
        s2 = score(index, p, ["x"], "long")
        assert s1 == pytest.approx(s2, rel=1e-12)


def _oracle(index, params, query, doc_id):
    """Straight-line Okapi reimplementation for cross-checking."""
    total = 0.0
    dl = index.doc_len[doc_id]
    for term in query:
        tf = dict(index.postings.get(term, ())).get(doc_id, 0)
        if tf == 0:
            continue
        w = math.log(
            1.0 + (index.n_docs - index.df[term] + 0.5) / (index.df[term] + 0.5)
        )
        denom = tf + params.k1 * (1 - params.b + params.b * dl / index.avgdl)
        total += w * tf * (params.k1 + 1) / denom
    return total


def test_random_corpora_match_oracle():
    rng = np.random.default_rng(42)
    vocab = [f"t{i}" for i in range(15)]
    params = Bm25Params()
    for _ in range(40):
        n = int(rng.integers(1, 12))
        docs = [
            _doc(
                f"d{j}",
                [vocab[int(k)] for k in rng.integers(0, len(vocab), rng.integers(1, 20))],
            )
            for j in range(n)
        ]
        index = build_index(docs)
        query = [vocab[int(k)] for k in rng.integers(0, len(vocab), 5)]
        for d in docs:
            got = score(index, params, query, d.id)
            want = _oracle(index, params, query, d.id)
            assert got == pytest.approx(want, rel=1e-12, abs=1e-15)


class TestRank:
    def test_orders_by_score_then_id(self, tiny_index):
        ranked = rank(tiny_index, Bm25Params(), ["b"], ["D1", "D2"], query_id="q")
        assert ranked.query_id == "q"
        # same tf for b everywhere; shorter D2 wins on length normalization
        assert ranked.doc_ids[0] == "D2"

    def test_tie_breaks_on_id(self):
        index = build_index([_doc("db", ["x"]), _doc("da", ["x"])])
        ranked = rank(index, Bm25Params(), ["x"], ["db", "da"])
        assert ranked.doc_ids == ("da", "db")


class TestPersistence:
    def test_roundtrip(self, tiny_index, tmp_path):
        path = tmp_path / "index.json"
        save_index(tiny_index, path)
        loaded = load_index(path)
        assert loaded == tiny_index

    def test_file_is_byte_stable(self, tiny_index, tmp_path):
        a, b = tmp_path / "a.json", tmp_path / "b.json"
        save_index(tiny_index, a)
        save_index(tiny_index, b)
        assert a.read_bytes() == b.read_bytes()

    def test_wrong_format_rejected(self, tmp_path):
        path = tmp_path / "x.json"
        path.write_text(json.dumps({"format": "something-else"}))
        with pytest.raises(CorpusParseError):
            load_index(path)


def test_params_validation():
    with pytest.raises(ValueError):
        Bm25Params(k1=-0.1)
    with pytest.raises(ValueError):
        Bm25Params(b=1.5)


def test_stats_only_index_supports_score_tokens(tiny_index):
    """df/n_docs/avgdl alone are enough to score unseen documents."""
    stats = InvertedIndex(
        postings={},
        doc_len={},
        n_docs=tiny_index.n_docs,
        avgdl=tiny_index.avgdl,
        df=dict(tiny_index.df),
    )
    p = Bm25Params()
    full = score_tokens(tiny_index, p, ["a", "c"], ["a", "c", "c"])
    bare = score_tokens(stats, p, ["a", "c"], ["a", "c", "c"])
    assert bare == pytest.approx(full, rel=1e-12)
