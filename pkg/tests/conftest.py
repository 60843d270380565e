from pathlib import Path

import pytest

from lexcase.corpus import Document, QueryCase


@pytest.fixture
def docs_small():
    """Four short documents with overlapping vocabulary."""
    return [
        Document(id="d1", text="the court dismissed the appeal"),
        Document(id="d2", text="the appeal was allowed in part"),
        Document(id="d3", text="damages were awarded to the plaintiff"),
        Document(id="d4", text="the plaintiff appealed the damages award"),
    ]


@pytest.fixture
def query_tree(tmp_path):
    """Write a two-query directory tree and return its root."""
    root = tmp_path / "queries"
    queries = [
        QueryCase(
            id="q01",
            base=Document(id="q01", text="breach of contract damages"),
            candidates=(
                Document(id="c1", text="damages for breach of contract"),
                Document(id="c2", text="adverse possession of land"),
                Document(id="c3", text="contract formation and offer"),
            ),
            gold=frozenset({"c1"}),
        ),
        QueryCase(
            id="q02",
            base=Document(id="q02", text="negligence duty of care"),
            candidates=(
                Document(id="c1", text="duty of care in negligence"),
                Document(id="c2", text="taxation of estates"),
            ),
            gold=frozenset({"c1"}),
        ),
    ]
    from lexcase.corpus import save_case_queries

    save_case_queries(queries, root)
    return root


@pytest.fixture
def data_files() -> Path:
    return Path(__file__).parent / "data"
