"""lexcase: legal-document retrieval and entailment toolkit."""

__version__ = "0.1.0"

from .corpus import Document, EntailPair, QueryCase  # noqa: F401
