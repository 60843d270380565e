"""Exception hierarchy shared across the toolkit.

Everything raised on bad input data derives from :class:`DataError` so the
CLI can map it to a single exit code; programming/usage mistakes raise the
usual built-ins (ValueError, TypeError).
"""


class LexcaseError(Exception):
    """Base class for all toolkit errors."""


class DataError(LexcaseError):
    """Input data violates a documented format or invariant."""


class MalformedQueryError(DataError):
    """A query directory is missing required files."""


class DuplicateIdError(DataError):
    """Two items in one collection share an identifier."""


class GoldMismatchError(DataError):
    """A gold label references an id that is not among the candidates."""


class CorpusParseError(DataError):
    """A corpus file could not be parsed; carries file and position info."""


class InvalidLabelError(DataError):
    """An entailment label is neither Y nor N."""


class EmptyCorpusError(DataError):
    """An index or model was requested over zero documents."""


class MissingDocumentError(DataError):
    """A document id was not found in the index."""


class DegenerateCorpusError(DataError):
    """No vocabulary survives the minimum-count filter."""


class FusionMismatchError(DataError):
    """Two score lists to be fused cover different document sets."""


class EmptySelectionError(DataError):
    """Single-best selection was asked for an empty candidate list."""


class UndefinedMetricError(DataError):
    """A metric has no defined value for the given run (e.g. no gold)."""


class DegenerateLabelsError(DataError):
    """Classifier training data contains only one class."""


class ConfigurationError(LexcaseError):
    """A run is missing a prerequisite artifact or has invalid settings."""
