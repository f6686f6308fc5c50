"""Exception types shared across the package.

Only failure modes that callers need to tell apart get their own class;
everything else raises plain ValueError.
"""


class GroundlexError(ValueError):
    """Base class for package-specific errors."""


class EmbeddingFormatError(GroundlexError):
    """Embedding text file has a malformed header or body line."""


class DimensionMismatchError(GroundlexError):
    """Two arrays or files disagree on an expected dimension."""


class NonFiniteError(GroundlexError):
    """A vector that must be finite contains NaN or infinity."""


class DictionaryFormatError(GroundlexError):
    """Bilingual dictionary file violates the two-column line format."""

    def __init__(self, message: str, line_numbers=None):
        super().__init__(message)
        self.line_numbers = list(line_numbers or [])


class UnknownWordError(GroundlexError):
    """A query word is not in the relevant vocabulary (as opposed to an
    in-vocabulary query that simply has no results)."""


class OverlappingClipsError(GroundlexError):
    """The two training clip collections share clip ids, violating the
    unpaired-data contract."""
