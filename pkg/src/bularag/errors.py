"""Exception and warning types shared across the package."""


class BularagError(Exception):
    """Base class for every error raised by this package."""


# --- ingestion ---

class UnreadableFile(BularagError):
    """A source file could not be opened or decoded."""


class EmptyDocument(BularagError):
    """No extractable text on any page (e.g. a scanned, image-only PDF)."""


# --- embedding / vector index ---

class RemoteUnavailable(BularagError):
    """The remote embedding service failed after all retry attempts."""


class DimensionMismatch(BularagError):
    """Vector dimensions do not agree."""


class ZeroVector(BularagError):
    """An operation that requires a nonzero vector received a zero vector."""


class EmptyInput(BularagError):
    """An operation that requires at least one element received none."""


class CorruptBundle(BularagError):
    """Index bundle file is damaged: bad magic, truncation, or checksum failure."""


class VersionUnsupported(BularagError):
    """Index bundle file declares a format version this build cannot read."""


# --- retrieval ---

class InvalidPattern(BularagError):
    """A configured regex pattern failed to compile."""


# --- answering ---

class ProviderError(BularagError):
    """The answer provider failed: non-retryable status or exhausted retries."""


class EmptyCompletion(BularagError):
    """The answer provider returned no text."""


# --- evaluation ---

class LengthMismatch(BularagError):
    """Paired label lists have different lengths."""


class OutOfRange(BularagError):
    """A value falls outside its documented range."""


class MalformedCsv(BularagError):
    """Results CSV has a wrong header, wrong column count, or unparseable cell."""


class DegenerateMarginalsWarning(UserWarning):
    """Both raters are constant and identical; kappa fixed at 1.0 by convention."""


class ZeroVectorWarning(UserWarning):
    """A consistency comparison involved an unembeddable (empty) answer."""
