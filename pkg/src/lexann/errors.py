"""Exception types raised by lexann."""


class LexannError(Exception):
    """Base class for all library errors."""


class DuplicateDocumentError(LexannError):
    def __init__(self, doc_id):
        super().__init__(f"document id {doc_id} is already indexed")
        self.doc_id = doc_id


class UnknownDocumentError(LexannError, KeyError):
    def __init__(self, doc_id):
        super().__init__(f"document id {doc_id} is not in the index")
        self.doc_id = doc_id

    def __str__(self):
        return self.args[0]


class FrozenIndexError(LexannError):
    """Raised when a finalized (or loaded) index is mutated."""


class IndexFormatError(LexannError):
    """A persisted index file could not be parsed.

    Attributes:
        offset: byte offset at which parsing failed.
    """

    def __init__(self, message, offset):
        super().__init__(f"{message} (at byte offset {offset})")
        self.offset = offset


class EncodingError(LexannError, ValueError):
    """Invalid input to an encoder or reducer (zero vector, bad config, ...)."""


class EmbeddingFormatError(LexannError, ValueError):
    """An embedding text file violates its format contract.

    Attributes:
        line: 1-based line number of the offending line, or None.
    """

    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class EvaluationError(LexannError, ValueError):
    pass


class ConfigError(LexannError, ValueError):
    pass
