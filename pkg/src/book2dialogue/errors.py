"""Exception hierarchy shared across the package."""


class Book2DialogueError(Exception):
    """Base class for all package errors."""


class SchemaError(Book2DialogueError):
    """A corpus document is missing or mistyping a required field.

    ``path`` names the offending location, e.g. ``chapters[0].sections[0].title``.
    """

    def __init__(self, path: str, message: str = ""):
        self.path = path
        super().__init__(message or f"invalid or missing field at {path}")


class EmptyBook(Book2DialogueError):
    """A parsed book contains no chapters."""


class EmptySection(Book2DialogueError):
    """A section with empty content was handed to synthesis."""


class EmptyUtterance(Book2DialogueError):
    """A question or answer was empty after whitespace trim."""


class NoPairsFound(Book2DialogueError):
    """A transcript contained no parseable (student, teacher) pair."""


class InvalidTurnCap(Book2DialogueError):
    """max_turns must be an even integer >= 2."""


class DegenerateTurn(Book2DialogueError):
    """Synthesis produced zero complete pairs."""


class EmptyTokenList(Book2DialogueError):
    """BF1 requires non-empty candidate and reference token lists."""


class LengthMismatch(Book2DialogueError):
    """Paired inputs must have equal lengths."""


class ConstantInput(Book2DialogueError):
    """Correlation is undefined for a constant vector."""


class EmptyDataset(Book2DialogueError):
    """Statistics require at least one QA pair."""


class NoBigrams(Book2DialogueError):
    """Bigram entropy requires at least one within-utterance bigram."""


class JoinError(Book2DialogueError):
    """Annotation rows failed to join against metric reports."""

    def __init__(self, unmatched, message: str = ""):
        self.unmatched = list(unmatched)
        super().__init__(
            message or f"{len(self.unmatched)} annotation rows failed to join: "
            f"{self.unmatched[:5]}"
        )


class ConfigError(Book2DialogueError):
    """Invalid run configuration (bad flag combination, unwritable path, ...)."""


class ProviderError(Book2DialogueError):
    """A model-provider call failed.

    ``kind`` is one of ``rate_limited``, ``server_error``, ``bad_request``,
    ``timeout``, ``malformed_response``.
    """

    RETRYABLE_KINDS = frozenset({"rate_limited", "server_error", "timeout"})

    def __init__(self, kind: str, message: str = ""):
        if kind not in {"rate_limited", "server_error", "bad_request",
                        "timeout", "malformed_response"}:
            raise ValueError(f"unknown provider error kind: {kind}")
        self.kind = kind
        self.retryable = kind in self.RETRYABLE_KINDS
        super().__init__(message or f"provider error: {kind}")
