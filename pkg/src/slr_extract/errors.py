"""Exception hierarchy shared by all pipeline stages."""

from __future__ import annotations


class ExtractError(Exception):
    """Base class for every error raised by this package."""


class ConfigError(ExtractError, ValueError):
    """Invalid configuration, entry definition, or missing input path."""


class IngestError(ExtractError):
    """A document could not be loaded or tokenized."""


class QueryError(ExtractError):
    """Invalid text handed to an embedding provider."""


class ProviderError(ExtractError):
    """A remote provider failed after retries or sent a malformed payload."""


class RequestError(ProviderError):
    """The provider rejected the request (HTTP 4xx other than 429)."""

    def __init__(self, message: str, status_code: int | None = None):
        super().__init__(message)
        self.status_code = status_code


class ProviderTimeoutError(ProviderError, TimeoutError):
    """The provider did not answer within the configured timeout."""


class DimError(ExtractError):
    """Two vectors of different dimension were compared."""


class DegenerateVectorError(ExtractError):
    """A zero-norm vector has no direction, so cosine similarity is undefined."""


class PromptError(ExtractError):
    """A prompt could not be built from the given inputs."""


class ParseError(ExtractError):
    """An LLM completion did not contain a valid answer.

    ``code`` is one of ``NoJsonArray``, ``UnknownOptionId`` or ``EmptyAnswer``;
    ``value`` carries the offending element for ``UnknownOptionId``.
    """

    NO_JSON_ARRAY = "NoJsonArray"
    UNKNOWN_OPTION_ID = "UnknownOptionId"
    EMPTY_ANSWER = "EmptyAnswer"

    def __init__(self, code: str, message: str = "", value: object = None):
        super().__init__(message or code)
        self.code = code
        self.value = value


class EvalError(ExtractError):
    """Annotation sets cannot be compared."""
