"""Prompting an LLM with retrieved context and validating its answer."""

from .llm import (
    OPENROUTER_ENDPOINT,
    ChatBackend,
    LLMConfig,
    OpenAICompatibleChat,
    RawCompletion,
    ResponseCache,
    RuleBasedMockLLM,
    ScriptedMockLLM,
    cache_key,
    query_llm,
)
from .parse import LENIENT, STRICT, parse_answer
from .pipeline import ExtractionRecord, extract_batch, extract_entry
from .prompt import (
    BASE_SYSTEM_PROMPT,
    ChunkRef,
    DataEntry,
    Option,
    PromptBundle,
    build_prompt,
    load_entries,
    render_answers,
)

__all__ = [
    "BASE_SYSTEM_PROMPT",
    "LENIENT",
    "OPENROUTER_ENDPOINT",
    "STRICT",
    "ChatBackend",
    "ChunkRef",
    "DataEntry",
    "ExtractionRecord",
    "LLMConfig",
    "OpenAICompatibleChat",
    "Option",
    "PromptBundle",
    "RawCompletion",
    "ResponseCache",
    "RuleBasedMockLLM",
    "ScriptedMockLLM",
    "build_prompt",
    "cache_key",
    "extract_batch",
    "extract_entry",
    "load_entries",
    "parse_answer",
    "query_llm",
    "render_answers",
]
