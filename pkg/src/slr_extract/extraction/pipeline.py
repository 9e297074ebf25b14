"""Per-(document, entry, model) extraction and the batch driver."""

from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from datetime import datetime, timezone
from typing import Callable, Iterator, Sequence

from ..corpus import Document
from ..errors import ExtractError, ParseError, ProviderTimeoutError
from ..retrieval import Retriever, query_text
from .llm import ChatBackend, LLMConfig, ResponseCache, query_llm
from .parse import parse_answer
from .prompt import ChunkRef, DataEntry, build_prompt

log = logging.getLogger(__name__)

# Fields that legitimately differ between two runs over the same inputs.
VOLATILE_FIELDS = ("timestamp", "from_cache")


@dataclass
class ExtractionRecord:
    doc_id: str
    entry_id: str
    model_id: str
    answer_ids: list[str] = field(default_factory=list)
    parse_mode: str | None = None
    raw_text: str = ""
    chunk_refs: list[ChunkRef] = field(default_factory=list)
    error: str | None = None
    error_detail: str | None = None
    from_cache: bool = False
    timestamp: str = ""

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> ExtractionRecord:
        data = dict(data)
        data["chunk_refs"] = [ChunkRef(**ref) for ref in data.get("chunk_refs", [])]
        return cls(**data)

    def stable_dict(self) -> dict:
        """The record without run-dependent fields, for equality checks."""
        data = self.to_dict()
        for key in VOLATILE_FIELDS:
            data.pop(key)
        return data


def error_code(exc: BaseException) -> str:
    if isinstance(exc, ParseError):
        return exc.code
    if isinstance(exc, ProviderTimeoutError):
        return "Timeout"
    if isinstance(exc, ExtractError):
        return type(exc).__name__
    return "InternalError"


def extract_entry(
    doc: Document,
    entry: DataEntry,
    retriever: Retriever,
    llm_config: LLMConfig,
    backend: ChatBackend,
    cache: ResponseCache | None = None,
) -> ExtractionRecord:
    """Retrieve, prompt, query and parse for one (document, entry, model).

    Errors from any stage are captured on the returned record; only
    non-``Exception`` signals (e.g. ``KeyboardInterrupt``) escape.
    """
    record = ExtractionRecord(doc.doc_id, entry.entry_id, llm_config.model_id)
    try:
        chunks = retriever.retrieve(doc, query_text(entry.question, entry.labels))
        prompt = build_prompt(entry, chunks)
        record.chunk_refs = list(prompt.chunk_refs)
        completion = query_llm(llm_config, prompt, backend, cache)
        record.raw_text = completion.text
        record.from_cache = completion.from_cache
        answer, mode = parse_answer(completion.text, entry)
        record.answer_ids = list(answer)
        record.parse_mode = mode
    except Exception as exc:
        record.error = error_code(exc)
        record.error_detail = str(exc)
        record.answer_ids = []
        record.parse_mode = None
        log.debug("extraction failed for %s/%s/%s: %s", doc.doc_id, entry.entry_id, llm_config.model_id, exc)
    record.timestamp = datetime.now(timezone.utc).isoformat()
    return record


def extract_batch(
    docs: Sequence[Document],
    entries: Sequence[DataEntry],
    llm_configs: Sequence[LLMConfig],
    retriever: Retriever,
    backend: ChatBackend,
    cache: ResponseCache | None = None,
    parallelism: int = 4,
    on_record: Callable[[ExtractionRecord], None] | None = None,
) -> Iterator[ExtractionRecord]:
    """Yield one record per (doc, entry, model), ordered by doc, entry, model id.

    Work runs on a pool of ``parallelism`` threads; records are yielded in
    that fixed order regardless of completion order.
    """
    items = [
        (doc, entry, cfg)
        for doc in sorted(docs, key=lambda d: d.doc_id)
        for entry in sorted(entries, key=lambda e: e.entry_id)
        for cfg in sorted(llm_configs, key=lambda c: c.model_id)
    ]
    with ThreadPoolExecutor(max_workers=max(1, parallelism)) as pool:
        futures = [
            pool.submit(extract_entry, doc, entry, retriever, cfg, backend, cache)
            for doc, entry, cfg in items
        ]
        try:
            for fut in futures:
                record = fut.result()
                if on_record:
                    on_record(record)
                yield record
        finally:
            for fut in futures:
                fut.cancel()
