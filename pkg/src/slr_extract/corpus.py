"""Article ingestion and sliding-window token chunking.

Articles are split into fixed-size token windows that overlap by a fixed
number of tokens. Window starts sit at multiples of ``chunk_size - overlap``
and emission stops at the first window whose end reaches the last token, so
the final window may be short. Chunk text is always cut from the original
article by character offsets; nothing is detokenized.
"""

from __future__ import annotations

import json
import math
import re
from dataclasses import dataclass
from pathlib import Path
from typing import NamedTuple, Protocol, Sequence

from .errors import ConfigError, IngestError

@dataclass(frozen=True, slots=True)
class Document:
    doc_id: str
    text: str

    def __post_init__(self) -> None:
        if not isinstance(self.doc_id, str) or not self.doc_id:
            raise IngestError(f"document id must be a non-empty string, got {self.doc_id!r}")
        if not isinstance(self.text, str) or not self.text.strip():
            raise IngestError(f"document {self.doc_id!r} has no text")


class Token(NamedTuple):
    token_id: int
    char_start: int
    char_end: int


@dataclass(frozen=True, slots=True)
class ChunkingParams:
    chunk_size: int = 1000
    overlap: int = 500

    def __post_init__(self) -> None:
        if self.chunk_size < 1:
            raise ConfigError(f"chunk_size must be >= 1, got {self.chunk_size}")
        if not 0 <= self.overlap < self.chunk_size:
            raise ConfigError(
                f"overlap must satisfy 0 <= overlap < chunk_size, got {self.overlap}"
            )

    @property
    def stride(self) -> int:
        return self.chunk_size - self.overlap

    def expected_count(self, n_tokens: int) -> int:
        """Number of windows needed to cover ``n_tokens`` tokens."""
        if n_tokens <= self.chunk_size:
            return 1
        return math.ceil((n_tokens - self.chunk_size) / self.stride) + 1


@dataclass(frozen=True, slots=True)
class Chunk:
    doc_id: str
    chunk_index: int
    token_start: int
    token_end: int
    char_start: int
    char_end: int
    text: str

    @property
    def n_tokens(self) -> int:
        return self.token_end - self.token_start


class Tokenizer(Protocol):
    """Anything that maps text to tokens carrying character offsets."""

    name: str

    def tokenize(self, text: str) -> list[Token]: ...


class WhitespaceTokenizer:
    """Maximal runs of non-whitespace characters; ids are token positions."""

    name = "whitespace"
    # Regex match spans are ordered and in range by construction.
    trusted_offsets = True
    _pattern = re.compile(r"\S+")

    def tokenize(self, text: str) -> list[Token]:
        return [Token(i, m.start(), m.end()) for i, m in enumerate(self._pattern.finditer(text))]


class HFTokenizer:
    """Adapter over a Hugging Face *fast* tokenizer (needs offset mappings)."""

    def __init__(self, name_or_path: str, tokenizer=None):
        if tokenizer is None:
            from transformers import AutoTokenizer

            tokenizer = AutoTokenizer.from_pretrained(name_or_path, use_fast=True)
        if not getattr(tokenizer, "is_fast", False):
            raise IngestError(f"tokenizer {name_or_path!r} does not provide offset mappings")
        self.name = name_or_path
        self._tok = tokenizer

    def tokenize(self, text: str) -> list[Token]:
        enc = self._tok(
            text,
            add_special_tokens=False,
            return_offsets_mapping=True,
            return_attention_mask=False,
            truncation=False,
            verbose=False,
        )
        return [
            Token(int(tid), int(s), int(e))
            for tid, (s, e) in zip(enc["input_ids"], enc["offset_mapping"])
            if e > s
        ]


def _check_tokens(tokens: Sequence[Token], n_chars: int) -> None:
    prev_end = 0
    for i, (_, start, end) in enumerate(tokens):
        if not 0 <= start < end <= n_chars:
            raise IngestError(f"token {i} has invalid span ({start}, {end})")
        if start < prev_end:
            raise IngestError(f"token {i} overlaps or precedes its predecessor")
        prev_end = end


def tokenize(text: str, tokenizer: Tokenizer | None = None) -> list[Token]:
    """Tokenize ``text`` and validate the returned offsets.

    Any failure inside the tokenizer, or offsets that are out of range,
    unordered or overlapping, is reported as :class:`IngestError`.
    """
    tokenizer = tokenizer or WhitespaceTokenizer()
    try:
        tokens = list(tokenizer.tokenize(text))
    except IngestError:
        raise
    except Exception as exc:
        raise IngestError(f"tokenizer {getattr(tokenizer, 'name', tokenizer)!r} failed: {exc}") from exc
    if not getattr(tokenizer, "trusted_offsets", False):
        _check_tokens(tokens, len(text))
    return tokens


def window_spans(n_tokens: int, params: ChunkingParams) -> list[tuple[int, int]]:
    """Token spans ``[start, end)`` of every window over ``n_tokens`` tokens."""
    spans = []
    start = 0
    while True:
        end = min(start + params.chunk_size, n_tokens)
        spans.append((start, end))
        if end >= n_tokens:
            return spans
        start += params.stride


def chunk_document(
    doc: Document,
    params: ChunkingParams | None = None,
    tokenizer: Tokenizer | None = None,
) -> list[Chunk]:
    params = params or ChunkingParams()
    tokens = tokenize(doc.text, tokenizer)
    if not tokens:
        raise IngestError(f"document {doc.doc_id!r} has no tokens")
    chunks = []
    for index, (start, end) in enumerate(window_spans(len(tokens), params)):
        c0 = tokens[start].char_start
        c1 = tokens[end - 1].char_end
        chunks.append(Chunk(doc.doc_id, index, start, end, c0, c1, doc.text[c0:c1]))
    return chunks


def _read_text(path: Path) -> str:
    try:
        return path.read_text(encoding="utf-8")
    except (OSError, UnicodeDecodeError) as exc:
        raise IngestError(f"cannot read {path}: {exc}") from exc


def _load_jsonl(path: Path) -> list[Document]:
    docs = []
    for lineno, line in enumerate(_read_text(path).splitlines(), start=1):
        if not line.strip():
            continue
        try:
            row = json.loads(line)
            doc_id, text = row["id"], row["text"]
        except (json.JSONDecodeError, KeyError, TypeError) as exc:
            raise IngestError(f"{path}:{lineno}: expected an object with 'id' and 'text'") from exc
        docs.append(Document(str(doc_id), text))
    return docs


def load_corpus(source: str | Path) -> list[Document]:
    """Load a directory of ``.txt`` files or a JSON-lines file.

    For directories the document id is the file stem. Documents come back
    sorted by id; duplicate ids and empty corpora are rejected.
    """
    path = Path(source)
    if not path.exists():
        raise IngestError(f"corpus path {path} does not exist")
    if path.is_dir():
        docs = [Document(p.stem, _read_text(p)) for p in sorted(path.glob("*.txt"))]
    else:
        docs = _load_jsonl(path)
    if not docs:
        raise IngestError(f"empty corpus at {path}")
    seen: set[str] = set()
    for doc in docs:
        if doc.doc_id in seen:
            raise IngestError(f"duplicate document id {doc.doc_id!r} in {path}")
        seen.add(doc.doc_id)
    return sorted(docs, key=lambda d: d.doc_id)
