"""Embedding providers, cosine ranking and the per-document chunk index."""

from __future__ import annotations

import hashlib
import json
import logging
import math
import os
import tempfile
import threading
from collections import defaultdict
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from functools import lru_cache
from pathlib import Path
from typing import Iterable, Sequence

import httpx
import numpy as np

from .corpus import Chunk, ChunkingParams, Document, Tokenizer, WhitespaceTokenizer, chunk_document, tokenize
from .errors import DegenerateVectorError, DimError, ProviderError, QueryError
from .transport import RetryPolicy, bearer_headers, post_json

log = logging.getLogger(__name__)

FNV64_OFFSET = 0xCBF29CE484222325
FNV64_PRIME = 0x100000001B3
_MASK64 = 0xFFFFFFFFFFFFFFFF


@lru_cache(maxsize=65536)
def fnv1a_64(token: str) -> int:
    h = FNV64_OFFSET
    for byte in token.encode("utf-8"):
        h ^= byte
        h = (h * FNV64_PRIME) & _MASK64
    return h


@dataclass(frozen=True)
class EmbeddingProviderSpec:
    name: str
    dim: int
    max_input_tokens: int = 512
    endpoint: str | None = None
    model: str | None = None

    def __post_init__(self) -> None:
        if self.dim < 1 or self.max_input_tokens < 1:
            raise ValueError("dim and max_input_tokens must be positive")


@dataclass(frozen=True)
class ScoredChunk:
    chunk: Chunk
    score: float


class EmbeddingProvider:
    """Base class: subclasses implement :meth:`encode` on pre-truncated text."""

    spec: EmbeddingProviderSpec
    tokenizer: Tokenizer

    def encode(self, texts: Sequence[str]) -> np.ndarray:
        raise NotImplementedError

    def truncate(self, text: str) -> str:
        """Verbatim prefix of ``text`` holding at most ``max_input_tokens`` tokens."""
        tokens = tokenize(text, self.tokenizer)
        if len(tokens) <= self.spec.max_input_tokens:
            return text
        return text[: tokens[self.spec.max_input_tokens - 1].char_end]


class HashEmbedder(EmbeddingProvider):
    """Deterministic bag-of-tokens embedder for offline use.

    Lowercased whitespace tokens are hashed with 64-bit FNV-1a into ``dim``
    buckets; the count vector is L2-normalised.
    """

    def __init__(self, dim: int = 256, max_input_tokens: int = 512, name: str = "hash"):
        self.spec = EmbeddingProviderSpec(name=name, dim=dim, max_input_tokens=max_input_tokens)
        self.tokenizer = WhitespaceTokenizer()

    def encode(self, texts: Sequence[str]) -> np.ndarray:
        out = np.zeros((len(texts), self.spec.dim))
        for row, text in enumerate(texts):
            for tok in text.split()[: self.spec.max_input_tokens]:
                out[row, fnv1a_64(tok.lower()) % self.spec.dim] += 1.0
            norm = np.linalg.norm(out[row])
            if norm > 0:
                out[row] /= norm
        return out


class HTTPEmbedder(EmbeddingProvider):
    """Client for an OpenAI-style ``/embeddings`` endpoint.

    Inputs are truncated client-side with ``tokenizer`` (whitespace by
    default) so behaviour does not depend on the server's own truncation.
    """

    def __init__(
        self,
        spec: EmbeddingProviderSpec,
        *,
        api_key_env: str | None = None,
        tokenizer: Tokenizer | None = None,
        client: httpx.Client | None = None,
        retry: RetryPolicy | None = None,
        batch_size: int = 32,
        max_in_flight: int = 4,
        timeout: float = 60.0,
    ):
        if not spec.endpoint:
            raise ValueError(f"embedding provider {spec.name!r} has no endpoint")
        self.spec = spec
        self.tokenizer = tokenizer or WhitespaceTokenizer()
        self._headers = bearer_headers(api_key_env)
        self._client = client or httpx.Client()
        self._retry = retry or RetryPolicy()
        self._batch_size = batch_size
        self._max_in_flight = max_in_flight
        self._timeout = timeout

    def _encode_batch(self, texts: Sequence[str]) -> np.ndarray:
        url = self.spec.endpoint.rstrip("/") + "/embeddings"
        body = post_json(
            self._client,
            url,
            {"model": self.spec.model or self.spec.name, "input": list(texts)},
            headers=self._headers,
            timeout=self._timeout,
            retry=self._retry,
        )
        try:
            data = sorted(body["data"], key=lambda d: d["index"])
            vectors = np.array([d["embedding"] for d in data], dtype=float)
        except (KeyError, TypeError, ValueError) as exc:
            raise ProviderError(f"malformed embeddings response from {url}") from exc
        if vectors.shape != (len(texts), self.spec.dim):
            raise ProviderError(
                f"expected {len(texts)} vectors of dim {self.spec.dim}, got shape {vectors.shape}"
            )
        return vectors

    def encode(self, texts: Sequence[str]) -> np.ndarray:
        batches = [texts[i : i + self._batch_size] for i in range(0, len(texts), self._batch_size)]
        if len(batches) <= 1:
            parts = [self._encode_batch(b) for b in batches]
        else:
            with ThreadPoolExecutor(max_workers=self._max_in_flight) as pool:
                parts = list(pool.map(self._encode_batch, batches))
        return np.vstack(parts) if parts else np.zeros((0, self.spec.dim))


class SentenceTransformerEmbedder(EmbeddingProvider):
    """Local encoder through ``sentence-transformers``.

    The default model is the PubMed-tuned BERT used in the reference setup.
    """

    def __init__(self, model: str = "NeuML/pubmedbert-base-embeddings", max_input_tokens: int = 512):
        from sentence_transformers import SentenceTransformer

        from .corpus import HFTokenizer

        self._model = SentenceTransformer(model)
        self._model.max_seq_length = max_input_tokens
        dim = int(self._model.get_sentence_embedding_dimension())
        self.tokenizer = HFTokenizer(model, self._model.tokenizer)
        # [CLS] and [SEP] occupy two of the encoder's positions.
        self.spec = EmbeddingProviderSpec(name=model, dim=dim, max_input_tokens=max_input_tokens - 2)

    def encode(self, texts: Sequence[str]) -> np.ndarray:
        return np.asarray(self._model.encode(list(texts), convert_to_numpy=True), dtype=float)


def embed_texts(provider: EmbeddingProvider, texts: Sequence[str]) -> np.ndarray:
    """Embed ``texts`` in order, one row per input.

    Every input is cut to its first ``max_input_tokens`` tokens before it
    reaches the provider.
    """
    for i, text in enumerate(texts):
        if not isinstance(text, str) or not text.strip():
            raise QueryError(f"text {i} is empty")
    truncated = [provider.truncate(t) for t in texts]
    vectors = np.asarray(provider.encode(truncated), dtype=float)
    if vectors.shape != (len(texts), provider.spec.dim):
        raise ProviderError(
            f"provider {provider.spec.name!r} returned shape {vectors.shape}, "
            f"expected {(len(texts), provider.spec.dim)}"
        )
    if not np.all(np.isfinite(vectors)):
        raise ProviderError(f"provider {provider.spec.name!r} returned non-finite values")
    return vectors


def cosine_similarity(a, b) -> float:
    """Cosine of the angle between ``a`` and ``b``, clamped to [-1, 1]."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != b.shape or a.ndim != 1:
        raise DimError(f"cannot compare vectors of shape {a.shape} and {b.shape}")
    na = math.sqrt(float(np.dot(a, a)))
    nb = math.sqrt(float(np.dot(b, b)))
    if na == 0.0 or nb == 0.0:
        raise DegenerateVectorError("zero-norm vector")
    return min(1.0, max(-1.0, float(np.dot(a, b)) / (na * nb)))


def rank_chunks(query, chunks: Iterable[tuple[Chunk, np.ndarray]], k: int = 3) -> list[ScoredChunk]:
    """Top-``k`` chunks by cosine similarity; ties go to the lower chunk index."""
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    scored = []
    for chunk, vector in chunks:
        try:
            score = cosine_similarity(query, vector)
        except DimError as exc:
            raise DimError(f"chunk {chunk.doc_id}#{chunk.chunk_index}: {exc}") from exc
        except DegenerateVectorError as exc:
            raise DegenerateVectorError(f"chunk {chunk.doc_id}#{chunk.chunk_index}: {exc}") from exc
        scored.append(ScoredChunk(chunk, score))
    scored.sort(key=lambda s: (-s.score, s.chunk.chunk_index))
    return scored[:k]


def query_text(question: str, labels: Sequence[str]) -> str:
    """Retrieval query for a data entry: the question, then one label per line."""
    return "\n".join([question, *labels])


def content_hash(text: str) -> str:
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


def _safe_name(name: str) -> str:
    return "".join(c if c.isalnum() or c in "-_." else "_" for c in name)


class EmbeddingCache:
    """Chunk vectors persisted as one JSON-lines file per document.

    Layout: ``{root}/embeddings/{provider}/{doc_id}.jsonl`` with lines
    ``{"chunk_index", "content_hash", "vector"}``. Files are replaced
    atomically so readers never see a partial write.
    """

    def __init__(self, root: str | Path):
        self.root = Path(root)
        self._locks: defaultdict[str, threading.Lock] = defaultdict(threading.Lock)
        self._guard = threading.Lock()
        self.hits = 0
        self.misses = 0

    def count(self, hits: int = 0, misses: int = 0) -> None:
        with self._guard:
            self.hits += hits
            self.misses += misses

    def path(self, provider: str, doc_id: str) -> Path:
        return self.root / "embeddings" / _safe_name(provider) / f"{_safe_name(doc_id)}.jsonl"

    def _lock(self, key: str) -> threading.Lock:
        with self._guard:
            return self._locks[key]

    def load(self, provider: str, doc_id: str) -> dict[tuple[int, str], np.ndarray]:
        path = self.path(provider, doc_id)
        if not path.exists():
            return {}
        out = {}
        for line in path.read_text(encoding="utf-8").splitlines():
            try:
                row = json.loads(line)
                out[(row["chunk_index"], row["content_hash"])] = np.asarray(row["vector"], dtype=float)
            except (ValueError, KeyError, TypeError):
                log.warning("skipping corrupt line in %s", path)
        return out

    def store(self, provider: str, doc_id: str, rows: dict[tuple[int, str], np.ndarray]) -> None:
        path = self.path(provider, doc_id)
        with self._lock(str(path)):
            merged = self.load(provider, doc_id)
            merged.update(rows)
            path.parent.mkdir(parents=True, exist_ok=True)
            fd, tmp = tempfile.mkstemp(dir=path.parent, suffix=".tmp")
            with os.fdopen(fd, "w", encoding="utf-8") as fh:
                for (index, digest), vec in sorted(merged.items()):
                    fh.write(json.dumps({"chunk_index": index, "content_hash": digest, "vector": vec.tolist()}) + "\n")
            os.replace(tmp, path)


class Retriever:
    """Chunks and embeds each document once, then ranks chunks per query."""

    def __init__(
        self,
        provider: EmbeddingProvider,
        params: ChunkingParams | None = None,
        tokenizer: Tokenizer | None = None,
        k: int = 3,
        cache: EmbeddingCache | None = None,
    ):
        if k < 1:
            raise ValueError(f"k must be >= 1, got {k}")
        self.provider = provider
        self.params = params or ChunkingParams()
        self.tokenizer = tokenizer or provider.tokenizer
        self.k = k
        self.cache = cache
        self._index: dict[str, list[tuple[Chunk, np.ndarray]]] = {}
        self._queries: dict[str, np.ndarray] = {}
        self._doc_locks: defaultdict[str, threading.Lock] = defaultdict(threading.Lock)
        self._guard = threading.Lock()

    def index(self, doc: Document) -> list[tuple[Chunk, np.ndarray]]:
        with self._guard:
            lock = self._doc_locks[doc.doc_id]
        with lock:
            if doc.doc_id not in self._index:
                self._index[doc.doc_id] = self._embed_chunks(doc)
            return self._index[doc.doc_id]

    def _embed_chunks(self, doc: Document) -> list[tuple[Chunk, np.ndarray]]:
        chunks = chunk_document(doc, self.params, self.tokenizer)
        keys = [(c.chunk_index, content_hash(c.text)) for c in chunks]
        name = self.provider.spec.name
        stored = self.cache.load(name, doc.doc_id) if self.cache else {}
        missing = [i for i, key in enumerate(keys) if key not in stored]
        if missing:
            vectors = embed_texts(self.provider, [chunks[i].text for i in missing])
            fresh = {keys[i]: vectors[j] for j, i in enumerate(missing)}
            stored.update(fresh)
            if self.cache:
                self.cache.store(name, doc.doc_id, fresh)
        if self.cache:
            self.cache.count(hits=len(chunks) - len(missing), misses=len(missing))
        return [(c, stored[key]) for c, key in zip(chunks, keys)]

    def embed_query(self, text: str) -> np.ndarray:
        with self._guard:
            cached = self._queries.get(text)
        if cached is None:
            cached = embed_texts(self.provider, [text])[0]
            with self._guard:
                self._queries[text] = cached
        return cached

    def retrieve(self, doc: Document, text: str) -> list[ScoredChunk]:
        return rank_chunks(self.embed_query(text), self.index(doc), self.k)
