"""Command-line entry point and the run orchestration behind it.

Commands::

    slr-extract extract --config run.json [--offline] [--model ID]...
    slr-extract evaluate --results results.jsonl --annotations ann.jsonl --out report/
    slr-extract chunks --config run.json --doc DOC_ID
    slr-extract version

Exit codes: 0 success, 1 configuration error, 2 evaluation error,
3 extraction finished but some records carry errors.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import IO, Sequence

from . import __version__
from .corpus import ChunkingParams, HFTokenizer, Tokenizer, WhitespaceTokenizer, chunk_document, load_corpus
from .errors import ConfigError, EvalError, IngestError
from .evaluation import annotations_from_records, evaluate, load_annotations, write_report
from .extraction import (
    OPENROUTER_ENDPOINT,
    ChatBackend,
    ExtractionRecord,
    LLMConfig,
    OpenAICompatibleChat,
    ResponseCache,
    RuleBasedMockLLM,
    ScriptedMockLLM,
    extract_batch,
    load_entries,
)
from .retrieval import (
    EmbeddingCache,
    EmbeddingProvider,
    EmbeddingProviderSpec,
    HashEmbedder,
    HTTPEmbedder,
    Retriever,
    SentenceTransformerEmbedder,
)

EXIT_OK, EXIT_CONFIG, EXIT_EVAL, EXIT_PARTIAL = 0, 1, 2, 3


@dataclass
class RunConfig:
    corpus_path: Path
    entries_path: Path
    model_ids: list[str]
    output_path: Path
    cache_dir: Path
    embedding: dict = field(default_factory=lambda: {"provider": "hash"})
    tokenizer: str | None = None
    chunking: ChunkingParams = field(default_factory=ChunkingParams)
    k: int = 3
    parallelism: int = 4
    api_key_env: str = "OPENROUTER_API_KEY"
    endpoint: str = OPENROUTER_ENDPOINT
    llm: dict = field(default_factory=dict)
    mock_fixtures: Path | None = None

    def validate(self) -> None:
        if not self.model_ids:
            raise ConfigError("config lists no models")
        if self.k < 1:
            raise ConfigError(f"k must be >= 1, got {self.k}")
        if self.parallelism < 1:
            raise ConfigError(f"parallelism must be >= 1, got {self.parallelism}")
        for label, path in (("corpus", self.corpus_path), ("entries", self.entries_path)):
            if not path.exists():
                raise ConfigError(f"{label} path {path} does not exist")
        if self.mock_fixtures is not None and not self.mock_fixtures.exists():
            raise ConfigError(f"mock fixtures {self.mock_fixtures} do not exist")

    def llm_configs(self, only: Sequence[str] | None = None) -> list[LLMConfig]:
        ids = list(only) if only else self.model_ids
        return [LLMConfig(model_id=m, **self.llm) for m in ids]


def load_run_config(path: str | Path) -> RunConfig:
    """Parse a run configuration; relative paths resolve against its directory."""
    path = Path(path)
    try:
        raw = json.loads(path.read_text(encoding="utf-8"))
    except (OSError, ValueError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    base = path.parent

    def resolve(value):
        return None if value is None else (base / value)

    try:
        llm = dict(raw.get("llm", {}))
        endpoint = llm.pop("endpoint", OPENROUTER_ENDPOINT)
        chunking = raw.get("chunking", {})
        cfg = RunConfig(
            corpus_path=resolve(raw["corpus"]),
            entries_path=resolve(raw["entries"]),
            model_ids=list(raw["models"]),
            output_path=resolve(raw.get("output", "results.jsonl")),
            cache_dir=resolve(raw.get("cache_dir", ".slr_cache")),
            embedding=dict(raw.get("embedding", {"provider": "hash"})),
            tokenizer=raw.get("tokenizer"),
            chunking=ChunkingParams(chunking.get("chunk_size", 1000), chunking.get("overlap", 500)),
            k=int(raw.get("k", 3)),
            parallelism=int(raw.get("parallelism", 4)),
            api_key_env=raw.get("api_key_env", "OPENROUTER_API_KEY"),
            endpoint=endpoint,
            llm=llm,
            mock_fixtures=resolve(raw.get("mock_fixtures")),
        )
        cfg.llm_configs()
    except (KeyError, TypeError) as exc:
        raise ConfigError(f"{path}: missing or malformed field {exc}") from exc
    return cfg


def build_provider(cfg: RunConfig, offline: bool = False) -> EmbeddingProvider:
    emb = cfg.embedding
    kind = "hash" if offline else emb.get("provider", "hash")
    max_tokens = int(emb.get("max_input_tokens", 512))
    if kind == "hash":
        return HashEmbedder(dim=int(emb.get("dim", 256)), max_input_tokens=max_tokens)
    if kind == "http":
        spec = EmbeddingProviderSpec(
            name=emb.get("name") or emb["model"],
            dim=int(emb["dim"]),
            max_input_tokens=max_tokens,
            endpoint=emb["endpoint"],
            model=emb.get("model"),
        )
        tok = HFTokenizer(emb["tokenizer"]) if emb.get("tokenizer") else None
        return HTTPEmbedder(spec, api_key_env=emb.get("api_key_env"), tokenizer=tok, max_in_flight=cfg.parallelism)
    if kind == "sentence-transformers":
        return SentenceTransformerEmbedder(emb.get("model", "NeuML/pubmedbert-base-embeddings"), max_tokens)
    raise ConfigError(f"unknown embedding provider {kind!r}")


def build_tokenizer(cfg: RunConfig, provider: EmbeddingProvider) -> Tokenizer:
    if cfg.tokenizer in (None, "provider"):
        return provider.tokenizer
    if cfg.tokenizer == "whitespace":
        return WhitespaceTokenizer()
    return HFTokenizer(cfg.tokenizer)


def build_backend(cfg: RunConfig, offline: bool = False) -> ChatBackend:
    if offline:
        if cfg.mock_fixtures is not None:
            return ScriptedMockLLM.from_file(cfg.mock_fixtures)
        return RuleBasedMockLLM()
    return OpenAICompatibleChat(cfg.endpoint, cfg.api_key_env)


class EventLog:
    """JSON-lines progress events on a text stream (stderr by default)."""

    def __init__(self, stream: IO[str] | None = None):
        self.stream = stream

    def __call__(self, event: str, **fields) -> None:
        stream = self.stream or sys.stderr
        stream.write(json.dumps({"event": event, **fields}) + "\n")
        stream.flush()


@dataclass
class ExtractSummary:
    output_path: Path
    n_records: int
    n_errors: int
    cache_hits: int
    cache_misses: int


def run_extract(
    cfg: RunConfig,
    *,
    offline: bool = False,
    models: Sequence[str] | None = None,
    backend: ChatBackend | None = None,
    provider: EmbeddingProvider | None = None,
    events: EventLog | None = None,
) -> ExtractSummary:
    """Extract every (document, entry, model) and write the results file.

    Everything that can fail on configuration is checked before the first
    request. Records go to ``<output>.partial`` and the file is renamed
    once complete, so an interrupted run never leaves a truncated result;
    re-running picks finished completions up from the cache.
    """
    events = events or EventLog()
    cfg.validate()
    try:
        docs = load_corpus(cfg.corpus_path)
    except IngestError as exc:
        raise ConfigError(str(exc)) from exc
    entries = load_entries(cfg.entries_path)
    llm_configs = cfg.llm_configs(models)
    provider = provider or build_provider(cfg, offline)
    backend = backend or build_backend(cfg, offline)
    tokenizer = build_tokenizer(cfg, provider)

    retriever = Retriever(provider, cfg.chunking, tokenizer, cfg.k, EmbeddingCache(cfg.cache_dir))
    cache = ResponseCache(cfg.cache_dir)
    total = len(docs) * len(entries) * len(llm_configs)
    events("start", documents=len(docs), entries=len(entries), models=[c.model_id for c in llm_configs], items=total)

    cfg.output_path.parent.mkdir(parents=True, exist_ok=True)
    partial = cfg.output_path.with_name(cfg.output_path.name + ".partial")
    n = errors = 0
    t0 = time.perf_counter()
    with partial.open("w", encoding="utf-8") as out:
        for rec in extract_batch(docs, entries, llm_configs, retriever, backend, cache, cfg.parallelism):
            out.write(json.dumps(rec.to_dict(), ensure_ascii=False) + "\n")
            n += 1
            errors += rec.error is not None
            events(
                "record",
                doc_id=rec.doc_id,
                entry_id=rec.entry_id,
                model_id=rec.model_id,
                error=rec.error,
                from_cache=rec.from_cache,
                done=n,
                items=total,
            )
    os.replace(partial, cfg.output_path)
    events(
        "done",
        records=n,
        errors=errors,
        cache_hits=cache.hits,
        cache_misses=cache.misses,
        seconds=round(time.perf_counter() - t0, 3),
    )
    return ExtractSummary(cfg.output_path, n, errors, cache.hits, cache.misses)


def load_records(path: str | Path) -> list[ExtractionRecord]:
    path = Path(path)
    try:
        lines = path.read_text(encoding="utf-8").splitlines()
        return [ExtractionRecord.from_dict(json.loads(line)) for line in lines if line.strip()]
    except (OSError, ValueError, TypeError) as exc:
        raise ConfigError(f"cannot read results {path}: {exc}") from exc


def run_evaluate(results_path: str | Path, annotations_path: str | Path, output_path: str | Path) -> dict[str, Path]:
    """Compare extraction results with human annotations and write the report files."""
    models = annotations_from_records(load_records(results_path))
    humans = load_annotations(annotations_path)
    if len(humans) < 2:
        raise EvalError(f"annotations name {len(humans)} rater(s); two are required")
    return write_report(evaluate(humans, models), output_path)


def _cmd_extract(args, events: EventLog) -> int:
    cfg = load_run_config(args.config)
    summary = run_extract(cfg, offline=args.offline, models=args.model or None, events=events)
    return EXIT_PARTIAL if summary.n_errors else EXIT_OK


def _cmd_evaluate(args, events: EventLog) -> int:
    paths = run_evaluate(args.results, args.annotations, args.out)
    events("report", **{k: str(v) for k, v in paths.items()})
    return EXIT_OK


def _cmd_chunks(args, events: EventLog) -> int:
    cfg = load_run_config(args.config)
    try:
        docs = {d.doc_id: d for d in load_corpus(cfg.corpus_path)}
    except IngestError as exc:
        raise ConfigError(str(exc)) from exc
    if args.doc not in docs:
        raise ConfigError(f"no document {args.doc!r} in {cfg.corpus_path}")
    tokenizer = build_tokenizer(cfg, build_provider(cfg, offline=args.offline))
    for c in chunk_document(docs[args.doc], cfg.chunking, tokenizer):
        span = {
            "chunk_index": c.chunk_index,
            "token_start": c.token_start,
            "token_end": c.token_end,
            "char_start": c.char_start,
            "char_end": c.char_end,
        }
        print(json.dumps(span))
    return EXIT_OK


def _cmd_version(args, events: EventLog) -> int:
    print(__version__)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="slr-extract", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("extract", help="run retrieval + LLM extraction over a corpus")
    p.add_argument("--config", required=True)
    p.add_argument("--offline", action="store_true", help="hash embedder and mock LLM, no network")
    p.add_argument("--model", action="append", help="restrict to this model id (repeatable)")
    p.set_defaults(func=_cmd_extract)

    p = sub.add_parser("evaluate", help="kappa matrix and precision/recall against annotators")
    p.add_argument("--results", required=True)
    p.add_argument("--annotations", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_evaluate)

    p = sub.add_parser("chunks", help="print the chunk spans of one document")
    p.add_argument("--config", required=True)
    p.add_argument("--doc", required=True)
    p.add_argument("--offline", action="store_true")
    p.set_defaults(func=_cmd_chunks)

    p = sub.add_parser("version", help="print the package version")
    p.set_defaults(func=_cmd_version)
    return parser


def main(argv: Sequence[str] | None = None, stderr: IO[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    events = EventLog(stderr)
    try:
        return args.func(args, events)
    except EvalError as exc:
        events("error", kind="evaluation", message=str(exc))
        return EXIT_EVAL
    except (ConfigError, IngestError) as exc:
        events("error", kind="config", message=str(exc))
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
