"""Retrieval-augmented LLM data extraction for systematic literature reviews.

Articles are cut into overlapping token windows, the windows most similar
to each data-entry question are retrieved, and an LLM picks answers from the
entry's closed option set. Outputs are scored against human annotators with
Cohen's kappa and consensus precision/recall.
"""

__version__ = "0.1.0"

from .corpus import (
    Chunk,
    ChunkingParams,
    Document,
    HFTokenizer,
    Token,
    WhitespaceTokenizer,
    chunk_document,
    load_corpus,
    tokenize,
)
from .errors import (
    ConfigError,
    DegenerateVectorError,
    DimError,
    EvalError,
    ExtractError,
    IngestError,
    ParseError,
    PromptError,
    ProviderError,
    ProviderTimeoutError,
    QueryError,
    RequestError,
)
from .evaluation import (
    AgreementMatrix,
    AnnotationSet,
    KappaResult,
    PRResult,
    agreement_matrix,
    cohen_kappa,
    precision_recall,
)
from .extraction import (
    DataEntry,
    ExtractionRecord,
    LLMConfig,
    Option,
    PromptBundle,
    build_prompt,
    extract_entry,
    parse_answer,
    query_llm,
)
from .retrieval import (
    EmbeddingProviderSpec,
    HashEmbedder,
    HTTPEmbedder,
    Retriever,
    ScoredChunk,
    cosine_similarity,
    embed_texts,
    rank_chunks,
)
