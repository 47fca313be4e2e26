"""Retrieval-augmented question answering over drug package inserts (bulas),
plus the evaluation harness for precision, completeness, response time,
cosine consistency, and Cohen's kappa."""

from .answer import Answer, PromptBundle, ProviderConfig, ask, build_prompt, generate_answer
from .embed import (
    EmbedderSpec,
    EmbeddingVector,
    build_embedder,
    cosine_similarity,
    embed_texts,
)
from .errors import BularagError
from .evaluation import (
    EvalRow,
    MetricsSummary,
    cohen_kappa,
    completeness_mean,
    consistency_score,
    interpret_kappa,
    precision_mean,
    read_rows_csv,
    run_eval,
    summarize,
    time_mean,
    write_rows_csv,
)
from .index import IndexBundle, VectorIndex, build_index, load_bundle, save_bundle, search_index
from .ingest import (
    Document,
    Passage,
    chunk_passages,
    count_tokens,
    extract_document,
    extract_medicine_name,
    ingest_directory,
)
from .retrieve import (
    QueryExpansion,
    RetrievalConfig,
    RetrievalHit,
    expand_query,
    hybrid_search,
    keyword_match,
    regex_match,
)

__version__ = "0.1.0"

__all__ = [
    "Answer",
    "BularagError",
    "Document",
    "EmbedderSpec",
    "EmbeddingVector",
    "EvalRow",
    "IndexBundle",
    "MetricsSummary",
    "Passage",
    "PromptBundle",
    "ProviderConfig",
    "QueryExpansion",
    "RetrievalConfig",
    "RetrievalHit",
    "VectorIndex",
    "ask",
    "build_embedder",
    "build_index",
    "build_prompt",
    "chunk_passages",
    "cohen_kappa",
    "completeness_mean",
    "consistency_score",
    "cosine_similarity",
    "count_tokens",
    "embed_texts",
    "expand_query",
    "extract_document",
    "extract_medicine_name",
    "generate_answer",
    "hybrid_search",
    "ingest_directory",
    "interpret_kappa",
    "keyword_match",
    "load_bundle",
    "precision_mean",
    "read_rows_csv",
    "regex_match",
    "run_eval",
    "save_bundle",
    "search_index",
    "summarize",
    "time_mean",
    "write_rows_csv",
]
