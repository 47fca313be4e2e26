"""Application configuration: JSON config file loading with packaged
defaults (stopwords, synonyms, regex patterns, prompt template, question
set).

Every key is optional; absent sections fall back to the defaults shipped
under ``bularag/data``. See the README for the full key reference.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

from .answer import NOT_FOUND_SENTENCE, ProviderConfig
from .embed import EmbedderSpec
from .ingest import (
    DEFAULT_DOSAGE_PATTERN,
    DEFAULT_HEADING_PATTERNS,
    DEFAULT_MAX_TOKENS,
)
from .retrieve import QueryExpansion, RetrievalConfig


def _data_text(name: str) -> str:
    return resources.files("bularag").joinpath("data", name).read_text(encoding="utf-8")


def default_stopwords() -> frozenset[str]:
    return frozenset(
        w.strip() for w in _data_text("stopwords_pt.txt").splitlines() if w.strip()
    )


def default_synonyms() -> dict[str, list[str]]:
    return json.loads(_data_text("synonyms.json"))


def default_regex_patterns() -> list[str]:
    return json.loads(_data_text("regex_patterns.json"))


def default_questions_text() -> str:
    return _data_text("questions_default.txt")


def default_retrieval_config(**overrides) -> RetrievalConfig:
    params = {
        "expansion": QueryExpansion(default_synonyms()),
        "stopwords": default_stopwords(),
        "regex_patterns": tuple(default_regex_patterns()),
    }
    params.update(overrides)
    return RetrievalConfig(**params)


@dataclass(frozen=True)
class IngestConfig:
    max_tokens: int = DEFAULT_MAX_TOKENS
    heading_patterns: tuple[str, ...] = DEFAULT_HEADING_PATTERNS
    dosage_pattern: str = DEFAULT_DOSAGE_PATTERN


@dataclass(frozen=True)
class PromptConfig:
    template_path: str | None = None
    rules: str | None = None
    not_found: str = NOT_FOUND_SENTENCE

    def template_text(self) -> str | None:
        if self.template_path is None:
            return None
        return Path(self.template_path).read_text(encoding="utf-8")


@dataclass(frozen=True)
class ServiceConfig:
    host: str = "127.0.0.1"
    port: int = 8077


@dataclass
class AppConfig:
    corpus_dir: str | None = None
    manifest_path: str | None = None
    bundle_path: str | None = None
    questions_path: str | None = None
    ingest: IngestConfig = field(default_factory=IngestConfig)
    embedder: EmbedderSpec = field(default_factory=EmbedderSpec)
    retrieval: RetrievalConfig = field(default_factory=default_retrieval_config)
    provider: ProviderConfig = field(default_factory=ProviderConfig)
    prompt: PromptConfig = field(default_factory=PromptConfig)
    service: ServiceConfig = field(default_factory=ServiceConfig)


def _build_retrieval(section: dict) -> RetrievalConfig:
    params = {}
    if "synonyms" in section:
        params["expansion"] = QueryExpansion(dict(section["synonyms"]))
    if "stopwords" in section:
        params["stopwords"] = frozenset(section["stopwords"])
    if "regex_patterns" in section:
        params["regex_patterns"] = tuple(section["regex_patterns"])
    for key in ("max_context", "top_k", "threshold", "hybrid"):
        if key in section:
            params[key] = section[key]
    return default_retrieval_config(**params)


def load_config(path: str | Path | None = None) -> AppConfig:
    """Build an AppConfig from a JSON file; None yields all defaults."""
    raw: dict = {}
    if path is not None:
        try:
            raw = json.loads(Path(path).read_text(encoding="utf-8"))
        except OSError as exc:
            raise FileNotFoundError(f"cannot read config {str(path)!r}: {exc}") from exc
        if not isinstance(raw, dict):
            raise ValueError("config file must hold a JSON object")

    def section(name: str) -> dict:
        value = raw.get(name, {})
        if not isinstance(value, dict):
            raise ValueError(f"config section {name!r} must be an object")
        return value

    ingest_raw = section("ingest")
    if "heading_patterns" in ingest_raw:
        ingest_raw = dict(ingest_raw, heading_patterns=tuple(ingest_raw["heading_patterns"]))
    return AppConfig(
        corpus_dir=raw.get("corpus_dir"),
        manifest_path=raw.get("manifest_path"),
        bundle_path=raw.get("bundle_path"),
        questions_path=raw.get("questions_path"),
        ingest=IngestConfig(**ingest_raw),
        embedder=EmbedderSpec(**section("embedder")),
        retrieval=_build_retrieval(section("retrieval")),
        provider=ProviderConfig(**section("provider")),
        prompt=PromptConfig(**section("prompt")),
        service=ServiceConfig(**section("service")),
    )
