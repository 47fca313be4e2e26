"""Hybrid retrieval: query expansion, exact vector search, keyword match,
and regex match, merged into a deterministic ranked context set.

Merge order is vector (distance ascending) -> keyword (score descending) ->
regex (score descending), deduplicated by first appearance and capped at
``max_context`` hits.
"""

from __future__ import annotations

import re
import unicodedata
from dataclasses import dataclass, field
from typing import Sequence

from .errors import InvalidPattern
from .index import IndexBundle, search_index

DEFAULT_TOP_K = 8
DEFAULT_MAX_CONTEXT = 12


@dataclass(frozen=True)
class RetrievalHit:
    """One retrieved passage. ``score`` semantics depend on ``origin``:
    squared L2 distance (lower is better) for vector hits, match counts
    (higher is better) for keyword and regex hits."""

    origin: str  # vector | keyword | regex
    passage_id: int
    source: str
    text: str
    score: float


@dataclass
class QueryExpansion:
    """Synonym map applied to queries before retrieval; map order and term
    order define the deterministic expansion order."""

    synonym_map: dict[str, list[str]] = field(default_factory=dict)


def _strip_accents(text: str) -> str:
    decomposed = unicodedata.normalize("NFKD", text)
    return "".join(c for c in decomposed if not unicodedata.combining(c))


def _fold_tokens(text: str) -> list[str]:
    """Case-folded, accent-folded, punctuation-free tokens."""
    folded = _strip_accents(text.lower())
    return re.sub(r"[^\w\s]", " ", folded).split()


def _contains_term(text: str, term: str) -> bool:
    return re.search(rf"(?<!\w){re.escape(term)}(?!\w)", text, re.IGNORECASE) is not None


def expand_query(query: str, expansion: QueryExpansion) -> str:
    """Append each matching map key's expansion terms to the query.

    A key matches when it occurs (case-insensitively, at word boundaries) in
    the query; terms already present are skipped, which makes expansion
    idempotent.
    """
    expanded = query
    for key, terms in expansion.synonym_map.items():
        if not _contains_term(expanded, key):
            continue
        for term in terms:
            if not _contains_term(expanded, term):
                expanded = f"{expanded} {term}"
    return expanded


def compile_patterns(patterns: Sequence[str]) -> list[re.Pattern]:
    """Compile config regex patterns, failing fast on an invalid one."""
    compiled = []
    for pattern in patterns:
        try:
            compiled.append(re.compile(pattern, re.IGNORECASE))
        except re.error as exc:
            raise InvalidPattern(f"bad regex {pattern!r}: {exc}") from exc
    return compiled


@dataclass
class RetrievalConfig:
    """Retrieval tuning: synonym expansion, stopwords, regex pattern set,
    and the context cap."""

    expansion: QueryExpansion = field(default_factory=QueryExpansion)
    stopwords: frozenset[str] = frozenset()
    regex_patterns: tuple[str, ...] = ()
    max_context: int = DEFAULT_MAX_CONTEXT
    top_k: int = DEFAULT_TOP_K
    threshold: float | None = None
    hybrid: bool = True

    def __post_init__(self) -> None:
        self.stopwords = frozenset(_strip_accents(w.lower()) for w in self.stopwords)
        self.regex_patterns = tuple(self.regex_patterns)
        self._compiled = compile_patterns(self.regex_patterns)

    @property
    def compiled_patterns(self) -> list[re.Pattern]:
        return self._compiled


def keyword_match(
    query: str,
    bundle: IndexBundle,
    limit: int,
    *,
    stopwords: frozenset[str] = frozenset(),
) -> list[RetrievalHit]:
    """Score passages by how many distinct query content words they contain.

    Words are case- and accent-folded; stopwords are dropped from the query.
    Only passages with score > 0 are returned, sorted by score descending
    then passage id ascending, truncated to ``limit``.
    """
    if limit < 0:
        raise ValueError("limit must be >= 0")
    content_words = {
        t for t in _fold_tokens(query) if t not in stopwords
    }
    if not content_words or limit == 0:
        return []
    scored = []
    for pid, text in enumerate(bundle.passages):
        score = len(content_words & set(_fold_tokens(text)))
        if score > 0:
            scored.append((pid, score))
    scored.sort(key=lambda item: (-item[1], item[0]))
    return [
        RetrievalHit("keyword", pid, bundle.sources[pid], bundle.passages[pid], float(score))
        for pid, score in scored[:limit]
    ]


def regex_match(
    patterns: Sequence[str | re.Pattern],
    bundle: IndexBundle,
    limit: int,
) -> list[RetrievalHit]:
    """Passages with at least one match of any pattern; score is the total
    match count, sorted descending then passage id ascending."""
    if limit < 0:
        raise ValueError("limit must be >= 0")
    compiled = [
        p if isinstance(p, re.Pattern) else compile_patterns([p])[0] for p in patterns
    ]
    if not compiled or limit == 0:
        return []
    scored = []
    for pid, text in enumerate(bundle.passages):
        count = sum(len(p.findall(text)) for p in compiled)
        if count > 0:
            scored.append((pid, count))
    scored.sort(key=lambda item: (-item[1], item[0]))
    return [
        RetrievalHit("regex", pid, bundle.sources[pid], bundle.passages[pid], float(count))
        for pid, count in scored[:limit]
    ]


def hybrid_search(
    query: str,
    bundle: IndexBundle,
    embedder,
    top_k: int = DEFAULT_TOP_K,
    threshold: float | None = None,
    hybrid: bool = True,
    *,
    config: RetrievalConfig | None = None,
) -> list[RetrievalHit]:
    """Expanded vector search, optionally fused with keyword and regex hits.

    Vector hits with distance >= threshold are dropped when a threshold is
    set (strict inequality). With ``hybrid`` enabled, keyword then regex
    hits whose passage is not already present are appended. Output is capped
    at ``config.max_context``.
    """
    cfg = config if config is not None else RetrievalConfig()
    expanded = expand_query(query, cfg.expansion)
    query_vec = embedder.embed([expanded])[0]

    hits: list[RetrievalHit] = []
    for pid, distance in search_index(bundle.index, query_vec, top_k):
        if threshold is not None and not distance < threshold:
            continue
        hits.append(
            RetrievalHit("vector", pid, bundle.sources[pid], bundle.passages[pid], distance)
        )

    if hybrid:
        seen = {h.passage_id for h in hits}
        for hit in keyword_match(
            expanded, bundle, cfg.max_context, stopwords=cfg.stopwords
        ):
            if hit.passage_id not in seen:
                seen.add(hit.passage_id)
                hits.append(hit)
        for hit in regex_match(cfg.compiled_patterns, bundle, cfg.max_context):
            if hit.passage_id not in seen:
                seen.add(hit.passage_id)
                hits.append(hit)
    return hits[: cfg.max_context]
