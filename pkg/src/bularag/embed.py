"""Embedding vectors: a deterministic hashed bag-of-words embedder and a
remote embedding-service client.

Vectors are float32 end-to-end (the on-disk bundle format stores float32
rows); similarity math runs in float64. The deterministic embedder is
bit-reproducible across runs and platforms, which makes index builds
idempotent and retrieval tests hermetic.
"""

from __future__ import annotations

import os
import re
import time
from dataclasses import dataclass
from functools import lru_cache

import httpx
import numpy as np

from .errors import DimensionMismatch, RemoteUnavailable, ZeroVector

FNV64_OFFSET = 0xCBF29CE484222325
FNV64_PRIME = 0x100000001B3
_UINT64_MASK = 0xFFFFFFFFFFFFFFFF
_PUNCT_RE = re.compile(r"[^\w\s]")

UNIT_NORM_TOLERANCE = 1e-6


def fnv1a_64(data: bytes) -> int:
    """64-bit FNV-1a hash."""
    h = FNV64_OFFSET
    for byte in data:
        h ^= byte
        h = (h * FNV64_PRIME) & _UINT64_MASK
    return h


@dataclass(eq=False)
class EmbeddingVector:
    """Fixed-dimension real vector; ``normalized`` is False only for the
    zero vector (unembeddable input such as empty text)."""

    values: np.ndarray
    dim: int
    normalized: bool


@dataclass(frozen=True)
class EmbedderSpec:
    """How to produce embeddings: locally (deterministic) or via a service."""

    kind: str = "deterministic"  # deterministic | remote
    dim: int = 384
    model_name: str = "hashed-bow-v1"
    endpoint: str | None = None
    api_key_env: str = "EMBED_API_KEY"
    timeout_s: float = 30.0
    attempts: int = 3
    backoff_s: float = 0.5
    max_concurrency: int = 4

    def __post_init__(self) -> None:
        if self.dim < 1:
            raise ValueError("dim must be >= 1")
        if self.kind not in ("deterministic", "remote"):
            raise ValueError(f"unknown embedder kind {self.kind!r}")

    def fingerprint(self) -> dict:
        return {"kind": self.kind, "dim": self.dim, "model_name": self.model_name}


def _finalize(acc: np.ndarray) -> EmbeddingVector:
    norm = float(np.linalg.norm(acc))
    if norm == 0.0:
        return EmbeddingVector(acc.astype(np.float32), acc.shape[0], normalized=False)
    return EmbeddingVector((acc / norm).astype(np.float32), acc.shape[0], normalized=True)


class DeterministicEmbedder:
    """Hashed bag-of-words embedder.

    Text is lowercased, stripped of punctuation, and whitespace-tokenized.
    Each token is hashed with 64-bit FNV-1a; the bucket is ``hash mod dim``
    and the contribution is +1 when bit 63 of the hash is 0, else -1,
    accumulated per occurrence and finally L2-normalized.
    """

    def __init__(self, spec: EmbedderSpec):
        self.spec = spec
        self.dim = spec.dim

    def embed(self, texts: list[str]) -> list[EmbeddingVector]:
        return [self._embed_one(t) for t in texts]

    def _embed_one(self, text: str) -> EmbeddingVector:
        acc = np.zeros(self.dim, dtype=np.float64)
        for token in _PUNCT_RE.sub("", text.lower()).split():
            h = fnv1a_64(token.encode("utf-8"))
            acc[h % self.dim] += 1.0 if (h >> 63) == 0 else -1.0
        return _finalize(acc)

    def fingerprint(self) -> dict:
        return self.spec.fingerprint()


class RemoteEmbedder:
    """Client for an embedding service.

    Wire format: POST ``{"texts": [...]}`` -> ``{"vectors": [[...], ...]}``.
    Transient failures are retried with exponential backoff; vectors are
    passed through untouched except for L2 normalization, applied only when
    the service did not already return unit vectors. Concurrent in-flight
    requests are capped by a semaphore.
    """

    def __init__(self, spec: EmbedderSpec):
        self.endpoint = spec.endpoint or os.environ.get("EMBED_ENDPOINT", "")
        if not self.endpoint:
            raise ValueError(
                "remote embedder requires an endpoint (config or EMBED_ENDPOINT)"
            )
        self.spec = spec
        self.dim = spec.dim
        import threading

        self._slots = threading.Semaphore(spec.max_concurrency)

    def embed(self, texts: list[str]) -> list[EmbeddingVector]:
        payload = self._post({"texts": texts})
        vectors = payload.get("vectors")
        if not isinstance(vectors, list) or len(vectors) != len(texts):
            raise RemoteUnavailable(
                f"service returned {len(vectors) if isinstance(vectors, list) else 'no'}"
                f" vectors for {len(texts)} texts"
            )
        out = []
        for raw in vectors:
            arr = np.asarray(raw, dtype=np.float64)
            if arr.ndim != 1 or arr.shape[0] != self.dim:
                raise DimensionMismatch(
                    f"service returned dim {arr.shape[-1] if arr.ndim else 0}, expected {self.dim}"
                )
            norm = float(np.linalg.norm(arr))
            if norm == 0.0:
                out.append(EmbeddingVector(arr.astype(np.float32), self.dim, normalized=False))
            elif abs(norm - 1.0) <= UNIT_NORM_TOLERANCE:
                out.append(EmbeddingVector(arr.astype(np.float32), self.dim, normalized=True))
            else:
                out.append(_finalize(arr))
        return out

    def _post(self, body: dict) -> dict:
        headers = {}
        key = os.environ.get(self.spec.api_key_env, "")
        if key:
            headers["Authorization"] = f"Bearer {key}"
        last_error: Exception | None = None
        for attempt in range(self.spec.attempts):
            if attempt:
                time.sleep(self.spec.backoff_s * 2 ** (attempt - 1))
            with self._slots:
                try:
                    resp = httpx.post(
                        self.endpoint,
                        json=body,
                        headers=headers,
                        timeout=self.spec.timeout_s,
                    )
                except httpx.HTTPError as exc:
                    last_error = exc
                    continue
            if resp.status_code >= 500:
                last_error = RemoteUnavailable(f"HTTP {resp.status_code}")
                continue
            if resp.status_code != 200:
                raise RemoteUnavailable(f"HTTP {resp.status_code}: {resp.text[:200]}")
            try:
                return resp.json()
            except ValueError as exc:
                raise RemoteUnavailable(f"invalid JSON from service: {exc}") from exc
        raise RemoteUnavailable(
            f"embedding service failed after {self.spec.attempts} attempts: {last_error}"
        )

    def fingerprint(self) -> dict:
        return self.spec.fingerprint()


@lru_cache(maxsize=8)
def build_embedder(spec: EmbedderSpec):
    if spec.kind == "remote":
        return RemoteEmbedder(spec)
    return DeterministicEmbedder(spec)


def embed_texts(texts: list[str], spec: EmbedderSpec) -> list[EmbeddingVector]:
    """Embed a batch of texts according to ``spec``."""
    return build_embedder(spec).embed(texts)


def cosine_similarity(a: EmbeddingVector, b: EmbeddingVector) -> float:
    """Standard cosine similarity, clipped into [-1, 1]."""
    if a.dim != b.dim:
        raise DimensionMismatch(f"dims {a.dim} and {b.dim} do not agree")
    av = a.values.astype(np.float64)
    bv = b.values.astype(np.float64)
    na = float(np.linalg.norm(av))
    nb = float(np.linalg.norm(bv))
    if na == 0.0 or nb == 0.0:
        raise ZeroVector("cosine similarity is undefined for the zero vector")
    return float(np.clip(np.dot(av, bv) / (na * nb), -1.0, 1.0))
