"""Exact flat L2 vector index with aligned passage metadata and file
persistence.

Search is an exhaustive scan over all stored vectors: results are exact,
sorted by squared Euclidean distance with ties broken by lower passage id.
Bundles persist to a single binary file:

    magic "BRAGIDX1" | u32 version | u32 dim | u64 n
    n*dim float32 little-endian, row-major
    u64 trailer length | UTF-8 JSON trailer (passage_ids, passages, sources, meta)
    u32 CRC32 of all preceding bytes

The format is bit-exact: saving the same bundle twice yields identical files.
"""

from __future__ import annotations

import json
import struct
import zlib
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .embed import EmbeddingVector
from .errors import (
    CorruptBundle,
    DimensionMismatch,
    EmptyInput,
    VersionUnsupported,
)

MAGIC = b"BRAGIDX1"
FORMAT_VERSION = 1


@dataclass(eq=False)
class VectorIndex:
    dim: int
    vectors: np.ndarray  # (n, dim) float32, insertion order
    passage_ids: list[int]


@dataclass(eq=False)
class IndexBundle:
    """A search-ready index plus positionally aligned passage texts, source
    filenames, and free-form metadata (embedder fingerprint, creation time,
    medicine map, section labels)."""

    index: VectorIndex
    passages: list[str]
    sources: list[str]
    meta: dict


def build_index(
    embeddings: list[EmbeddingVector],
    passage_ids: list[int] | None = None,
) -> VectorIndex:
    """Stack embeddings into a search-ready index, preserving input order."""
    if not embeddings:
        raise EmptyInput("cannot build an index from zero vectors")
    dim = embeddings[0].dim
    for i, vec in enumerate(embeddings):
        if vec.dim != dim:
            raise DimensionMismatch(f"vector {i} has dim {vec.dim}, expected {dim}")
    if passage_ids is None:
        passage_ids = list(range(len(embeddings)))
    if len(passage_ids) != len(embeddings):
        raise DimensionMismatch(
            f"{len(passage_ids)} passage ids for {len(embeddings)} vectors"
        )
    if len(set(passage_ids)) != len(passage_ids):
        raise ValueError("duplicate passage ids")
    vectors = np.stack([v.values.astype(np.float32) for v in embeddings])
    return VectorIndex(dim=dim, vectors=vectors, passage_ids=list(passage_ids))


def search_index(
    index: VectorIndex,
    query: EmbeddingVector,
    top_k: int,
) -> list[tuple[int, float]]:
    """Exact top-k scan: min(top_k, n) (passage_id, squared L2 distance)
    pairs, distance ascending, ties broken by lower passage id."""
    if query.dim != index.dim:
        raise DimensionMismatch(f"query dim {query.dim} != index dim {index.dim}")
    if top_k < 1:
        raise ValueError("top_k must be >= 1")
    diffs = index.vectors.astype(np.float64) - query.values.astype(np.float64)
    distances = np.einsum("ij,ij->i", diffs, diffs)
    ids = np.asarray(index.passage_ids)
    order = np.lexsort((ids, distances))[: min(top_k, len(ids))]
    return [(int(ids[i]), float(distances[i])) for i in order]


def save_bundle(bundle: IndexBundle, path: str | Path) -> None:
    """Write a bundle to its single-file binary format."""
    index = bundle.index
    n = index.vectors.shape[0]
    if len(bundle.passages) != n or len(bundle.sources) != n:
        raise ValueError("passages/sources are not aligned with the index rows")
    trailer = json.dumps(
        {
            "passage_ids": index.passage_ids,
            "passages": bundle.passages,
            "sources": bundle.sources,
            "meta": bundle.meta,
        },
        ensure_ascii=False,
        separators=(",", ":"),
    ).encode("utf-8")
    blob = bytearray()
    blob += MAGIC
    blob += struct.pack("<IIQ", FORMAT_VERSION, index.dim, n)
    blob += index.vectors.astype("<f4").tobytes(order="C")
    blob += struct.pack("<Q", len(trailer))
    blob += trailer
    blob += struct.pack("<I", zlib.crc32(bytes(blob)) & 0xFFFFFFFF)
    Path(path).write_bytes(bytes(blob))


def load_bundle(path: str | Path) -> IndexBundle:
    """Read a bundle back; the inverse of save_bundle, bit-exactly."""
    try:
        data = Path(path).read_bytes()
    except OSError as exc:
        raise CorruptBundle(f"cannot read bundle {str(path)!r}: {exc}") from exc

    if len(data) < len(MAGIC) + 16 + 8 + 4:
        raise CorruptBundle("file too short to be a bundle")
    if data[: len(MAGIC)] != MAGIC:
        raise CorruptBundle("bad magic")
    stored_crc = struct.unpack("<I", data[-4:])[0]
    if zlib.crc32(data[:-4]) & 0xFFFFFFFF != stored_crc:
        raise CorruptBundle("checksum mismatch")

    offset = len(MAGIC)
    version, dim, n = struct.unpack_from("<IIQ", data, offset)
    offset += 16
    if version != FORMAT_VERSION:
        raise VersionUnsupported(f"bundle format version {version} is not supported")
    vec_bytes = n * dim * 4
    if len(data) < offset + vec_bytes + 8 + 4:
        raise CorruptBundle("truncated vector payload")
    vectors = np.frombuffer(
        data, dtype="<f4", count=n * dim, offset=offset
    ).reshape(n, dim).copy()
    offset += vec_bytes
    (trailer_len,) = struct.unpack_from("<Q", data, offset)
    offset += 8
    if len(data) != offset + trailer_len + 4:
        raise CorruptBundle("trailer length does not match file size")
    try:
        trailer = json.loads(data[offset : offset + trailer_len].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise CorruptBundle(f"bad trailer: {exc}") from exc

    try:
        passage_ids = [int(i) for i in trailer["passage_ids"]]
        passages = list(trailer["passages"])
        sources = list(trailer["sources"])
        meta = dict(trailer["meta"])
    except (KeyError, TypeError, ValueError) as exc:
        raise CorruptBundle(f"incomplete trailer: {exc}") from exc
    if not (len(passage_ids) == len(passages) == len(sources) == n):
        raise CorruptBundle("trailer arrays not aligned with vector rows")
    return IndexBundle(
        index=VectorIndex(dim=dim, vectors=vectors, passage_ids=passage_ids),
        passages=passages,
        sources=sources,
        meta=meta,
    )
