"""Document ingestion: text extraction, medicine-name detection, chunking.

Sources are PDF or plain-text files. Plain text is first-class: the whole
pipeline (and test suite) runs without any PDF library installed. PDF
extraction is loaded lazily and requires the ``pdf`` extra.
"""

from __future__ import annotations

import hashlib
import re
import sys
from dataclasses import dataclass
from pathlib import Path
from typing import BinaryIO, Iterable, Sequence

from .errors import EmptyDocument, UnreadableFile

DEFAULT_MAX_TOKENS = 300

# Trailing dosage such as "50 mg", "2,5 mg/ml", "500mg comprimidos" is stripped
# from a candidate medicine-name line before it is scored.
DEFAULT_DOSAGE_PATTERN = r"\s+\d+(?:[.,]\d+)?\s*(?:mg/ml|mcg|mg|ml|g|ui)\b.*$"

# A line matching any of these marks the start of a section; passages inherit
# the most recent heading seen before they begin.
DEFAULT_HEADING_PATTERNS: tuple[str, ...] = (
    "INDICAÇÕES",
    "CONTRAINDICAÇÕES",
    "POSOLOGIA",
    "ADVERTÊNCIAS",
    "PRECAUÇÕES",
    "REAÇÕES ADVERSAS",
    "INTERAÇÕES",
    "SUPERDOSE",
    "COMPOSIÇÃO",
    "APRESENTAÇÕES",
    "COMO USAR",
    "ARMAZENAMENTO",
)


@dataclass(frozen=True)
class Document:
    """One source file: per-page texts plus the detected medicine name."""

    id: str
    filename: str
    page_texts: tuple[str, ...]
    full_text: str
    medicine_name: str


@dataclass(frozen=True)
class Passage:
    """An indexed text block of bounded token length with provenance."""

    id: int
    doc_id: str
    source: str
    section_label: str | None
    text: str
    token_count: int


def count_tokens(text: str) -> int:
    """Number of maximal non-whitespace runs in ``text``."""
    return len(text.split())


def extract_medicine_name(
    text: str,
    filename: str,
    *,
    dosage_pattern: str = DEFAULT_DOSAGE_PATTERN,
    scan_lines: int = 40,
) -> str:
    """Detect the medicine name near the top of a bula text.

    Scans the first ``scan_lines`` non-blank lines and returns the first one
    that, after stripping a trailing dosage, is mostly uppercase (>= 70% of
    its alphabetic characters) and 1-6 tokens long. Falls back to the
    filename stem, so the result is never empty.
    """
    dosage_re = re.compile(dosage_pattern, re.IGNORECASE)
    seen = 0
    for line in text.splitlines():
        line = line.strip()
        if not line:
            continue
        seen += 1
        if seen > scan_lines:
            break
        candidate = dosage_re.sub("", line).strip(" \t.,;:-–—")
        tokens = candidate.split()
        if not 1 <= len(tokens) <= 6:
            continue
        alphabetic = [c for c in candidate if c.isalpha()]
        if not alphabetic:
            continue
        upper = sum(1 for c in alphabetic if c.isupper())
        if upper / len(alphabetic) >= 0.7:
            return candidate
    stem = Path(filename).stem
    return stem or filename or "desconhecido"


def document_from_pages(
    page_texts: Sequence[str],
    filename: str,
    *,
    dosage_pattern: str = DEFAULT_DOSAGE_PATTERN,
) -> Document:
    """Assemble a Document from per-page texts (empty pages skipped)."""
    pages = tuple(page_texts)
    full_text = "\n".join(p for p in pages if p)
    if not full_text.strip():
        raise EmptyDocument(f"no extractable text in {filename!r}")
    return Document(
        id=hashlib.sha1(filename.encode("utf-8")).hexdigest()[:12],
        filename=filename,
        page_texts=pages,
        full_text=full_text,
        medicine_name=extract_medicine_name(
            full_text, filename, dosage_pattern=dosage_pattern
        ),
    )


def extract_document(
    source: str | Path | BinaryIO,
    kind: str,
    *,
    filename: str | None = None,
    dosage_pattern: str = DEFAULT_DOSAGE_PATTERN,
) -> Document:
    """Extract a Document from a file path or readable byte stream.

    ``kind`` is "pdf" or "text". Raises UnreadableFile on I/O or decode
    failure and EmptyDocument when no page yields any text.
    """
    if kind not in ("pdf", "text"):
        raise ValueError(f"unknown document kind {kind!r}")
    if filename is None:
        if isinstance(source, (str, Path)):
            filename = Path(source).name
        else:
            filename = Path(getattr(source, "name", "stream")).name
    if kind == "text":
        pages = [_read_text(source, filename)]
    else:
        pages = _read_pdf_pages(source, filename)
    return document_from_pages(pages, filename, dosage_pattern=dosage_pattern)


def _read_text(source: str | Path | BinaryIO, filename: str) -> str:
    try:
        if isinstance(source, (str, Path)):
            raw = Path(source).read_bytes()
        else:
            raw = source.read()
    except OSError as exc:
        raise UnreadableFile(f"cannot read {filename!r}: {exc}") from exc
    try:
        return raw.decode("utf-8")
    except UnicodeDecodeError:
        return raw.decode("latin-1")


def _read_pdf_pages(source: str | Path | BinaryIO, filename: str) -> list[str]:
    try:
        import pdfplumber
    except ImportError as exc:
        raise UnreadableFile(
            f"cannot read {filename!r}: PDF support requires the 'pdf' extra "
            "(pip install bularag[pdf])"
        ) from exc
    try:
        with pdfplumber.open(source) as pdf:
            return [page.extract_text() or "" for page in pdf.pages]
    except OSError as exc:
        raise UnreadableFile(f"cannot read {filename!r}: {exc}") from exc
    except Exception as exc:  # parser errors are backend-specific
        raise UnreadableFile(f"cannot parse {filename!r}: {exc}") from exc


def chunk_passages(
    doc: Document,
    max_tokens: int = DEFAULT_MAX_TOKENS,
    *,
    heading_patterns: Sequence[str] = DEFAULT_HEADING_PATTERNS,
    start_id: int = 0,
) -> list[Passage]:
    """Split a document into non-overlapping passages of <= max_tokens tokens.

    Paragraphs (blank-line separated) are packed greedily; a paragraph that
    fits within ``max_tokens`` is never split across passages, and an
    oversized paragraph is hard-split at token boundaries. Concatenating the
    passages' token sequences reproduces the document's token sequence.
    """
    if max_tokens < 1:
        raise ValueError("max_tokens must be >= 1")
    heading_res = [re.compile(p) for p in heading_patterns]
    passages: list[Passage] = []
    next_id = start_id
    buf: list[str] = []
    buf_tokens = 0
    buf_label: str | None = None
    current_label: str | None = None

    def emit(text: str, token_count: int, label: str | None) -> None:
        nonlocal next_id
        passages.append(
            Passage(
                id=next_id,
                doc_id=doc.id,
                source=doc.filename,
                section_label=label,
                text=text,
                token_count=token_count,
            )
        )
        next_id += 1

    def flush() -> None:
        nonlocal buf, buf_tokens
        if buf_tokens:
            emit("\n\n".join(buf), buf_tokens, buf_label)
        buf = []
        buf_tokens = 0

    for para in re.split(r"\n\s*\n", doc.full_text):
        para = para.strip()
        if not para:
            continue
        lines = para.splitlines()
        # a paragraph opening with a heading belongs to that heading's section
        if any(h.search(lines[0]) for h in heading_res):
            para_label = lines[0].strip()
        else:
            para_label = current_label
        for line in lines:
            if any(h.search(line) for h in heading_res):
                current_label = line.strip()

        tokens = para.split()
        n = len(tokens)
        if n <= max_tokens:
            if buf_tokens and buf_tokens + n > max_tokens:
                flush()
            if not buf_tokens:
                buf_label = para_label
            buf.append(para)
            buf_tokens += n
        else:
            flush()
            for i in range(0, n, max_tokens):
                run = tokens[i : i + max_tokens]
                if len(run) == max_tokens:
                    emit(" ".join(run), len(run), para_label)
                else:
                    buf = [" ".join(run)]
                    buf_tokens = len(run)
                    buf_label = para_label
    flush()
    return passages


def ingest_directory(
    corpus_dir: str | Path,
    *,
    max_tokens: int = DEFAULT_MAX_TOKENS,
    heading_patterns: Sequence[str] = DEFAULT_HEADING_PATTERNS,
    dosage_pattern: str = DEFAULT_DOSAGE_PATTERN,
) -> tuple[list[Document], list[Passage]]:
    """Extract and chunk every .pdf/.txt file in a directory.

    Files are processed in sorted filename order and passage ids are dense
    across the whole corpus. Documents with no extractable text are skipped
    with a warning on stderr.
    """
    corpus = Path(corpus_dir)
    if not corpus.is_dir():
        raise UnreadableFile(f"corpus directory {str(corpus)!r} does not exist")
    documents: list[Document] = []
    passages: list[Passage] = []
    for path in sorted(corpus.iterdir()):
        suffix = path.suffix.lower()
        if suffix == ".pdf":
            kind = "pdf"
        elif suffix in (".txt", ".text"):
            kind = "text"
        else:
            continue
        try:
            doc = extract_document(path, kind, dosage_pattern=dosage_pattern)
        except EmptyDocument:
            print(f"warning: skipping {path.name}: no extractable text", file=sys.stderr)
            continue
        documents.append(doc)
        passages.extend(
            chunk_passages(
                doc,
                max_tokens,
                heading_patterns=heading_patterns,
                start_id=len(passages),
            )
        )
    return documents, passages
