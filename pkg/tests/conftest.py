"""Shared fixtures: the synthetic bula corpus, a prebuilt bundle, and a
scripted local HTTP server for exercising the real network clients."""

from __future__ import annotations

import json
import threading
from contextlib import contextmanager
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from pathlib import Path

import pytest

from bularag.cli import main as cli_main
from bularag.embed import DeterministicEmbedder, EmbedderSpec
from bularag.index import IndexBundle, build_index, load_bundle
from bularag.ingest import ingest_directory

FIXTURES = Path(__file__).parent / "fixtures"
CORPUS_DIR = FIXTURES / "corpus"


@pytest.fixture(scope="session")
def embedder() -> DeterministicEmbedder:
    return DeterministicEmbedder(EmbedderSpec())


def make_bundle(
    texts: list[str],
    embedder,
    sources: list[str] | None = None,
    medicines: dict | None = None,
    sections: list | None = None,
) -> IndexBundle:
    """Build an in-memory bundle straight from passage texts."""
    sources = sources or [f"doc{i}.txt" for i in range(len(texts))]
    return IndexBundle(
        index=build_index(embedder.embed(texts)),
        passages=list(texts),
        sources=sources,
        meta={
            "embedder": embedder.fingerprint(),
            "normalized": True,
            "created_at": "2025-01-01T00:00:00+00:00",
            "medicines": medicines or {},
            "sections": sections or [None] * len(texts),
        },
    )


@pytest.fixture(scope="session")
def corpus_bundle_path(tmp_path_factory) -> Path:
    """Bundle built from the fixture corpus via the real CLI pipeline."""
    workdir = tmp_path_factory.mktemp("pipeline")
    manifest = workdir / "manifest.jsonl"
    bundle_path = workdir / "corpus.brag"
    assert cli_main(["ingest", str(CORPUS_DIR), "-o", str(manifest)]) == 0
    assert cli_main(["index", str(manifest), "-o", str(bundle_path)]) == 0
    return bundle_path


@pytest.fixture(scope="session")
def corpus_bundle(corpus_bundle_path) -> IndexBundle:
    return load_bundle(corpus_bundle_path)


@pytest.fixture(scope="session")
def corpus_passages():
    _, passages = ingest_directory(CORPUS_DIR)
    return passages


@contextmanager
def stub_server(script: list[tuple[int, dict]]):
    """Local HTTP server answering POSTs from a scripted (status, payload)
    list; the last entry repeats. Requests are logged on ``server.requests``."""

    class Handler(BaseHTTPRequestHandler):
        def do_POST(self):  # noqa: N802  (http.server API)
            length = int(self.headers.get("Content-Length") or 0)
            body = self.rfile.read(length)
            server = self.server
            server.requests.append(json.loads(body) if body else None)
            status, payload = server.script[
                min(len(server.requests) - 1, len(server.script) - 1)
            ]
            data = json.dumps(payload).encode("utf-8")
            self.send_response(status)
            self.send_header("Content-Type", "application/json")
            self.send_header("Content-Length", str(len(data)))
            self.end_headers()
            self.wfile.write(data)

        def log_message(self, *args):
            pass

    server = ThreadingHTTPServer(("127.0.0.1", 0), Handler)
    server.script = script
    server.requests = []
    thread = threading.Thread(target=server.serve_forever, daemon=True)
    thread.start()
    try:
        yield server, f"http://127.0.0.1:{server.server_address[1]}"
    finally:
        server.shutdown()
        server.server_close()


def write_mock_script(path: Path, entries: list[dict]) -> Path:
    path.write_text(json.dumps(entries, ensure_ascii=False), encoding="utf-8")
    return path
