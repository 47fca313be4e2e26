"""Minimal HTTP query service consumed by the web UI.

Endpoints:
    POST /api/ask    {"question": "..."} ->
                     {"answer", "hits": [{medicine, source, section, text,
                      score, origin}], "latency_s"}
    GET  /api/health -> {"status", "bundle_meta"}

The service is stateless between requests and shares one immutable bundle;
handlers are synchronous and run in the server's threadpool, so concurrent
questions execute safely in parallel.
"""

from __future__ import annotations

from pathlib import Path

from fastapi import FastAPI
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse
from pydantic import BaseModel

from .answer import ProviderConfig, ask
from .config import PromptConfig
from .errors import EmptyCompletion, ProviderError, RemoteUnavailable
from .index import IndexBundle
from .retrieve import RetrievalConfig


class AskRequest(BaseModel):
    question: str


def create_app(
    bundle: IndexBundle,
    embedder,
    retrieval_cfg: RetrievalConfig,
    provider_cfg: ProviderConfig,
    prompt_cfg: PromptConfig | None = None,
) -> FastAPI:
    prompt_cfg = prompt_cfg or PromptConfig()
    template = prompt_cfg.template_text()
    medicines = bundle.meta.get("medicines", {})
    sections = bundle.meta.get("sections", [])
    app = FastAPI(title="bularag query service")

    @app.exception_handler(RequestValidationError)
    async def malformed_request(request, exc):  # noqa: ARG001
        return JSONResponse({"detail": "malformed JSON body"}, status_code=400)

    @app.get("/api/health")
    def health() -> dict:
        return {"status": "ok", "bundle_meta": bundle.meta}

    @app.post("/api/ask")
    def api_ask(body: AskRequest):
        question = body.question.strip()
        if not question:
            return JSONResponse(
                {"detail": "question must be a non-empty string"}, status_code=400
            )
        try:
            result = ask(
                question,
                bundle,
                embedder,
                retrieval_cfg,
                provider_cfg,
                rules=prompt_cfg.rules,
                template=template,
                not_found=prompt_cfg.not_found,
            )
        except (ProviderError, RemoteUnavailable, EmptyCompletion) as exc:
            return JSONResponse({"detail": f"provider unavailable: {exc}"}, status_code=503)
        answer = result["answer"]
        hits = [
            {
                "medicine": medicines.get(h.source, Path(h.source).stem),
                "source": h.source,
                "section": (
                    sections[h.passage_id] if 0 <= h.passage_id < len(sections) else None
                ),
                "text": h.text,
                "score": h.score,
                "origin": h.origin,
            }
            for h in result["hits"]
        ]
        return {"answer": answer.text, "hits": hits, "latency_s": answer.latency_s}

    return app
