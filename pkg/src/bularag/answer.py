"""Grounded answering: prompt construction from retrieval hits and LLM
provider clients (content-generation style, chat-completions style, and a
file-scripted mock for hermetic runs).

The prompt template and rules force grounding: every context block carries
its medicine, source filename, and section, and the rules demand that
answers cite them and fall back to a fixed not-found sentence when the
context does not contain the answer.
"""

from __future__ import annotations

import os
import threading
import time
import uuid
from dataclasses import dataclass
from functools import lru_cache
from importlib import resources
from pathlib import Path

import httpx

from .embed import EmbeddingVector  # noqa: F401  (re-exported pipeline type)
from .errors import EmptyCompletion, ProviderError
from .index import IndexBundle
from .retrieve import RetrievalConfig, RetrievalHit, hybrid_search

NOT_FOUND_SENTENCE = "Não foi possível encontrar a resposta no material fornecido."

EMPTY_CONTEXT_PLACEHOLDER = "(nenhum trecho recuperado)"

DEFAULT_RULES = (
    "Você é um assistente que responde perguntas sobre medicamentos usando "
    "exclusivamente os trechos de bula listados no contexto abaixo.\n"
    "Regras:\n"
    "1. Responda somente com base no contexto fornecido; não use conhecimento externo.\n"
    "2. Em cada afirmação, cite o medicamento, o arquivo de origem e, quando "
    "disponível, a seção da bula.\n"
    "3. Se o contexto não contiver a resposta, responda exatamente: \"{not_found}\""
)


@dataclass(frozen=True)
class ProviderConfig:
    """Which LLM endpoint answers, and how failures are retried."""

    kind: str = "mock"  # gemini_style | openrouter_style | mock
    endpoint: str | None = None
    model: str = "default"
    api_key_env: str | None = None
    timeout_s: float = 30.0
    max_retries: int = 3
    backoff_s: float = 0.5
    script_path: str | None = None  # mock only
    max_concurrency: int = 4
    verbose: bool = False

    def __post_init__(self) -> None:
        if self.kind not in ("gemini_style", "openrouter_style", "mock"):
            raise ValueError(f"unknown provider kind {self.kind!r}")
        if self.timeout_s <= 0:
            raise ValueError("timeout_s must be > 0")
        if self.max_retries < 0:
            raise ValueError("max_retries must be >= 0")


@dataclass
class PromptBundle:
    """A rendered grounding prompt plus its structured pieces."""

    system_rules: str
    context_blocks: list[dict]
    question: str
    rendered: str
    body: str  # context + question without the rules (chat user message)


@dataclass
class Answer:
    text: str
    provider: str
    latency_s: float
    request_id: str


@lru_cache(maxsize=1)
def default_template() -> str:
    return (
        resources.files("bularag")
        .joinpath("data", "prompt_template.txt")
        .read_text(encoding="utf-8")
    )


def _render_block(i: int, block: dict) -> str:
    line = f"[{i}] Medicamento: {block['medicine']} | Arquivo: {block['source']}"
    if block.get("section_label"):
        line += f" | Seção: {block['section_label']}"
    return f"{line}\n{block['text']}"


def build_prompt(
    question: str,
    hits: list[RetrievalHit],
    bundle: IndexBundle,
    *,
    rules: str | None = None,
    template: str | None = None,
    not_found: str = NOT_FOUND_SENTENCE,
) -> PromptBundle:
    """Assemble the grounding prompt for a question and its retrieved hits.

    Hits appear as enumerated context blocks in retrieval order; an empty
    hit list renders the placeholder context so the not-found rule applies.
    """
    medicines = bundle.meta.get("medicines", {})
    sections = bundle.meta.get("sections", [])
    blocks = []
    for hit in hits:
        section = None
        if 0 <= hit.passage_id < len(sections):
            section = sections[hit.passage_id]
        blocks.append(
            {
                "medicine": medicines.get(hit.source, Path(hit.source).stem),
                "source": hit.source,
                "section_label": section,
                "text": hit.text,
            }
        )
    if blocks:
        context = "\n\n".join(_render_block(i + 1, b) for i, b in enumerate(blocks))
    else:
        context = EMPTY_CONTEXT_PLACEHOLDER
    rules_text = (rules or DEFAULT_RULES).format(not_found=not_found)
    template_text = template or default_template()
    rendered = template_text.format(rules=rules_text, context=context, question=question)
    body = template_text.format(rules="", context=context, question=question).strip()
    return PromptBundle(
        system_rules=rules_text,
        context_blocks=blocks,
        question=question,
        rendered=rendered,
        body=body,
    )


class _Transient(Exception):
    """Internal marker for retryable provider failures."""


class _BaseProvider:
    def __init__(self, cfg: ProviderConfig):
        self.cfg = cfg
        self._slots = threading.Semaphore(cfg.max_concurrency)

    def generate(self, prompt: PromptBundle) -> Answer:
        start = time.perf_counter()
        text, request_id = self._attempt_loop(prompt)
        latency = time.perf_counter() - start
        text = text.strip()
        if not text:
            raise EmptyCompletion(f"{self.cfg.kind} returned no text")
        if self.cfg.verbose:
            print(f"[{self.cfg.kind}] raw response: {text}")
        return Answer(
            text=text,
            provider=self.cfg.kind,
            latency_s=latency,
            request_id=request_id or uuid.uuid4().hex,
        )

    def _attempt_loop(self, prompt: PromptBundle) -> tuple[str, str | None]:
        attempts = self.cfg.max_retries + 1
        last: Exception | None = None
        for attempt in range(attempts):
            if attempt:
                time.sleep(self.cfg.backoff_s * 2 ** (attempt - 1))
            try:
                with self._slots:
                    return self._call(prompt)
            except _Transient as exc:
                last = exc
        raise ProviderError(
            f"{self.cfg.kind} failed after {attempts} attempts: {last}"
        )

    def _call(self, prompt: PromptBundle) -> tuple[str, str | None]:
        raise NotImplementedError

    def _api_key(self, default_env: str) -> str:
        env = self.cfg.api_key_env or default_env
        key = os.environ.get(env, "")
        if not key:
            raise ProviderError(f"no API key in environment variable {env!r}")
        return key

    def _post(self, url: str, payload: dict, headers: dict) -> dict:
        try:
            resp = httpx.post(url, json=payload, headers=headers, timeout=self.cfg.timeout_s)
        except httpx.HTTPError as exc:
            raise _Transient(f"transport failure: {exc}") from exc
        if resp.status_code >= 500:
            raise _Transient(f"HTTP {resp.status_code}")
        if resp.status_code != 200:
            raise ProviderError(f"HTTP {resp.status_code}: {resp.text[:200]}")
        try:
            return resp.json()
        except ValueError as exc:
            raise ProviderError(f"invalid JSON from provider: {exc}") from exc


class GeminiStyleProvider(_BaseProvider):
    """Single content-generation endpoint taking the full rendered prompt."""

    DEFAULT_ENDPOINT = (
        "https://generativelanguage.googleapis.com/v1beta/models/{model}:generateContent"
    )

    def _call(self, prompt: PromptBundle) -> tuple[str, str | None]:
        url = self.cfg.endpoint or self.DEFAULT_ENDPOINT.format(model=self.cfg.model)
        payload = {"contents": [{"role": "user", "parts": [{"text": prompt.rendered}]}]}
        headers = {"x-goog-api-key": self._api_key("GEMINI_API_KEY")}
        data = self._post(url, payload, headers)
        try:
            parts = data["candidates"][0]["content"]["parts"]
            text = "".join(p.get("text", "") for p in parts)
        except (KeyError, IndexError, TypeError) as exc:
            raise ProviderError(f"unexpected response shape: {exc}") from exc
        return text, data.get("responseId")


class OpenRouterStyleProvider(_BaseProvider):
    """Chat-completions endpoint: rules as system message, context+question
    as the user message."""

    DEFAULT_ENDPOINT = "https://openrouter.ai/api/v1/chat/completions"

    def _call(self, prompt: PromptBundle) -> tuple[str, str | None]:
        url = self.cfg.endpoint or self.DEFAULT_ENDPOINT
        payload = {
            "model": self.cfg.model,
            "messages": [
                {"role": "system", "content": prompt.system_rules},
                {"role": "user", "content": prompt.body},
            ],
        }
        headers = {"Authorization": f"Bearer {self._api_key('OPENROUTER_API_KEY')}"}
        data = self._post(url, payload, headers)
        try:
            text = data["choices"][0]["message"]["content"]
        except (KeyError, IndexError, TypeError) as exc:
            raise ProviderError(f"unexpected response shape: {exc}") from exc
        return text, data.get("id")


class MockProvider(_BaseProvider):
    """File-scripted provider for hermetic runs.

    The script is an ordered JSON list of ``{"match", "response", "status"}``
    entries; the first entry whose ``match`` substring occurs in the rendered
    prompt decides the call. Status >= 500 behaves like a transient provider
    failure, other non-200 statuses fail immediately.
    """

    def _script(self) -> list[dict]:
        import json

        if self.cfg.script_path:
            raw = Path(self.cfg.script_path).read_text(encoding="utf-8")
        else:
            raw = (
                resources.files("bularag")
                .joinpath("data", "mock_script.json")
                .read_text(encoding="utf-8")
            )
        script = json.loads(raw)
        if not isinstance(script, list):
            raise ProviderError("mock script must be a JSON list")
        return script

    def _call(self, prompt: PromptBundle) -> tuple[str, str | None]:
        for entry in self._script():
            if entry.get("match", "") in prompt.rendered:
                status = int(entry.get("status", 200))
                if status >= 500:
                    raise _Transient(f"scripted HTTP {status}")
                if status != 200:
                    raise ProviderError(f"scripted HTTP {status}")
                return str(entry.get("response", "")), entry.get("id")
        raise ProviderError("no mock script entry matched the prompt")


@lru_cache(maxsize=8)
def build_provider(cfg: ProviderConfig) -> _BaseProvider:
    if cfg.kind == "gemini_style":
        return GeminiStyleProvider(cfg)
    if cfg.kind == "openrouter_style":
        return OpenRouterStyleProvider(cfg)
    return MockProvider(cfg)


def generate_answer(prompt: PromptBundle, cfg: ProviderConfig) -> Answer:
    """Obtain an answer for a rendered prompt; text is whitespace-trimmed and
    latency covers the full provider exchange including retries."""
    return build_provider(cfg).generate(prompt)


def ask(
    question: str,
    bundle: IndexBundle,
    embedder,
    retriever_cfg: RetrievalConfig,
    provider_cfg: ProviderConfig,
    *,
    rules: str | None = None,
    template: str | None = None,
    not_found: str = NOT_FOUND_SENTENCE,
) -> dict:
    """Full question -> answer round trip.

    Returns ``{"answer": Answer, "hits": [RetrievalHit, ...]}`` so callers
    can display or log the evidence behind the answer.
    """
    hits = hybrid_search(
        question,
        bundle,
        embedder,
        top_k=retriever_cfg.top_k,
        threshold=retriever_cfg.threshold,
        hybrid=retriever_cfg.hybrid,
        config=retriever_cfg,
    )
    prompt = build_prompt(
        question, hits, bundle, rules=rules, template=template, not_found=not_found
    )
    return {"answer": generate_answer(prompt, provider_cfg), "hits": hits}
