/**
 * HTML rendering as pure string functions. Every value coming from the API
 * is escaped; source filenames are shown verbatim (escaped, never rewritten).
 */

import type { ChatTurn, Hit, SessionState } from "./types.js";

export function escapeHtml(value: string): string {
  return value
    .replaceAll("&", "&amp;")
    .replaceAll("<", "&lt;")
    .replaceAll(">", "&gt;")
    .replaceAll('"', "&quot;")
    .replaceAll("'", "&#39;");
}

export function renderHitCard(hit: Hit, showText: boolean): string {
  const section = hit.section
    ? `<span class="section-chip">${escapeHtml(hit.section)}</span>`
    : "";
  const text = showText
    ? `<p class="hit-text">${escapeHtml(hit.text)}</p>`
    : "";
  return `
    <div class="hit-card">
      <div class="hit-head">
        <span class="medicine">${escapeHtml(hit.medicine)}</span>
        <span class="source">${escapeHtml(hit.source)}</span>
        ${section}
        <span class="badge badge-${hit.origin}">${hit.origin}</span>
        <span class="score">${hit.score.toFixed(3)}</span>
      </div>
      ${text}
    </div>`;
}

export function renderTurn(turn: ChatTurn, index: number, expanded: boolean): string {
  const hits = turn.hits.length
    ? turn.hits.map((hit) => renderHitCard(hit, expanded)).join("\n")
    : '<p class="no-hits">(nenhum trecho recuperado)</p>';
  const toggleLabel = expanded ? "ocultar trechos" : "mostrar trechos";
  return `
    <article class="turn" data-turn="${index}">
      <div class="question">${escapeHtml(turn.question)}</div>
      <div class="answer">${escapeHtml(turn.answer)}</div>
      <div class="meta">
        <span class="latency">${turn.latencyS.toFixed(2)}s</span>
        <span class="timestamp">${escapeHtml(turn.timestamp)}</span>
        <button type="button" class="toggle" data-action="toggle" data-turn="${index}">
          ${toggleLabel}
        </button>
      </div>
      <div class="hits" data-expanded="${expanded}">
        ${hits}
      </div>
    </article>`;
}

export function renderErrorBanner(state: SessionState): string {
  if (state.status !== "error" || !state.errorMessage) {
    return "";
  }
  const retry = state.lastFailedQuestion
    ? `<button type="button" data-action="retry">tentar novamente</button>`
    : "";
  return `
    <div class="banner banner-error" role="alert">
      <span>${escapeHtml(state.errorMessage)}</span>
      ${retry}
    </div>`;
}

export function renderApp(state: SessionState): string {
  const turns = state.turns
    .map((turn, index) => renderTurn(turn, index, state.expanded.has(index)))
    .join("\n");
  const pending =
    state.status === "pending" ? '<div class="pending">consultando as bulas…</div>' : "";
  const disabled = state.status === "pending" ? "disabled" : "";
  return `
    <main class="chat">
      <section class="history">
        ${turns}
        ${pending}
      </section>
      ${renderErrorBanner(state)}
      <form class="ask-form" data-action="ask">
        <input type="text" name="question" placeholder="Pergunte algo sobre as bulas…"
               autocomplete="off" ${disabled} />
        <button type="submit" ${disabled}>perguntar</button>
      </form>
    </main>`;
}
