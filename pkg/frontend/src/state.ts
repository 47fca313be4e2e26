/**
 * Session state machine: idle -> pending -> idle | error.
 *
 * All transitions are pure functions over an immutable SessionState, so the
 * UI can re-render from scratch after every transition. History is
 * append-only: a failed request never removes or edits earlier turns.
 */

import { ApiError } from "./api.js";
import type { AskResponse, SessionState } from "./types.js";

export function initialState(): SessionState {
  return {
    status: "idle",
    turns: [],
    expanded: new Set(),
    errorMessage: null,
    lastFailedQuestion: null,
  };
}

/** A question is submittable when non-empty after trim and nothing is in flight. */
export function canSubmit(state: SessionState, text: string): boolean {
  return state.status !== "pending" && text.trim().length > 0;
}

export function beginSubmit(state: SessionState, question: string): SessionState {
  return {
    ...state,
    status: "pending",
    errorMessage: null,
    lastFailedQuestion: question,
  };
}

export function completeSubmit(
  state: SessionState,
  question: string,
  response: AskResponse,
  timestamp: string,
): SessionState {
  return {
    ...state,
    status: "idle",
    errorMessage: null,
    lastFailedQuestion: null,
    turns: [
      ...state.turns,
      {
        question,
        answer: response.answer,
        hits: response.hits,
        latencyS: response.latency_s,
        timestamp,
      },
    ],
  };
}

export function failSubmit(state: SessionState, question: string, error: unknown): SessionState {
  const message =
    error instanceof ApiError
      ? error.status === 0
        ? `Falha de rede: ${error.message}`
        : `Serviço indisponível (HTTP ${error.status}): ${error.message}`
      : `Erro inesperado: ${String(error)}`;
  return {
    ...state,
    status: "error",
    errorMessage: message,
    lastFailedQuestion: question,
  };
}

/** Pure view state: flip the context panel of one turn; no refetch. */
export function toggleContext(state: SessionState, turnIndex: number): SessionState {
  const expanded = new Set(state.expanded);
  if (expanded.has(turnIndex)) {
    expanded.delete(turnIndex);
  } else {
    expanded.add(turnIndex);
  }
  return { ...state, expanded };
}

/**
 * Submit a question end-to-end. `onTransition` fires after each state
 * change (pending, then idle or error) so callers can re-render.
 */
export async function submitQuestion(
  state: SessionState,
  text: string,
  api: (question: string) => Promise<AskResponse>,
  onTransition?: (state: SessionState) => void,
  now: () => string = () => new Date().toISOString(),
): Promise<SessionState> {
  if (!canSubmit(state, text)) {
    return state;
  }
  const question = text.trim();
  let current = beginSubmit(state, question);
  onTransition?.(current);
  try {
    const response = await api(question);
    current = completeSubmit(current, question, response, now());
  } catch (error) {
    current = failSubmit(current, question, error);
  }
  onTransition?.(current);
  return current;
}
