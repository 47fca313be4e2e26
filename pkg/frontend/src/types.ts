/** Wire types of the query service and the client-side session model. */

export type HitOrigin = "vector" | "keyword" | "regex";

/** One retrieved passage as returned by POST /api/ask. */
export interface Hit {
  medicine: string;
  source: string;
  section: string | null;
  text: string;
  score: number;
  origin: HitOrigin;
}

export interface AskResponse {
  answer: string;
  hits: Hit[];
  latency_s: number;
}

export interface HealthResponse {
  status: string;
  bundle_meta: Record<string, unknown>;
}

/** One completed question/answer exchange. Immutable once appended. */
export interface ChatTurn {
  readonly question: string;
  readonly answer: string;
  readonly hits: readonly Hit[];
  readonly latencyS: number;
  readonly timestamp: string;
}

export type SessionStatus = "idle" | "pending" | "error";

/**
 * Whole-session view state. `turns` is append-only; expanding a context
 * panel is tracked per turn index so turns themselves are never mutated.
 */
export interface SessionState {
  readonly status: SessionStatus;
  readonly turns: readonly ChatTurn[];
  readonly expanded: ReadonlySet<number>;
  readonly errorMessage: string | null;
  readonly lastFailedQuestion: string | null;
}
