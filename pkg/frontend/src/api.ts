/** Thin fetch client for the query service JSON API. */

import type { AskResponse, HealthResponse } from "./types.js";

export class ApiError extends Error {
  /** HTTP status; 0 means the request never reached the server. */
  readonly status: number;

  constructor(status: number, message: string) {
    super(message);
    this.name = "ApiError";
    this.status = status;
  }
}

async function errorDetail(response: Response): Promise<string> {
  try {
    const body = (await response.json()) as { detail?: string };
    if (body && typeof body.detail === "string") {
      return body.detail;
    }
  } catch {
    // non-JSON error body; fall through to the status line
  }
  return `HTTP ${response.status}`;
}

export async function askQuestion(
  question: string,
  baseUrl = "",
): Promise<AskResponse> {
  let response: Response;
  try {
    response = await fetch(`${baseUrl}/api/ask`, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify({ question }),
    });
  } catch (err) {
    throw new ApiError(0, `network failure: ${String(err)}`);
  }
  if (!response.ok) {
    throw new ApiError(response.status, await errorDetail(response));
  }
  return (await response.json()) as AskResponse;
}

export async function fetchHealth(baseUrl = ""): Promise<HealthResponse> {
  let response: Response;
  try {
    response = await fetch(`${baseUrl}/api/health`);
  } catch (err) {
    throw new ApiError(0, `network failure: ${String(err)}`);
  }
  if (!response.ok) {
    throw new ApiError(response.status, await errorDetail(response));
  }
  return (await response.json()) as HealthResponse;
}
