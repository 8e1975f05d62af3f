/** Thin typed client for the session service. */

import type {
  AnswerResult,
  LearnedRow,
  QueryPayload,
  SessionPayload,
} from "./types.js";

export class ApiError extends Error {
  constructor(
    public readonly status: number,
    public readonly code: string,
    message: string,
  ) {
    super(message);
  }
}

export type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;

export interface CreateSessionOptions {
  builtin?: string;
  problem?: string;
  method?: string;
  guide?: string;
  seed?: number;
  cutoff?: number | null;
  params?: Record<string, unknown>;
}

export class Client {
  constructor(
    private readonly base: string,
    private readonly fetchImpl: FetchLike = (u, i) => fetch(u, i),
  ) {}

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    const resp = await this.fetchImpl(this.base + path, init);
    let body: unknown = null;
    try {
      body = await resp.json();
    } catch {
      /* non-JSON body handled below */
    }
    if (!resp.ok) {
      const err = (body ?? {}) as { code?: string; message?: string };
      throw new ApiError(
        resp.status,
        err.code ?? "UNKNOWN",
        err.message ?? `request failed with status ${resp.status}`,
      );
    }
    if (body === null) {
      throw new ApiError(resp.status, "BAD_PAYLOAD", "response was not JSON");
    }
    return body as T;
  }

  createSession(opts: CreateSessionOptions): Promise<{ id: string }> {
    return this.request("/sessions", {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify(opts),
    });
  }

  getSession(id: string): Promise<SessionPayload> {
    return this.request(`/sessions/${id}`);
  }

  getQuery(id: string): Promise<QueryPayload> {
    return this.request(`/sessions/${id}/query`);
  }

  postAnswer(id: string, queryId: number, yes: boolean): Promise<AnswerResult> {
    return this.request(`/sessions/${id}/answer`, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify({ query_id: queryId, answer: yes ? "yes" : "no" }),
    });
  }

  getLearned(id: string): Promise<LearnedRow[]> {
    return this.request(`/sessions/${id}/learned`);
  }
}
