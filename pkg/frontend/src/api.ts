// Thin fetch client. One in-flight mutation at a time is the caller's
// job; every POST carries a fresh request id so retries are idempotent.

import type { Screen, SessionReport, Snapshot } from "./types.js";

export class ApiError extends Error {
  constructor(
    public status: number,
    message: string,
  ) {
    super(message);
  }
}

function requestId(): string {
  if (typeof crypto !== "undefined" && "randomUUID" in crypto) {
    return crypto.randomUUID();
  }
  return `req-${Date.now()}-${Math.floor(Math.random() * 1e9)}`;
}

export class ApiClient {
  constructor(private baseUrl: string) {}

  private async call<T>(method: string, path: string, body?: unknown): Promise<T> {
    const response = await fetch(this.baseUrl + path, {
      method,
      headers: body === undefined ? {} : { "Content-Type": "application/json" },
      body: body === undefined ? undefined : JSON.stringify(body),
    });
    const payload = await response.json();
    if (!response.ok) {
      const detail =
        typeof payload === "object" && payload !== null && "error" in payload
          ? String((payload as { error: unknown }).error)
          : JSON.stringify(payload);
      throw new ApiError(response.status, detail);
    }
    return payload as T;
  }

  createSession(taskId: string, condition?: string): Promise<Snapshot> {
    return this.call("POST", "/sessions", {
      task_id: taskId,
      condition: condition ?? null,
      request_id: requestId(),
    });
  }

  next(sessionId: string): Promise<Screen> {
    return this.call("GET", `/sessions/${sessionId}/next`);
  }

  submitResponse(sessionId: string, profileId: string, decision: 0 | 1): Promise<Snapshot> {
    return this.call("POST", `/sessions/${sessionId}/responses`, {
      responses: [{ profile_id: profileId, decision }],
      request_id: requestId(),
    });
  }

  submitCheckTest(
    sessionId: string,
    answers: Record<string, number>,
  ): Promise<Snapshot & { passed: boolean }> {
    return this.call("POST", `/sessions/${sessionId}/checktest`, {
      answers,
      request_id: requestId(),
    });
  }

  submitAttributes(sessionId: string, phase: "pre" | "post", attributes: string[]): Promise<Snapshot> {
    return this.call("POST", `/sessions/${sessionId}/attributes`, {
      phase,
      attributes,
      request_id: requestId(),
    });
  }

  submitQuestionnaire(
    sessionId: string,
    phase: "pre" | "post",
    answers: Record<string, unknown>,
  ): Promise<Snapshot> {
    return this.call("POST", `/sessions/${sessionId}/questionnaire`, {
      phase,
      answers,
      request_id: requestId(),
    });
  }

  report(sessionId: string): Promise<SessionReport> {
    return this.call("GET", `/sessions/${sessionId}/report`);
  }
}
