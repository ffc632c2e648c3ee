// Gateway client. Everything here is read-only except submitRemedy.

import {
  PaletteJson,
  RemedyActionJson,
  RemedySubmitResult,
  SituationJson,
  StreamMessage,
  TaskJson,
} from "./types.js";

export class GatewayError extends Error {
  constructor(public status: number, public body: unknown) {
    super(`gateway returned ${status}`);
  }
}

export class GatewayClient {
  constructor(private base: string = "") {}

  private async getJson<T>(path: string): Promise<T> {
    const response = await fetch(this.base + path);
    if (!response.ok) {
      throw new GatewayError(response.status, await response.json().catch(() => null));
    }
    return (await response.json()) as T;
  }

  async plan(): Promise<{ seq: number; plan: TaskJson | null }> {
    return this.getJson("/api/plan");
  }

  async state(): Promise<{ seq: number; state: { facts: Record<string, unknown>; clock: number } }> {
    return this.getJson("/api/state");
  }

  async situations(status?: string): Promise<SituationJson[]> {
    const suffix = status ? `?status=${encodeURIComponent(status)}` : "";
    const body = await this.getJson<{ situations: SituationJson[] }>(
      `/api/situations${suffix}`,
    );
    return body.situations;
  }

  async situation(id: string): Promise<SituationJson> {
    return this.getJson(`/api/situations/${encodeURIComponent(id)}`);
  }

  async palette(): Promise<PaletteJson> {
    return this.getJson("/api/palette");
  }

  async librarySituations(name: string, context: Record<string, unknown>,
                          minScore = 0): Promise<unknown[]> {
    const params = new URLSearchParams({
      name,
      context: JSON.stringify(context),
      min_score: String(minScore),
    });
    const body = await this.getJson<{ results: unknown[] }>(
      `/api/library/situations?${params}`,
    );
    return body.results;
  }

  async submitRemedy(situationId: string,
                     remedy: RemedyActionJson[]): Promise<RemedySubmitResult> {
    const response = await fetch(
      `${this.base}/api/situations/${encodeURIComponent(situationId)}/remedy`,
      {
        method: "POST",
        headers: { "Content-Type": "application/json" },
        body: JSON.stringify(remedy),
      },
    );
    const body = await response.json().catch(() => null);
    if (!response.ok) {
      throw new GatewayError(response.status, body);
    }
    return body as RemedySubmitResult;
  }

  /**
   * Consume the server-sent event stream; resolves when the stream ends
   * (only happens when a limit is requested). Reconnection is the
   * caller's job so it can surface a stale banner first.
   */
  async readEvents(onMessage: (message: StreamMessage) => void,
                   options: { limit?: number; signal?: AbortSignal } = {}):
      Promise<void> {
    const suffix = options.limit ? `?limit=${options.limit}` : "";
    const response = await fetch(`${this.base}/api/events${suffix}`, {
      signal: options.signal,
    });
    if (!response.ok || response.body === null) {
      throw new GatewayError(response.status, null);
    }
    const reader = response.body.getReader();
    const decoder = new TextDecoder();
    let buffer = "";
    for (;;) {
      const { value, done } = await reader.read();
      if (done) break;
      buffer += decoder.decode(value, { stream: true });
      let index;
      while ((index = buffer.indexOf("\n\n")) >= 0) {
        const chunk = buffer.slice(0, index);
        buffer = buffer.slice(index + 2);
        for (const line of chunk.split("\n")) {
          if (line.startsWith("data: ")) {
            onMessage(JSON.parse(line.slice(6)) as StreamMessage);
          }
        }
      }
    }
  }
}
