// Thin client over the orchestrator's HTTP API and event stream.

import type {
  AnalyticsSnapshot,
  ConsoleEvent,
  DispatchRequest,
  DispatchResponse,
  KeywordsResponse,
  PublishedLog,
  ReceivedLog,
  RobotsResponse,
} from "./types.js";

export type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

async function asJson<T>(response: Response): Promise<T> {
  if (!response.ok) {
    let detail = `${response.status}`;
    try {
      const body = await response.json();
      if (body && typeof body.detail === "string") detail = body.detail;
    } catch {
      // non-JSON error body; status code is enough
    }
    throw new Error(`request failed: ${detail}`);
  }
  return (await response.json()) as T;
}

export class ConsoleApi {
  constructor(
    private readonly base: string = "",
    private readonly fetchImpl: FetchLike = (input, init) => fetch(input, init),
  ) {}

  private post<T>(path: string, body: unknown): Promise<T> {
    return this.fetchImpl(`${this.base}${path}`, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(body),
    }).then((r) => asJson<T>(r));
  }

  private get<T>(path: string): Promise<T> {
    return this.fetchImpl(`${this.base}${path}`).then((r) => asJson<T>(r));
  }

  async createSession(): Promise<string> {
    const body = await this.post<{ session_id: string }>("/sessions", {});
    return body.session_id;
  }

  submitKeywords(sessionId: string, text: string): Promise<KeywordsResponse> {
    return this.post(`/sessions/${sessionId}/keywords`, { text });
  }

  dispatch(sessionId: string, request: DispatchRequest): Promise<DispatchResponse> {
    return this.post(`/sessions/${sessionId}/dispatch`, request);
  }

  submitComment(sessionId: string, text: string): Promise<unknown> {
    return this.post(`/sessions/${sessionId}/comment`, { text });
  }

  analytics(): Promise<AnalyticsSnapshot> {
    return this.get("/analytics");
  }

  publishedLog(): Promise<PublishedLog> {
    return this.get("/logs/published");
  }

  receivedLog(): Promise<ReceivedLog> {
    return this.get("/logs/received");
  }

  robots(): Promise<RobotsResponse> {
    return this.get("/robots");
  }

  connectEvents(onEvent: (event: ConsoleEvent) => void): WebSocket {
    const url = this.base.replace(/^http/, "ws") + "/events";
    const socket = new WebSocket(url || "ws://" + location.host + "/events");
    socket.onmessage = (message: MessageEvent) => {
      try {
        onEvent(JSON.parse(message.data) as ConsoleEvent);
      } catch {
        // a malformed event is dropped, the stream continues
      }
    };
    return socket;
  }
}
