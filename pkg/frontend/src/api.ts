import type { ApproveResponse, AssistantTurn, CartSnapshot, UserProfile } from "./types.js";

/** Server error body: stable code, human message, retry hint. */
export class ApiError extends Error {
  constructor(
    readonly code: string,
    message: string,
    readonly retryable: boolean,
    readonly status: number,
  ) {
    super(message);
    this.name = "ApiError";
  }
}

async function parseError(response: Response): Promise<ApiError> {
  try {
    const body = await response.json();
    return new ApiError(body.code ?? "unknown", body.message ?? response.statusText,
      Boolean(body.retryable), response.status);
  } catch {
    return new ApiError("unknown", response.statusText, response.status >= 500, response.status);
  }
}

/** Thin fetch wrapper over the session API; configuration is the base URL. */
export class ApiClient {
  constructor(readonly baseUrl: string) {}

  private async request<T>(method: string, path: string, body?: unknown): Promise<T> {
    let response: Response;
    try {
      response = await fetch(`${this.baseUrl}${path}`, {
        method,
        headers: body === undefined ? undefined : { "content-type": "application/json" },
        body: body === undefined ? undefined : JSON.stringify(body),
      });
    } catch (err) {
      throw new ApiError("network", `cannot reach ${this.baseUrl}: ${String(err)}`, true, 0);
    }
    if (!response.ok) {
      throw await parseError(response);
    }
    return (await response.json()) as T;
  }

  async createSession(profile: UserProfile): Promise<string> {
    const body = await this.request<{ session_id: string }>("POST", "/sessions", { profile });
    return body.session_id;
  }

  postMessage(sessionId: string, text: string): Promise<AssistantTurn> {
    return this.request<AssistantTurn>("POST", `/sessions/${sessionId}/messages`, { text });
  }

  getCart(sessionId: string): Promise<CartSnapshot> {
    return this.request<CartSnapshot>("GET", `/sessions/${sessionId}/cart`);
  }

  approve(sessionId: string): Promise<ApproveResponse> {
    return this.request<ApproveResponse>("POST", `/sessions/${sessionId}/approve`);
  }

  healthz(): Promise<{ ok: boolean; catalog_version: number; index_version: number }> {
    return this.request("GET", "/healthz");
  }
}

/** The slice of ApiClient the store needs; tests substitute a fake. */
export interface SessionApi {
  createSession(profile: UserProfile): Promise<string>;
  postMessage(sessionId: string, text: string): Promise<AssistantTurn>;
  approve(sessionId: string): Promise<ApproveResponse>;
}
