// Thin typed client for the review service. The fetch function is
// injectable so tests can stand in a fake server.

import type { Decision, QueueView, SessionSummary } from "./types.js";

export class ApiError extends Error {
  status: number;
  detail: string;

  constructor(status: number, detail: string) {
    super(`HTTP ${status}: ${detail}`);
    this.status = status;
    this.detail = detail;
  }
}

type FetchFn = (url: string, init?: RequestInit) => Promise<Response>;

export class ApiClient {
  private base: string;
  private fetchFn: FetchFn;
  private token: string | null;

  constructor(base = "", fetchFn?: FetchFn, token: string | null = null) {
    this.base = base.replace(/\/$/, "");
    this.fetchFn = fetchFn ?? ((u, i) => fetch(u, i));
    this.token = token;
  }

  private headers(json: boolean): Record<string, string> {
    const h: Record<string, string> = {};
    if (json) h["Content-Type"] = "application/json";
    if (this.token) h["Authorization"] = `Bearer ${this.token}`;
    return h;
  }

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    let resp: Response;
    try {
      resp = await this.fetchFn(this.base + path, init);
    } catch (err) {
      throw new ApiError(0, String(err));
    }
    let body: unknown = null;
    try {
      body = await resp.json();
    } catch {
      // some proxies return empty bodies on errors, keep the status
    }
    if (!resp.ok) {
      let detail = resp.statusText || "request failed";
      if (body && typeof body === "object" && "detail" in body) {
        const raw = (body as { detail: unknown }).detail;
        detail = typeof raw === "string" ? raw : JSON.stringify(raw);
      }
      throw new ApiError(resp.status, detail);
    }
    return body as T;
  }

  getSession(id: string): Promise<SessionSummary> {
    return this.request(`/api/session/${encodeURIComponent(id)}`, {
      headers: this.headers(false),
    });
  }

  getQueue(id: string): Promise<QueueView> {
    return this.request(`/api/session/${encodeURIComponent(id)}/queue`, {
      headers: this.headers(false),
    });
  }

  postLabel(id: string, bundle: string, decision: Decision):
      Promise<SessionSummary> {
    return this.request(`/api/session/${encodeURIComponent(id)}/label`, {
      method: "POST",
      headers: this.headers(true),
      body: JSON.stringify({ bundle, decision }),
    });
  }

  postAdvance(id: string): Promise<SessionSummary> {
    return this.request(`/api/session/${encodeURIComponent(id)}/advance`, {
      method: "POST",
      headers: this.headers(false),
    });
  }
}
